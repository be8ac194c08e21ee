#include "handkit/motion.hpp"

#include <cmath>
#include <fmt/format.h>

#include "handkit/error.hpp"

namespace handkit {

namespace {

void check_shape(double fps, const std::vector<Vec3>& points)
{
  if (!(fps > 0.0) || !std::isfinite(fps))
    throw ValidationError("fps must be positive");
  if (points.empty() || points.size() % kJointsTotal != 0)
    throw DataError(fmt::format("expected a positive multiple of {} points, got {}", kJointsTotal, points.size()));
}

} // namespace

MotionSequence::MotionSequence(double fps, std::vector<Vec3> points, std::string source_id)
  : fps_(fps), points_(std::move(points)), source_id_(std::move(source_id))
{
  check_shape(fps_, points_);
  for (std::size_t i = 0; i < points_.size(); ++i)
    if (!points_[i].allFinite())
      throw DataError(fmt::format("non-finite coordinate at frame {}", i / kJointsTotal));
}

MotionSequence MotionSequence::unchecked(double fps, std::vector<Vec3> points, std::string source_id)
{
  check_shape(fps, points);
  MotionSequence seq;
  seq.fps_ = fps;
  seq.points_ = std::move(points);
  seq.source_id_ = std::move(source_id);
  return seq;
}

MotionSequence MotionSequence::constant(double fps, std::size_t frames, std::span<const Vec3> pose,
                                        std::string source_id)
{
  if (pose.size() != static_cast<std::size_t>(kJointsTotal))
    throw ValidationError("pose must have 42 joints");
  std::vector<Vec3> pts;
  pts.reserve(frames * kJointsTotal);
  for (std::size_t f = 0; f < frames; ++f)
    pts.insert(pts.end(), pose.begin(), pose.end());
  return MotionSequence(fps, std::move(pts), std::move(source_id));
}

MotionSequence MotionSequence::slice(std::size_t begin, std::size_t end) const
{
  if (begin >= end || end > num_frames())
    throw ValidationError(fmt::format("invalid slice [{}, {}) of {} frames", begin, end, num_frames()));
  std::vector<Vec3> pts(points_.begin() + begin * kJointsTotal, points_.begin() + end * kJointsTotal);
  return unchecked(fps_, std::move(pts), source_id_);
}

bool MotionSequence::all_finite() const
{
  for (const auto& p : points_)
    if (!p.allFinite())
      return false;
  return true;
}

RigidTransform::RigidTransform(const Mat3& rotation, const Vec3& translation)
  : rotation_(rotation), translation_(translation)
{
  constexpr double tol = 1e-9;
  if (!rotation.allFinite() || !translation.allFinite())
    throw ValidationError("rigid transform must be finite");
  if ((rotation.transpose() * rotation - Mat3::Identity()).cwiseAbs().maxCoeff() > tol)
    throw ValidationError("rotation is not orthonormal");
  if (std::abs(rotation.determinant() - 1.0) > tol)
    throw ValidationError("rotation must have determinant +1");
}

MotionSequence RigidTransform::apply(const MotionSequence& seq) const
{
  std::vector<Vec3> pts;
  pts.reserve(seq.points().size());
  for (const auto& p : seq.points())
    pts.push_back(apply(p));
  return MotionSequence::unchecked(seq.fps(), std::move(pts), seq.source_id());
}

RigidTransform RigidTransform::inverse() const
{
  RigidTransform inv;
  inv.rotation_ = rotation_.transpose();
  inv.translation_ = -(inv.rotation_ * translation_);
  return inv;
}

RigidTransform operator*(const RigidTransform& a, const RigidTransform& b)
{
  RigidTransform out;
  out.rotation_ = a.rotation_ * b.rotation_;
  out.translation_ = a.rotation_ * b.translation_ + a.translation_;
  return out;
}

MotionSequence resample(const MotionSequence& seq, double target_fps)
{
  if (!(target_fps > 0.0) || !std::isfinite(target_fps))
    throw ValidationError("target fps must be positive");
  if (target_fps == seq.fps())
    return seq;
  const std::size_t n = seq.num_frames();
  if (n < 2)
    throw DataError("cannot resample single frame");

  const double span = static_cast<double>(n - 1);
  const auto out_frames =
      std::max<std::size_t>(2, static_cast<std::size_t>(std::llround(span * target_fps / seq.fps())) + 1);
  const double denom = static_cast<double>(out_frames - 1);

  std::vector<Vec3> pts;
  pts.reserve(out_frames * kJointsTotal);
  for (std::size_t i = 0; i < out_frames; ++i)
  {
    // Position in source frames; exact at both ends.
    const double u = (i + 1 == out_frames) ? span : static_cast<double>(i) * span / denom;
    const auto lo = std::min(static_cast<std::size_t>(std::floor(u)), n - 1);
    const std::size_t hi = std::min(lo + 1, n - 1);
    const double w = u - static_cast<double>(lo);
    const auto a = seq.frame(lo);
    const auto b = seq.frame(hi);
    for (int j = 0; j < kJointsTotal; ++j)
      pts.push_back(w == 0.0 ? a[j] : Vec3((1.0 - w) * a[j] + w * b[j]));
  }
  return MotionSequence::unchecked(target_fps, std::move(pts), seq.source_id());
}

Canonicalized canonicalize(const MotionSequence& seq)
{
  const Vec3& lw = seq.at(0, Hand::Left, kWrist);
  const Vec3& rw = seq.at(0, Hand::Right, kWrist);
  const int mid_tip = joint_index(Finger::Middle, JointClass::Tip);
  const Vec3 forward =
      0.5 * ((seq.at(0, Hand::Left, mid_tip) - lw) + (seq.at(0, Hand::Right, mid_tip) - rw));

  const Vec3 across = rw - lw;
  if (!across.allFinite() || !forward.allFinite() || across.norm() < 1e-12)
    throw DataError("degenerate canonical frame");
  const Vec3 x = across.normalized();
  const Vec3 y_raw = forward - forward.dot(x) * x;
  // Angle between `forward` and the wrist axis below 1e-6 rad.
  if (forward.norm() < 1e-12 || y_raw.norm() < std::sin(1e-6) * forward.norm())
    throw DataError("degenerate canonical frame");
  const Vec3 y = y_raw.normalized();
  const Vec3 z = x.cross(y);

  Mat3 r;
  r.row(0) = x.transpose();
  r.row(1) = y.transpose();
  r.row(2) = z.transpose();
  const Vec3 origin = 0.5 * (lw + rw);
  RigidTransform t(r, -(r * origin));
  return {t.apply(seq), t};
}

double angle_degrees(const Vec3& a, const Vec3& b)
{
  return std::atan2(a.cross(b).norm(), a.dot(b)) * 180.0 / M_PI;
}

} // namespace handkit
