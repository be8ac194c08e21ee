#include "handkit/synthetic.hpp"

#include <cmath>

#include "handkit/error.hpp"
#include "handkit/random.hpp"

namespace handkit::synthetic {

namespace {

constexpr double kDegToRad = M_PI / 180.0;

// Right hand, meters: MCP positions in the palm plane and segment lengths
// (proximal, middle, distal).
constexpr std::array<std::array<double, 2>, 5> kMcp{{
    {-0.032, 0.030},
    {-0.025, 0.085},
    {-0.006, 0.090},
    {0.012, 0.086},
    {0.028, 0.076},
}};
constexpr std::array<std::array<double, 3>, 5> kSegments{{
    {0.040, 0.032, 0.026},
    {0.045, 0.027, 0.022},
    {0.050, 0.030, 0.024},
    {0.046, 0.028, 0.023},
    {0.036, 0.022, 0.020},
}};

Vec3 rotate(const Vec3& v, const Vec3& axis, double degrees)
{
  return axis_rotation(axis, degrees) * v;
}

} // namespace

Mat3 axis_rotation(const Vec3& axis, double degrees)
{
  return Eigen::AngleAxisd(degrees * kDegToRad, axis.normalized()).toRotationMatrix();
}

std::array<Vec3, kJointsPerHand> hand_local(Hand hand, const HandPose& pose, double scale)
{
  if (!(scale > 0.0))
    throw ValidationError("hand scale must be positive");
  const Vec3 up(0, 0, 1);
  std::array<Vec3, kJointsPerHand> j{};
  j[kWrist] = Vec3::Zero();
  for (int f = 0; f < kNumFingers; ++f)
  {
    const auto& fp = pose.fingers[f];
    const Vec3 mcp(kMcp[f][0], kMcp[f][1], 0.0);
    Vec3 dir = rotate(mcp.normalized(), up, fp.spread_deg);
    const Vec3 flex_axis = up.cross(dir).normalized();
    Vec3 p = mcp * scale;
    j[joint_index(static_cast<Finger>(f), JointClass::Mcp)] = p;
    double bend = 0.0;
    for (int s = 0; s < 3; ++s)
    {
      bend += fp.flex_deg[s];
      p += rotate(dir, flex_axis, bend) * (kSegments[f][s] * scale);
      j[1 + 4 * f + 1 + s] = p;
    }
  }
  if (hand == Hand::Left)
    for (auto& p : j)
      p.x() = -p.x();
  return j;
}

std::array<Vec3, kJointsTotal> bimanual_frame(const HandPose& left_pose, const HandPose& right_pose,
                                              const RigidTransform& left, const RigidTransform& right,
                                              double scale)
{
  std::array<Vec3, kJointsTotal> out{};
  const auto l = hand_local(Hand::Left, left_pose, scale);
  const auto r = hand_local(Hand::Right, right_pose, scale);
  for (int i = 0; i < kJointsPerHand; ++i)
  {
    out[global_joint(Hand::Left, i)] = left.apply(l[i]);
    out[global_joint(Hand::Right, i)] = right.apply(r[i]);
  }
  return out;
}

std::array<Vec3, kJointsTotal> rest_frame(double scale)
{
  return bimanual_frame({}, {}, RigidTransform(Mat3::Identity(), Vec3(-0.15, 0, 0)),
                        RigidTransform(Mat3::Identity(), Vec3(0.15, 0, 0)), scale);
}

Mat3 random_rotation(std::uint64_t seed)
{
  Rng rng(seed);
  std::normal_distribution<double> normal;
  Eigen::Quaterniond q;
  do
  {
    q = Eigen::Quaterniond(normal(rng), normal(rng), normal(rng), normal(rng));
  } while (q.norm() < 1e-6);
  q.normalize();
  return q.toRotationMatrix();
}

MotionSequence active_motion(std::size_t frames, std::uint64_t seed, const ActiveMotionOptions& opts)
{
  if (frames == 0)
    throw ValidationError("active motion needs at least one frame");
  if (!(opts.fps > 0.0) || !(opts.min_separation > 0.0) || opts.max_separation < opts.min_separation)
    throw ValidationError("invalid active motion options");
  Rng rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto between = [&](double lo, double hi) { return lo + (hi - lo) * unit(rng); };

  struct Wave
  {
    double base, amp, freq, phase;
    double at(double t) const { return base + amp * std::sin(2.0 * M_PI * freq * t + phase); }
  };
  auto wave = [&](double base, double amp) {
    return Wave{base, amp, between(opts.min_frequency_hz, opts.max_frequency_hz), between(0.0, 2.0 * M_PI)};
  };

  std::array<std::array<std::array<Wave, 3>, 5>, 2> flex{};
  std::array<std::array<Wave, 5>, 2> spread{};
  for (int h = 0; h < 2; ++h)
    for (int f = 0; f < 5; ++f)
    {
      spread[h][f] = wave(0.0, between(0.0, 6.0));
      for (int s = 0; s < 3; ++s)
      {
        const double amp = between(opts.min_flex_amplitude_deg, opts.max_flex_amplitude_deg);
        flex[h][f][s] = wave(amp + between(0.0, 10.0), amp);
      }
    }
  const double sep_mid = 0.5 * (opts.min_separation + opts.max_separation);
  const double sep_amp = 0.5 * (opts.max_separation - opts.min_separation);
  const Wave separation = wave(sep_mid, sep_amp);
  const std::array<Wave, 3> drift{wave(0.0, 0.05), wave(0.0, 0.05), wave(0.0, 0.04)};
  std::array<std::array<Wave, 2>, 2> tilt{};
  for (int h = 0; h < 2; ++h)
    tilt[h] = {wave(0.0, between(5.0, 20.0)), wave(0.0, between(5.0, 20.0))};
  const double scale = between(0.9, 1.1);

  std::vector<Vec3> pts(frames * kJointsTotal);
  for (std::size_t i = 0; i < frames; ++i)
  {
    const double t = static_cast<double>(i) / opts.fps;
    std::array<HandPose, 2> poses{};
    for (int h = 0; h < 2; ++h)
      for (int f = 0; f < 5; ++f)
      {
        poses[h].fingers[f].spread_deg = spread[h][f].at(t);
        for (int s = 0; s < 3; ++s)
          poses[h].fingers[f].flex_deg[s] = flex[h][f][s].at(t);
      }
    const Vec3 center(drift[0].at(t), drift[1].at(t), drift[2].at(t));
    const double half = 0.5 * separation.at(t);
    std::array<RigidTransform, 2> place{RigidTransform::identity(), RigidTransform::identity()};
    for (int h = 0; h < 2; ++h)
    {
      const Mat3 r = axis_rotation(Vec3::UnitZ(), tilt[h][0].at(t)) * axis_rotation(Vec3::UnitX(), tilt[h][1].at(t));
      place[h] = RigidTransform(r, center + Vec3(h == 0 ? -half : half, 0.0, 0.0));
    }
    const auto frame = bimanual_frame(poses[0], poses[1], place[0], place[1], scale);
    std::copy(frame.begin(), frame.end(), pts.begin() + static_cast<std::ptrdiff_t>(i * kJointsTotal));
  }
  return MotionSequence(opts.fps, std::move(pts), "synthetic-" + std::to_string(seed));
}

} // namespace handkit::synthetic
