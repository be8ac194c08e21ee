#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

#include "handkit/skeleton.hpp"

namespace handkit {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

inline constexpr double kCanonicalFps = 30.0;

/// F frames of both hands' 21 joints, in meters. Hand order is always
/// [left, right]; within a frame joints are stored left 0..20 then right 0..20.
class MotionSequence
{
public:
  MotionSequence() = default;

  /// Validates: fps > 0, at least one frame, point count a multiple of 42,
  /// all coordinates finite.
  MotionSequence(double fps, std::vector<Vec3> points, std::string source_id = {});

  /// Same as the checked constructor but accepts non-finite coordinates. Used
  /// for raw streams that still need defect screening.
  static MotionSequence unchecked(double fps, std::vector<Vec3> points, std::string source_id = {});

  /// A sequence of `frames` copies of `pose` (42 points).
  static MotionSequence constant(double fps, std::size_t frames, std::span<const Vec3> pose,
                                 std::string source_id = {});

  double fps() const { return fps_; }
  std::size_t num_frames() const { return points_.size() / kJointsTotal; }
  const std::string& source_id() const { return source_id_; }

  const Vec3& at(std::size_t frame, Hand hand, int joint) const
  {
    return points_[frame * kJointsTotal + global_joint(hand, joint)];
  }

  /// All 42 joints of one frame.
  std::span<const Vec3> frame(std::size_t f) const
  {
    return {points_.data() + f * kJointsTotal, static_cast<std::size_t>(kJointsTotal)};
  }

  std::span<const Vec3> hand(std::size_t f, Hand h) const
  {
    return frame(f).subspan(static_cast<std::size_t>(h) * kJointsPerHand, kJointsPerHand);
  }

  std::span<const Vec3> points() const { return points_; }

  /// Frames [begin, end) as a new sequence with the same fps.
  MotionSequence slice(std::size_t begin, std::size_t end) const;

  bool all_finite() const;

  friend bool operator==(const MotionSequence&, const MotionSequence&) = default;

private:
  double fps_ = kCanonicalFps;
  std::vector<Vec3> points_;
  std::string source_id_;
};

/// Proper rigid motion p -> R p + t.
class RigidTransform
{
public:
  RigidTransform() = default;
  /// Throws ValidationError unless R is orthonormal with det +1 (within 1e-9).
  RigidTransform(const Mat3& rotation, const Vec3& translation);

  static RigidTransform identity() { return {}; }

  const Mat3& rotation() const { return rotation_; }
  const Vec3& translation() const { return translation_; }

  Vec3 apply(const Vec3& p) const { return rotation_ * p + translation_; }
  MotionSequence apply(const MotionSequence& seq) const;
  RigidTransform inverse() const;
  /// (a * b).apply(p) == a.apply(b.apply(p))
  friend RigidTransform operator*(const RigidTransform& a, const RigidTransform& b);

private:
  Mat3 rotation_ = Mat3::Identity();
  Vec3 translation_ = Vec3::Zero();
};

/// Per-joint linear interpolation onto a new frame rate. The first and last
/// frames are kept exactly; the output has round((F-1) * target / fps) + 1
/// frames spread evenly over the source duration.
MotionSequence resample(const MotionSequence& seq, double target_fps);

struct Canonicalized
{
  MotionSequence sequence;
  RigidTransform transform;
};

/// Applies one rigid transform to the whole sequence so that in frame 0 the
/// wrists' midpoint is the origin, +x runs from the left to the right wrist,
/// +y follows the mean wrist-to-middle-tip direction and +z = x cross y.
Canonicalized canonicalize(const MotionSequence& seq);

/// Unsigned angle between two non-zero vectors in degrees, accurate near 0
/// and 180.
double angle_degrees(const Vec3& a, const Vec3& b);

} // namespace handkit
