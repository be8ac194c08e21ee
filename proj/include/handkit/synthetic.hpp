#pragma once

#include <array>
#include <cstdint>
#include <span>

#include "handkit/motion.hpp"

namespace handkit::synthetic {

struct FingerPose
{
  double spread_deg = 0.0;               ///< abduction at the MCP, toward the thumb side
  std::array<double, 3> flex_deg{0, 0, 0}; ///< MCP, PIP, DIP; positive toward the palm
};

struct HandPose
{
  std::array<FingerPose, 5> fingers{};
};

/// One hand in its local frame: wrist at the origin, fingers along +y, back
/// of the hand toward +z, thumb toward -x for the right hand (+x for the
/// left, which is the mirror image). `scale` multiplies every length.
std::array<Vec3, kJointsPerHand> hand_local(Hand hand, const HandPose& pose, double scale = 1.0);

/// Places both hands: local frames mapped through `left` and `right`.
std::array<Vec3, kJointsTotal> bimanual_frame(const HandPose& left_pose, const HandPose& right_pose,
                                              const RigidTransform& left, const RigidTransform& right,
                                              double scale = 1.0);

/// Both hands flat, palms down, side by side 0.3 m apart around the origin.
std::array<Vec3, kJointsTotal> rest_frame(double scale = 1.0);

/// Rotation about a unit axis by `degrees`.
Mat3 axis_rotation(const Vec3& axis, double degrees);

/// Uniformly distributed random rotation.
Mat3 random_rotation(std::uint64_t seed);

struct ActiveMotionOptions
{
  double fps = kCanonicalFps;
  double min_flex_amplitude_deg = 15.0;
  double max_flex_amplitude_deg = 35.0;
  double min_frequency_hz = 0.4;
  double max_frequency_hz = 1.2;
  /// Wrist separation oscillates between these values (meters), so the
  /// hands touch periodically when the minimum is small.
  double min_separation = 0.03;
  double max_separation = 0.35;
};

/// Smooth, seeded two-hand motion with continuously flexing fingers and
/// moving wrists. Deterministic in (frames, seed, options).
MotionSequence active_motion(std::size_t frames, std::uint64_t seed, const ActiveMotionOptions& opts = {});

} // namespace handkit::synthetic
