#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include "handkit/motion.hpp"

namespace handkit {

struct RotationScalar
{
  double degrees = 0.0;
  bool degenerate = false; ///< a projected limb vector vanished; degrees = 0
};

/// Deviation angle at an MCP/PIP/DIP joint measured after projecting both
/// limb vectors onto the plane orthogonal to the little-MCP -> index-MCP axis.
/// Other joints return 0 (not flagged degenerate).
RotationScalar rotation_scalar(std::span<const Vec3> hand_joints, int joint);

/// F x 42 x 4 array: xyz in meters, then the rotation scalar in degrees.
struct DiffusionRep
{
  static constexpr int kChannels = 4;

  double fps = kCanonicalFps;
  std::size_t frames = 0;
  std::vector<double> data;
  std::size_t degenerate_scalars = 0;

  double& at(std::size_t f, int joint, int channel)
  {
    return data[(f * kJointsTotal + joint) * kChannels + channel];
  }
  double at(std::size_t f, int joint, int channel) const
  {
    return data[(f * kJointsTotal + joint) * kChannels + channel];
  }

  /// Position channels as a sequence (bit-exact copy).
  MotionSequence positions() const;
};

DiffusionRep to_diffusion_rep(const MotionSequence& seq);

/// Wrist orientation: columns are unit(index MCP - wrist), the
/// Gram-Schmidt-orthogonalized little MCP direction, and their cross product.
/// Throws DataError("degenerate wrist frame").
Mat3 wrist_orientation(std::span<const Vec3> hand_joints);

inline constexpr int kLocalJoints = kJointsPerHand - 1;

/// Local per-frame representation for token models. Velocities are
/// per-frame differences (m/frame); the last frame repeats the previous one.
struct ARLocalRep
{
  struct Frame
  {
    Vec3 d_r = Vec3::Zero();                   ///< right wrist - left wrist
    Vec3 v_r = Vec3::Zero();                   ///< right wrist velocity
    std::array<std::array<double, 6>, 2> theta_r{}; ///< first two orientation columns
    std::array<std::array<Vec3, kLocalJoints>, 2> p_l{}; ///< wrist-local, orientation-aligned
    std::array<std::array<Vec3, kLocalJoints>, 2> v_l{}; ///< differences of p_l
    std::array<std::array<double, kLocalJoints>, 2> s{}; ///< rotation scalars, 0 for tips
  };

  static constexpr std::size_t kFrameWidth = 3 + 3 + 12 + 2 * kLocalJoints * 3 * 2 + 2 * kLocalJoints;

  double fps = kCanonicalFps;
  std::vector<Frame> frames;

  /// Row-major F x kFrameWidth in the field order d_r, v_r, theta_r, p_l, v_l, s.
  std::vector<double> flatten() const;
};

/// Requires at least two frames.
ARLocalRep to_ar_rep(const MotionSequence& seq);

/// Rebuilds global joints from the representation and the left-wrist path.
MotionSequence from_ar_rep(const ARLocalRep& rep, std::span<const Vec3> left_wrist);

/// Writes `<stem>.bin` (little-endian float64, fields stored one after the
/// other) and `<stem>.json` (shapes and byte offsets).
void write_diffusion_rep(const std::filesystem::path& stem, const DiffusionRep& rep);
void write_ar_rep(const std::filesystem::path& stem, const ARLocalRep& rep);

} // namespace handkit
