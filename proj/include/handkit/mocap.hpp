#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "handkit/motion.hpp"

namespace handkit {

inline constexpr int kMarkersPerHand = 25;

/// Marker layout per hand: wrist, four dorsal palm markers (over the index,
/// middle, ring and little metacarpals), then MCP, PIP, DIP and nail markers
/// for thumb..little.
enum class MarkerSite : std::uint8_t
{
  Mcp,
  Pip,
  Dip,
  Tip,
};

inline constexpr int kWristMarker = 0;
constexpr int palm_marker(int k) { return 1 + k; } // k in [0, 4)
constexpr int finger_marker(Finger f, MarkerSite s)
{
  return 5 + 4 * static_cast<int>(f) + static_cast<int>(s);
}

/// Marker label such as "wrist", "palm_2" or "ring_dip".
std::string marker_label(int marker);
int parse_marker_label(std::string_view label); // -1 when unknown

/// Labeled surface markers of both hands for one frame, in meters.
struct MarkerFrame
{
  std::array<Vec3, 2 * kMarkersPerHand> markers{};

  const Vec3& at(Hand h, int marker) const
  {
    return markers[static_cast<std::size_t>(h) * kMarkersPerHand + marker];
  }
  Vec3& at(Hand h, int marker)
  {
    return markers[static_cast<std::size_t>(h) * kMarkersPerHand + marker];
  }
  bool all_finite() const;
};

/// Skin-to-bone depth factors per joint class (multiplied by depth_scale).
struct DepthFactors
{
  double mcp = 1.0;
  double pip = 0.9;
  double dip = 0.8;
  double tip = 0.6;

  double of(JointClass cls) const;
};

struct HandCalibration
{
  double depth_scale = 0.008;
  /// MCP-to-wrist bone lengths, thumb..little, from the neutral pose.
  std::array<double, 5> reference_lengths{};
  DepthFactors factors{};

  /// Throws ValidationError on non-positive lengths or scale.
  void validate() const;
};

using HandJoints = std::array<Vec3, kJointsPerHand>;

/// Unit normal of the plane through a marker and its neighbors. An MCP uses
/// its dorsal neighbor MCP and the nearest palm marker, oriented toward the
/// palm. PIP/DIP/tip use the finger's own marker triple, whose normal is
/// lateral; it is oriented toward the index side.
/// Throws DataError("degenerate normal plane") for collinear neighbors.
Vec3 marker_normal(const MarkerFrame& markers, Hand hand, int joint);

/// Joint centers J = M + n * d with d = depth_scale * factor(class). The
/// wrist is initialized at its marker.
HandJoints estimate_joints(const MarkerFrame& markers, Hand hand, const HandCalibration& calib);

struct WristFit
{
  Vec3 wrist = Vec3::Zero();
  double residual = 0.0; ///< objective value at `wrist`, m^2
  double initial_residual = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// Sum over the five MCPs of (|J_mcp - w| - L_ref)^2.
double wrist_objective(const HandJoints& joints, const std::array<double, 5>& reference_lengths,
                       const Vec3& wrist);

/// Gauss-Newton with step halving over the wrist position, starting from
/// `initial`. Never returns a point worse than `initial`.
/// Throws DataError("underdetermined wrist") when all MCPs coincide.
WristFit optimize_wrist(const HandJoints& joints, const HandCalibration& calib, const Vec3& initial,
                        int max_iters = 50, double tol = 1e-12);

struct SolveOptions
{
  int max_iters = 50;
  double tol = 1e-12;
};

/// Per frame and hand: estimate_joints then optimize_wrist, warm-started from
/// the previous frame's wrist. Errors carry the frame index.
MotionSequence solve_sequence(std::span<const MarkerFrame> frames, double fps,
                              const std::array<HandCalibration, 2>& calib, const SolveOptions& opts = {});

/// CSV with header "frame,hand,label,x,y,z". Frames must be 0..N-1 and every
/// frame must list all 50 markers.
std::vector<MarkerFrame> parse_marker_csv(std::string_view text);
std::string dump_marker_csv(std::span<const MarkerFrame> frames);

/// JSON {depth_scale, reference_lengths:[5], factors:{mcp,pip,dip,tip}}, or
/// {"left": {...}, "right": {...}} for per-hand values.
std::array<HandCalibration, 2> parse_calibration(std::string_view json_text);

} // namespace handkit
