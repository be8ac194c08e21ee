#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "handkit/motion.hpp"

namespace handkit {

struct ClipSpec
{
  int length = 60;
  int stride = 60;

  void validate() const;
};

/// Half-open frame window [begin, end).
struct ClipWindow
{
  std::size_t begin = 0;
  std::size_t end = 0;

  std::size_t size() const { return end - begin; }
  friend bool operator==(const ClipWindow&, const ClipWindow&) = default;
};

enum DefectReason : std::uint8_t
{
  kDefectNonFinite = 1u << 0,
  kDefectVelocity = 1u << 1,
  kDefectBoneLength = 1u << 2,
};

/// Names of the reason bits set in `mask`, e.g. {"velocity"}.
std::vector<std::string> defect_reason_names(std::uint8_t mask);

struct DefectConfig
{
  double max_speed = 5.0;           ///< m/s
  double max_bone_deviation = 0.20; ///< fraction of the sequence-median length

  void validate() const;
};

struct DefectReport
{
  std::vector<std::size_t> frames; ///< sorted, unique
  std::vector<std::uint8_t> reasons; ///< bitmask per entry of `frames`

  bool empty() const { return frames.empty(); }
};

/// Flags frames with non-finite coordinates, a joint moving faster than
/// max_speed since the previous frame, or a bone deviating from its median
/// length by more than max_bone_deviation.
DefectReport detect_defects(const MotionSequence& seq, const DefectConfig& cfg = {});

/// Windows of exactly spec.length frames placed at a, a + stride, ... inside
/// each maximal defect-free interval [a, b].
std::vector<ClipWindow> extract_clips(std::size_t num_frames, std::span<const std::size_t> defective,
                                      const ClipSpec& spec = {});

/// Angle in degrees between the parent->joint and joint->child directions;
/// 0 for a straight chain. Joint must be an MCP, PIP or DIP.
/// Throws DataError("degenerate segment") on zero-length limbs.
std::vector<double> bending_angle_series(const MotionSequence& seq, Hand hand, int joint);

struct IntensityConfig
{
  /// Per-joint weights within one hand; only MCP/PIP/DIP joints carry an angle.
  std::array<double, kJointsPerHand> joint_weights = default_weights();
  double tau_hand = 25.0; ///< deg/s
  double tau_avg = 30.0;  ///< deg/s

  /// MCP 4, PIP 2, DIP 1; wrist and tips 0.
  static std::array<double, kJointsPerHand> default_weights();
  /// Non-negative weights, proximal >= distal along each chain, thresholds >= 0.
  void validate() const;
};

struct ClipIntensity
{
  double left = 0.0;
  double right = 0.0;
  double avg = 0.0;
};

/// Weighted mean joint angular speed per hand in deg/s, using forward
/// differences of the bending angles with the last value repeated.
ClipIntensity clip_intensity(const MotionSequence& clip, const IntensityConfig& cfg = {});

bool passes_filter(const ClipIntensity& w, const IntensityConfig& cfg);

/// Indices of the intensities that pass the both-hands rule.
std::vector<std::size_t> filter_clips(std::span<const ClipIntensity> intensities, const IntensityConfig& cfg);

struct DatasetStats
{
  double contact_ratio = 0.0;
  double contact_duration_s = 0.0;
  double contact_freq_per_min = 0.0;
  double motion_intensity_deg_s = 0.0;
  std::size_t frames = 0;
  std::size_t contact_frames = 0;
  std::size_t contact_events = 0;
  std::size_t clips = 0;
};

/// Accumulates per-clip interaction statistics; merge() is exact, so partial
/// results from parallel workers can be combined in any grouping.
class StatsAccumulator
{
public:
  /// Adds one clip given its per-frame inter-hand contact labels.
  void add(std::span<const std::uint8_t> contact, double fps, const ClipIntensity& intensity);
  void merge(const StatsAccumulator& other);
  DatasetStats result() const;

private:
  std::size_t frames_ = 0;
  std::size_t contact_frames_ = 0;
  std::size_t events_ = 0;
  double seconds_ = 0.0;
  double contact_seconds_ = 0.0;
  double intensity_sum_ = 0.0;
  std::size_t clips_ = 0;
};

struct StatsConfig
{
  double contact_threshold = 0.02;
  std::uint64_t seed = 0;
  IntensityConfig intensity{};
};

DatasetStats dataset_stats(std::span<const MotionSequence> clips, const StatsConfig& cfg = {});

} // namespace handkit
