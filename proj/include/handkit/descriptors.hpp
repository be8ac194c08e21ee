#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "handkit/motion.hpp"
#include "handkit/palm.hpp"

namespace handkit {

enum class DescriptorKind : std::uint8_t
{
  FingerFlexing,
  FingerSpacing,
  FingerFingerDistance,
  PalmPalmRelation,
  FingerPalmDistance,
  WristTrajectory,
};

/// "finger_flexing", "finger_spacing", ...
std::string descriptor_kind_name(DescriptorKind kind);
std::optional<DescriptorKind> parse_descriptor_kind(std::string_view name);

struct Fingertip
{
  Hand hand = Hand::Left;
  Finger finger = Finger::Thumb;

  friend bool operator==(const Fingertip&, const Fingertip&) = default;
};

/// Which hands/fingers/joint a timeline describes. `hand` is "left", "right"
/// or "both"; `target` names the finger, joint, pair or axis.
struct DescriptorId
{
  DescriptorKind kind = DescriptorKind::FingerFlexing;
  std::string hand;
  std::string target;

  /// "<kind>/<hand>/<target>"
  std::string key() const;
  friend bool operator==(const DescriptorId&, const DescriptorId&) = default;
};

/// Per-frame values of one descriptor: either scalars (degrees or meters)
/// or 3-vectors (meters).
struct DescriptorTimeline
{
  DescriptorId id;
  std::vector<double> scalars;
  std::vector<Vec3> vectors;

  bool is_vector() const { return !vectors.empty(); }
  std::size_t size() const { return is_vector() ? vectors.size() : scalars.size(); }
};

/// Signed flexion in degrees: magnitude is the deviation from a straight
/// chain, positive toward the palm, negative when hyperextended.
double flexion_angle(std::span<const Vec3> hand_joints, Hand hand, int joint);
DescriptorTimeline finger_flexion(const MotionSequence& seq, Hand hand, Finger finger, JointClass joint);

/// Angle between the MCP->PIP directions of two adjacent fingers.
double spacing_angle(std::span<const Vec3> hand_joints, Finger a, Finger b);
DescriptorTimeline finger_spacing(const MotionSequence& seq, Hand hand, Finger a, Finger b);

DescriptorTimeline finger_finger_distance(const MotionSequence& seq, Fingertip a, Fingertip b);

struct PalmRelation
{
  Vec3 mean = Vec3::Zero(); ///< mean of (q_right - q_left) over the closest pairs
  /// Indices (left, right) of the selected pairs, closest first.
  std::vector<std::pair<int, int>> pairs;
};

inline constexpr int kPalmRelationPairs = 30;
inline constexpr int kFingerPalmNeighbors = 5;

/// Closest `num_pairs` pairs between the two clouds, ties broken by
/// (left index, right index).
PalmRelation palm_palm_relation(const PalmCloud& left, const PalmCloud& right,
                                int num_pairs = kPalmRelationPairs);
Vec3 palm_palm_relation(const MotionSequence& seq, std::size_t frame, std::uint64_t seed);

/// Mean distance from `tip` to its `k` nearest cloud points.
double finger_palm_distance(const Vec3& tip, const PalmCloud& cloud, int k = kFingerPalmNeighbors);

DescriptorTimeline wrist_trajectory(const MotionSequence& seq, Hand hand);

/// Every descriptor of a sequence: 30 flexions, 8 spacings, 45 fingertip
/// pairs, 10 fingertip-to-other-palm distances, the palm relation and both
/// wrist trajectories. Palm clouds are resampled per frame from `seed`.
std::vector<DescriptorTimeline> compute_all_descriptors(const MotionSequence& seq, std::uint64_t seed);

} // namespace handkit
