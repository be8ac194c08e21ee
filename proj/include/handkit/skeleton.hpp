#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace handkit {

inline constexpr int kJointsPerHand = 21;
inline constexpr int kNumHands = 2;
inline constexpr int kJointsTotal = kJointsPerHand * kNumHands;
inline constexpr int kNumFingers = 5;

enum class Hand : std::uint8_t
{
  Left = 0,
  Right = 1,
};

enum class Finger : std::uint8_t
{
  Thumb = 0,
  Index = 1,
  Middle = 2,
  Ring = 3,
  Little = 4,
};

/// Position of a joint along its finger chain. The wrist is shared by all
/// five chains.
enum class JointClass : std::uint8_t
{
  Wrist,
  Mcp,
  Pip,
  Dip,
  Tip,
};

inline constexpr std::array<Hand, 2> kHands{Hand::Left, Hand::Right};
inline constexpr std::array<Finger, 5> kFingers{
    Finger::Thumb, Finger::Index, Finger::Middle, Finger::Ring, Finger::Little};
inline constexpr std::array<JointClass, 3> kBendingClasses{
    JointClass::Mcp, JointClass::Pip, JointClass::Dip};

inline constexpr int kWrist = 0;

/// Joint layout inside one hand: wrist, then thumb..little, each as
/// MCP, PIP, DIP, tip.
constexpr int joint_index(Finger finger, JointClass cls)
{
  if (cls == JointClass::Wrist)
    return kWrist;
  return 1 + 4 * static_cast<int>(finger) + (static_cast<int>(cls) - 1);
}

constexpr int global_joint(Hand hand, int joint)
{
  return static_cast<int>(hand) * kJointsPerHand + joint;
}

constexpr JointClass joint_class(int joint)
{
  if (joint == kWrist)
    return JointClass::Wrist;
  return static_cast<JointClass>((joint - 1) % 4 + 1);
}

/// Finger owning a non-wrist joint.
constexpr Finger joint_finger(int joint)
{
  return static_cast<Finger>((joint - 1) / 4);
}

/// Parent along the chain; the wrist has none (-1).
constexpr int parent_joint(int joint)
{
  if (joint == kWrist)
    return -1;
  return joint_class(joint) == JointClass::Mcp ? kWrist : joint - 1;
}

/// Child along the chain; tips have none (-1). The wrist has five children
/// and returns -1 here.
constexpr int child_joint(int joint)
{
  if (joint == kWrist || joint_class(joint) == JointClass::Tip)
    return -1;
  return joint + 1;
}

/// True for MCP, PIP and DIP joints, which have both a predecessor and a
/// successor along their chain.
constexpr bool has_bending_angle(int joint)
{
  const auto c = joint_class(joint);
  return c == JointClass::Mcp || c == JointClass::Pip || c == JointClass::Dip;
}

std::string_view hand_name(Hand hand);
std::string_view finger_name(Finger finger);
std::string_view joint_class_name(JointClass cls);

/// Canonical identifier such as "wrist" or "index_pip".
std::string joint_name(int joint);

std::optional<Hand> parse_hand(std::string_view name);
std::optional<Finger> parse_finger(std::string_view name);
std::optional<JointClass> parse_joint_class(std::string_view name);

/// Joint naming and chain structure of the 21-joint hand.
struct SkeletonTopology
{
  int joints_per_hand = kJointsPerHand;
  /// Each chain is wrist, MCP, PIP, DIP, tip.
  std::array<std::array<int, 5>, kNumFingers> chains{};
  std::array<std::string, kJointsPerHand> names{};

  static const SkeletonTopology& standard();
};

constexpr Hand other_hand(Hand hand)
{
  return hand == Hand::Left ? Hand::Right : Hand::Left;
}

} // namespace handkit
