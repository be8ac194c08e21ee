#include "handkit/skeleton.hpp"

namespace handkit {

std::string_view hand_name(Hand hand)
{
  return hand == Hand::Left ? "left" : "right";
}

std::string_view finger_name(Finger finger)
{
  switch (finger)
  {
    case Finger::Thumb: return "thumb";
    case Finger::Index: return "index";
    case Finger::Middle: return "middle";
    case Finger::Ring: return "ring";
    case Finger::Little: return "little";
  }
  return "?";
}

std::string_view joint_class_name(JointClass cls)
{
  switch (cls)
  {
    case JointClass::Wrist: return "wrist";
    case JointClass::Mcp: return "mcp";
    case JointClass::Pip: return "pip";
    case JointClass::Dip: return "dip";
    case JointClass::Tip: return "tip";
  }
  return "?";
}

std::string joint_name(int joint)
{
  if (joint == kWrist)
    return "wrist";
  std::string name(finger_name(joint_finger(joint)));
  name += '_';
  name += joint_class_name(joint_class(joint));
  return name;
}

std::optional<Hand> parse_hand(std::string_view name)
{
  if (name == "left")
    return Hand::Left;
  if (name == "right")
    return Hand::Right;
  return std::nullopt;
}

std::optional<Finger> parse_finger(std::string_view name)
{
  for (Finger f : kFingers)
    if (finger_name(f) == name)
      return f;
  return std::nullopt;
}

std::optional<JointClass> parse_joint_class(std::string_view name)
{
  for (JointClass c : {JointClass::Wrist, JointClass::Mcp, JointClass::Pip, JointClass::Dip, JointClass::Tip})
    if (joint_class_name(c) == name)
      return c;
  return std::nullopt;
}

const SkeletonTopology& SkeletonTopology::standard()
{
  static const SkeletonTopology topo = [] {
    SkeletonTopology t;
    for (Finger f : kFingers)
    {
      auto& chain = t.chains[static_cast<int>(f)];
      chain[0] = kWrist;
      chain[1] = joint_index(f, JointClass::Mcp);
      chain[2] = joint_index(f, JointClass::Pip);
      chain[3] = joint_index(f, JointClass::Dip);
      chain[4] = joint_index(f, JointClass::Tip);
    }
    for (int j = 0; j < kJointsPerHand; ++j)
      t.names[j] = joint_name(j);
    return t;
  }();
  return topo;
}

} // namespace handkit
