#include "handkit/descriptors.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <tuple>

#include <fmt/format.h>

#include "handkit/error.hpp"

namespace handkit {

namespace {

constexpr double kRadToDeg = 180.0 / M_PI;

double unsigned_angle(const Vec3& a, const Vec3& b)
{
  return angle_degrees(a, b);
}

bool is_adjacent(Finger a, Finger b)
{
  return std::abs(static_cast<int>(a) - static_cast<int>(b)) == 1;
}

std::string tip_name(Fingertip t)
{
  return fmt::format("{}_{}", hand_name(t.hand), finger_name(t.finger));
}

} // namespace

std::string descriptor_kind_name(DescriptorKind kind)
{
  switch (kind)
  {
    case DescriptorKind::FingerFlexing: return "finger_flexing";
    case DescriptorKind::FingerSpacing: return "finger_spacing";
    case DescriptorKind::FingerFingerDistance: return "finger_finger_distance";
    case DescriptorKind::PalmPalmRelation: return "palm_palm_relation";
    case DescriptorKind::FingerPalmDistance: return "finger_palm_distance";
    case DescriptorKind::WristTrajectory: return "wrist_trajectory";
  }
  return "unknown";
}

std::optional<DescriptorKind> parse_descriptor_kind(std::string_view name)
{
  for (auto k : {DescriptorKind::FingerFlexing, DescriptorKind::FingerSpacing, DescriptorKind::FingerFingerDistance,
                 DescriptorKind::PalmPalmRelation, DescriptorKind::FingerPalmDistance,
                 DescriptorKind::WristTrajectory})
    if (descriptor_kind_name(k) == name)
      return k;
  return std::nullopt;
}

std::string DescriptorId::key() const
{
  return fmt::format("{}/{}/{}", descriptor_kind_name(kind), hand, target);
}

double flexion_angle(std::span<const Vec3> hj, Hand hand, int joint)
{
  if (joint <= 0 || joint >= kJointsPerHand || !has_bending_angle(joint))
    throw ValidationError(fmt::format("joint {} has no flexion angle", joint));
  const Vec3& p = hj[joint];
  const Vec3 v_pre = hj[parent_joint(joint)] - p;
  const Vec3 v_next = hj[child_joint(joint)] - p;
  if (!(v_pre.norm() > 1e-12) || !(v_next.norm() > 1e-12))
    throw DataError(fmt::format("degenerate segment at {} {}", hand_name(hand), joint_name(joint)));

  // Lateral reference: index MCP minus little MCP (thumb: minus thumb MCP).
  // Mirrored per hand so that palm-ward flexion is positive on both hands.
  const Finger finger = joint_finger(joint);
  const Vec3& index_mcp = hj[joint_index(Finger::Index, JointClass::Mcp)];
  Vec3 axis;
  bool mirror;
  if (finger == Finger::Thumb)
  {
    axis = index_mcp - hj[joint_index(Finger::Thumb, JointClass::Mcp)];
    mirror = hand == Hand::Left;
  }
  else
  {
    axis = index_mcp - hj[joint_index(Finger::Little, JointClass::Mcp)];
    mirror = hand == Hand::Right;
  }
  if (!(axis.norm() > 1e-12))
    throw DataError(fmt::format("degenerate lateral axis on the {} hand", hand_name(hand)));
  if (mirror)
    axis = -axis;

  const double magnitude = 180.0 - unsigned_angle(v_pre, v_next);
  const double side = v_pre.cross(v_next).dot(axis);
  return side < 0.0 ? -magnitude : magnitude;
}

DescriptorTimeline finger_flexion(const MotionSequence& seq, Hand hand, Finger finger, JointClass joint)
{
  if (joint != JointClass::Mcp && joint != JointClass::Pip && joint != JointClass::Dip)
    throw ValidationError("flexion is defined for MCP, PIP and DIP joints");
  const int j = joint_index(finger, joint);
  DescriptorTimeline tl;
  tl.id = {DescriptorKind::FingerFlexing, std::string(hand_name(hand)), joint_name(j)};
  tl.scalars.resize(seq.num_frames());
  for (std::size_t f = 0; f < seq.num_frames(); ++f)
    tl.scalars[f] = flexion_angle(seq.hand(f, hand), hand, j);
  return tl;
}

double spacing_angle(std::span<const Vec3> hj, Finger a, Finger b)
{
  const Vec3 da = hj[joint_index(a, JointClass::Pip)] - hj[joint_index(a, JointClass::Mcp)];
  const Vec3 db = hj[joint_index(b, JointClass::Pip)] - hj[joint_index(b, JointClass::Mcp)];
  if (!(da.norm() > 1e-12) || !(db.norm() > 1e-12))
    throw DataError("degenerate segment in finger spacing");
  return unsigned_angle(da, db);
}

DescriptorTimeline finger_spacing(const MotionSequence& seq, Hand hand, Finger a, Finger b)
{
  if (!is_adjacent(a, b))
    throw ValidationError("finger spacing needs adjacent fingers");
  if (static_cast<int>(a) > static_cast<int>(b))
    std::swap(a, b);
  DescriptorTimeline tl;
  tl.id = {DescriptorKind::FingerSpacing, std::string(hand_name(hand)),
           fmt::format("{}-{}", finger_name(a), finger_name(b))};
  tl.scalars.resize(seq.num_frames());
  for (std::size_t f = 0; f < seq.num_frames(); ++f)
    tl.scalars[f] = spacing_angle(seq.hand(f, hand), a, b);
  return tl;
}

DescriptorTimeline finger_finger_distance(const MotionSequence& seq, Fingertip a, Fingertip b)
{
  if (a == b)
    throw ValidationError("finger-finger distance needs two different fingertips");
  DescriptorTimeline tl;
  tl.id.kind = DescriptorKind::FingerFingerDistance;
  if (a.hand == b.hand)
  {
    tl.id.hand = std::string(hand_name(a.hand));
    tl.id.target = fmt::format("{}-{}", finger_name(a.finger), finger_name(b.finger));
  }
  else
  {
    tl.id.hand = "both";
    tl.id.target = fmt::format("{}-{}", tip_name(a), tip_name(b));
  }
  const int ja = joint_index(a.finger, JointClass::Tip);
  const int jb = joint_index(b.finger, JointClass::Tip);
  tl.scalars.resize(seq.num_frames());
  for (std::size_t f = 0; f < seq.num_frames(); ++f)
    tl.scalars[f] = (seq.at(f, a.hand, ja) - seq.at(f, b.hand, jb)).norm();
  return tl;
}

PalmRelation palm_palm_relation(const PalmCloud& left, const PalmCloud& right, int num_pairs)
{
  if (num_pairs <= 0)
    throw ValidationError("num_pairs must be positive");
  using Entry = std::tuple<double, int, int>;
  std::priority_queue<Entry> heap; // largest of the kept pairs on top
  const auto k = static_cast<std::size_t>(num_pairs);
  for (int i = 0; i < static_cast<int>(left.points.size()); ++i)
  {
    const Vec3& ql = left.points[i];
    for (int j = 0; j < static_cast<int>(right.points.size()); ++j)
    {
      const double d2 = (right.points[j] - ql).squaredNorm();
      if (heap.size() < k)
        heap.emplace(d2, i, j);
      else if (Entry(d2, i, j) < heap.top())
      {
        heap.pop();
        heap.emplace(d2, i, j);
      }
    }
  }
  PalmRelation rel;
  rel.pairs.resize(heap.size());
  for (std::size_t n = heap.size(); n-- > 0;)
  {
    const auto [d2, i, j] = heap.top();
    heap.pop();
    rel.pairs[n] = {i, j};
  }
  for (const auto& [i, j] : rel.pairs)
    rel.mean += right.points[j] - left.points[i];
  if (!rel.pairs.empty())
    rel.mean /= static_cast<double>(rel.pairs.size());
  return rel;
}

Vec3 palm_palm_relation(const MotionSequence& seq, std::size_t frame, std::uint64_t seed)
{
  return palm_palm_relation(palm_cloud(seq, frame, Hand::Left, seed), palm_cloud(seq, frame, Hand::Right, seed))
      .mean;
}

double finger_palm_distance(const Vec3& tip, const PalmCloud& cloud, int k)
{
  if (cloud.points.empty() || k <= 0)
    throw ValidationError("finger-palm distance needs a non-empty cloud");
  const auto n = std::min<std::size_t>(static_cast<std::size_t>(k), cloud.points.size());
  std::array<double, kPalmCloudSize> buf{};
  std::vector<double> heap_buf;
  double* d = buf.data();
  if (cloud.points.size() > buf.size())
  {
    heap_buf.resize(cloud.points.size());
    d = heap_buf.data();
  }
  for (std::size_t i = 0; i < cloud.points.size(); ++i)
    d[i] = (cloud.points[i] - tip).norm();
  std::nth_element(d, d + n - 1, d + cloud.points.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    sum += d[i];
  return sum / static_cast<double>(n);
}

DescriptorTimeline wrist_trajectory(const MotionSequence& seq, Hand hand)
{
  DescriptorTimeline tl;
  tl.id = {DescriptorKind::WristTrajectory, std::string(hand_name(hand)), "wrist"};
  tl.vectors.resize(seq.num_frames());
  for (std::size_t f = 0; f < seq.num_frames(); ++f)
    tl.vectors[f] = seq.at(f, hand, kWrist);
  return tl;
}

std::vector<DescriptorTimeline> compute_all_descriptors(const MotionSequence& seq, std::uint64_t seed)
{
  const std::size_t n = seq.num_frames();
  std::vector<DescriptorTimeline> out;
  out.reserve(96);

  for (Hand h : kHands)
    for (Finger f : kFingers)
      for (JointClass c : kBendingClasses)
        out.push_back(finger_flexion(seq, h, f, c));
  for (Hand h : kHands)
    for (int f = 0; f + 1 < kNumFingers; ++f)
      out.push_back(finger_spacing(seq, h, static_cast<Finger>(f), static_cast<Finger>(f + 1)));

  std::vector<Fingertip> tips;
  for (Hand h : kHands)
    for (Finger f : kFingers)
      tips.push_back({h, f});
  for (std::size_t a = 0; a < tips.size(); ++a)
    for (std::size_t b = a + 1; b < tips.size(); ++b)
      out.push_back(finger_finger_distance(seq, tips[a], tips[b]));

  // Palm clouds are resampled every frame; both palm descriptors share them.
  DescriptorTimeline relation;
  relation.id = {DescriptorKind::PalmPalmRelation, "both", "left_palm-right_palm"};
  relation.vectors.resize(n);
  std::vector<DescriptorTimeline> finger_palm(tips.size());
  for (std::size_t t = 0; t < tips.size(); ++t)
  {
    finger_palm[t].id = {DescriptorKind::FingerPalmDistance, "both",
                         fmt::format("{}-{}_palm", tip_name(tips[t]), hand_name(other_hand(tips[t].hand)))};
    finger_palm[t].scalars.resize(n);
  }
  for (std::size_t f = 0; f < n; ++f)
  {
    const std::array<PalmCloud, 2> clouds{palm_cloud(seq, f, Hand::Left, seed), palm_cloud(seq, f, Hand::Right, seed)};
    relation.vectors[f] = palm_palm_relation(clouds[0], clouds[1]).mean;
    for (std::size_t t = 0; t < tips.size(); ++t)
    {
      const auto& cloud = clouds[static_cast<int>(other_hand(tips[t].hand))];
      finger_palm[t].scalars[f] =
          finger_palm_distance(seq.at(f, tips[t].hand, joint_index(tips[t].finger, JointClass::Tip)), cloud);
    }
  }
  for (auto& tl : finger_palm)
    out.push_back(std::move(tl));
  out.push_back(std::move(relation));
  for (Hand h : kHands)
    out.push_back(wrist_trajectory(seq, h));
  return out;
}

} // namespace handkit
