#include <doctest.h>

#include <algorithm>
#include <map>
#include <tuple>
#include <set>

#include "../support/oracles.hpp"
#include "handkit/descriptors.hpp"
#include "handkit/error.hpp"
#include "handkit/synthetic.hpp"

using namespace handkit;

namespace {

std::array<Vec3, kJointsPerHand> posed(Hand hand, Finger finger, int cls, double deg, const Mat3& rot = Mat3::Identity())
{
  synthetic::HandPose pose;
  pose.fingers[static_cast<int>(finger)].flex_deg[cls] = deg;
  auto joints = synthetic::hand_local(hand, pose);
  for (auto& p : joints)
    p = rot * p + Vec3(0.3, -0.2, 0.1);
  return joints;
}

double degrees_between(const Vec3& a, const Vec3& b)
{
  return std::acos(std::clamp(a.normalized().dot(b.normalized()), -1.0, 1.0)) * 180.0 / M_PI;
}

} // namespace

TEST_CASE("flexion sign and magnitude on both hands")
{
  const JointClass classes[] = {JointClass::Mcp, JointClass::Pip, JointClass::Dip};
  for (Hand hand : kHands)
    for (Finger finger : kFingers)
      for (int c = 0; c < 3; ++c)
      {
        const int j = joint_index(finger, classes[c]);
        CHECK(flexion_angle(posed(hand, finger, c, 0.0), hand, j) == doctest::Approx(0.0).scale(1.0).epsilon(1e-9));
        for (double deg : {90.0, -10.0, 25.0, -25.0, 60.0})
        {
          const auto joints = posed(hand, finger, c, deg, synthetic::random_rotation(static_cast<std::uint64_t>(j)));
          INFO(hand_name(hand), " ", joint_name(j), " ", deg);
          CHECK(flexion_angle(joints, hand, j) == doctest::Approx(deg).epsilon(1e-9));
        }
      }
}

TEST_CASE("flexion rejects degenerate segments")
{
  auto joints = synthetic::hand_local(Hand::Left, {});
  const int pip = joint_index(Finger::Index, JointClass::Pip);
  joints[pip] = joints[joint_index(Finger::Index, JointClass::Mcp)];
  CHECK_THROWS_AS(flexion_angle(joints, Hand::Left, pip), DataError);
}

TEST_CASE("spacing angle matches the direction oracle")
{
  Rng rng(5);
  std::uniform_real_distribution<double> spread(-15.0, 15.0);
  for (int trial = 0; trial < 50; ++trial)
  {
    synthetic::HandPose pose;
    for (auto& f : pose.fingers)
      f.spread_deg = spread(rng);
    const auto joints = synthetic::hand_local(Hand::Right, pose);
    for (int f = 0; f + 1 < kNumFingers; ++f)
    {
      const Finger a = kFingers[f], b = kFingers[f + 1];
      const Vec3 da = joints[joint_index(a, JointClass::Pip)] - joints[joint_index(a, JointClass::Mcp)];
      const Vec3 db = joints[joint_index(b, JointClass::Pip)] - joints[joint_index(b, JointClass::Mcp)];
      // arccos cannot resolve angles below about 1.2e-6 deg.
      CHECK(std::abs(spacing_angle(joints, a, b) - degrees_between(da, db)) < 2e-6);
    }
  }
  const auto seq = synthetic::active_motion(5, 1);
  const auto t = finger_spacing(seq, Hand::Left, Finger::Index, Finger::Middle);
  CHECK(t.id.key() == "finger_spacing/left/index-middle");
  CHECK(t.scalars.size() == 5);
  CHECK_THROWS_AS(finger_spacing(seq, Hand::Left, Finger::Index, Finger::Ring), ValidationError);
}

TEST_CASE("palm relation against brute force and under translation")
{
  const auto seq = synthetic::active_motion(3, 4);
  const auto left = palm_cloud(seq, 1, Hand::Left, 9);
  const auto right = palm_cloud(seq, 1, Hand::Right, 9);
  const auto rel = palm_palm_relation(left, right);

  std::vector<std::tuple<double, int, int>> all;
  for (int i = 0; i < kPalmCloudSize; ++i)
    for (int j = 0; j < kPalmCloudSize; ++j)
      all.emplace_back((right.points[j] - left.points[i]).squaredNorm(), i, j);
  std::sort(all.begin(), all.end());
  REQUIRE(rel.pairs.size() == kPalmRelationPairs);
  Vec3 mean = Vec3::Zero();
  for (int k = 0; k < kPalmRelationPairs; ++k)
  {
    CHECK(rel.pairs[k].first == std::get<1>(all[k]));
    CHECK(rel.pairs[k].second == std::get<2>(all[k]));
    mean += right.points[std::get<2>(all[k])] - left.points[std::get<1>(all[k])];
  }
  mean /= kPalmRelationPairs;
  CHECK((rel.mean - mean).norm() < 1e-15);

  // Moving both palms together leaves the relation unchanged.
  const Vec3 delta(0.01, -0.02, 0.005);
  PalmCloud l2 = left, r2 = right;
  for (auto& p : l2.points)
    p += delta;
  for (auto& p : r2.points)
    p += delta;
  const auto moved = palm_palm_relation(l2, r2);
  CHECK(moved.pairs == rel.pairs);
  CHECK((moved.mean - rel.mean).norm() < 1e-12);
}

TEST_CASE("finger to palm distance")
{
  const auto seq = synthetic::active_motion(2, 6);
  const auto cloud = palm_cloud(seq, 0, Hand::Left, 1);
  const Vec3 tip = seq.at(0, Hand::Right, joint_index(Finger::Index, JointClass::Tip));
  std::vector<double> d;
  for (const auto& p : cloud.points)
    d.push_back((p - tip).norm());
  std::sort(d.begin(), d.end());
  const double oracle = (d[0] + d[1] + d[2] + d[3] + d[4]) / 5.0;
  CHECK(finger_palm_distance(tip, cloud) == doctest::Approx(oracle).epsilon(1e-14));
  CHECK(finger_palm_distance(tip, cloud, 1) == doctest::Approx(d[0]).epsilon(1e-14));
}

TEST_CASE("fingertip distance and wrist trajectory")
{
  const auto seq = synthetic::active_motion(4, 2);
  const auto same = finger_finger_distance(seq, {Hand::Right, Finger::Thumb}, {Hand::Right, Finger::Index});
  CHECK(same.id.key() == "finger_finger_distance/right/thumb-index");
  const auto cross = finger_finger_distance(seq, {Hand::Left, Finger::Thumb}, {Hand::Right, Finger::Index});
  CHECK(cross.id.hand == "both");
  for (std::size_t f = 0; f < 4; ++f)
    CHECK(cross.scalars[f] == (seq.at(f, Hand::Left, joint_index(Finger::Thumb, JointClass::Tip)) -
                               seq.at(f, Hand::Right, joint_index(Finger::Index, JointClass::Tip)))
                                  .norm());
  const auto wrist = wrist_trajectory(seq, Hand::Left);
  REQUIRE(wrist.is_vector());
  CHECK(wrist.vectors[2] == seq.at(2, Hand::Left, kWrist));
}

TEST_CASE("all descriptors of a sequence")
{
  const auto seq = synthetic::active_motion(6, 3);
  const auto all = compute_all_descriptors(seq, 11);
  CHECK(all.size() == 96);
  std::set<std::string> keys;
  std::map<DescriptorKind, int> counts;
  for (const auto& t : all)
  {
    keys.insert(t.id.key());
    ++counts[t.id.kind];
    CHECK(t.size() == 6);
  }
  CHECK(keys.size() == all.size());
  CHECK(counts[DescriptorKind::FingerFlexing] == 30);
  CHECK(counts[DescriptorKind::FingerSpacing] == 8);
  CHECK(counts[DescriptorKind::FingerFingerDistance] == 45);
  CHECK(counts[DescriptorKind::FingerPalmDistance] == 10);
  CHECK(counts[DescriptorKind::PalmPalmRelation] == 1);
  CHECK(counts[DescriptorKind::WristTrajectory] == 2);

  const auto again = compute_all_descriptors(seq, 11);
  for (std::size_t i = 0; i < all.size(); ++i)
  {
    CHECK(all[i].scalars == again[i].scalars);
    CHECK(all[i].vectors == again[i].vectors);
  }
  for (auto kind : {DescriptorKind::FingerFlexing, DescriptorKind::WristTrajectory})
    CHECK(parse_descriptor_kind(descriptor_kind_name(kind)) == kind);
}
