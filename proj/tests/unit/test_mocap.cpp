#include <doctest.h>

#include <cmath>

#include "../support/oracles.hpp"
#include "handkit/error.hpp"
#include "handkit/mocap.hpp"
#include "handkit/synthetic.hpp"

using namespace handkit;
using namespace handkit::testing;

namespace {

struct Scene
{
  std::array<HandJoints, 2> joints{};
  std::array<Vec3, 2> dorsal{};
};

Scene grasp_scene(double flex, const Mat3& rot, const Vec3& shift)
{
  synthetic::HandPose pose;
  for (auto& f : pose.fingers)
    f.flex_deg = {flex, flex, flex * 0.8};
  pose.fingers[0].spread_deg = 5.0;
  const RigidTransform left(rot, rot * Vec3(-0.15, 0, 0) + shift);
  const RigidTransform right(rot, rot * Vec3(0.15, 0, 0) + shift);
  const auto frame = synthetic::bimanual_frame(pose, pose, left, right);
  Scene s;
  for (Hand h : kHands)
  {
    for (int j = 0; j < kJointsPerHand; ++j)
      s.joints[static_cast<int>(h)][j] = frame[global_joint(h, j)];
    s.dorsal[static_cast<int>(h)] = rot * Vec3::UnitZ();
  }
  return s;
}

std::array<HandCalibration, 2> calibration_for(const Scene& s)
{
  std::array<HandCalibration, 2> c{};
  for (int h = 0; h < 2; ++h)
    c[h].reference_lengths = mcp_lengths(s.joints[h]);
  return c;
}

MarkerFrame simple_frame()
{
  MarkerFrame m;
  for (Hand h : kHands)
    for (int i = 0; i < kMarkersPerHand; ++i)
      m.at(h, i) = Vec3(0.01 * i, 0.002 * i * i, 0.0);
  m.at(Hand::Left, finger_marker(Finger::Little, MarkerSite::Mcp)) = Vec3(0.05, 0, 0);
  return m;
}

} // namespace

TEST_CASE("marker labels round trip")
{
  for (int i = 0; i < kMarkersPerHand; ++i)
    CHECK(parse_marker_label(marker_label(i)) == i);
  CHECK(marker_label(kWristMarker) == "wrist");
  CHECK(marker_label(palm_marker(2)) == "palm_2");
  CHECK(marker_label(finger_marker(Finger::Ring, MarkerSite::Dip)) == "ring_dip");
  CHECK(parse_marker_label("elbow") == -1);
}

TEST_CASE("finger-chain normal is perpendicular to both segments")
{
  auto m = simple_frame();
  m.at(Hand::Left, finger_marker(Finger::Index, MarkerSite::Mcp)) = Vec3(0, 0, 0);
  m.at(Hand::Left, finger_marker(Finger::Index, MarkerSite::Pip)) = Vec3(0, 0.03, 0);
  m.at(Hand::Left, finger_marker(Finger::Index, MarkerSite::Dip)) = Vec3(0, 0.06, 0.01);
  const Vec3 n = marker_normal(m, Hand::Left, joint_index(Finger::Index, JointClass::Pip));
  CHECK(std::abs(n.norm() - 1.0) < 1e-12);
  CHECK(std::abs(n.dot(Vec3(0, 0.03, 0))) < 1e-9);
  CHECK(std::abs(n.dot(Vec3(0, 0.03, 0.01))) < 1e-9);
}

TEST_CASE("coplanar MCP markers give a z normal")
{
  auto m = simple_frame();
  const Vec3 n = marker_normal(m, Hand::Left, joint_index(Finger::Index, JointClass::Mcp));
  CHECK(std::abs(std::abs(n.z()) - 1.0) < 1e-12);
}

TEST_CASE("marker normal matches the normalized cross product")
{
  Rng rng(5);
  std::uniform_real_distribution<double> u(-0.05, 0.05);
  for (int trial = 0; trial < 50; ++trial)
  {
    auto m = simple_frame();
    const int joint = joint_index(Finger::Middle, JointClass::Dip);
    Vec3 a(u(rng), u(rng), u(rng)), b(u(rng), u(rng), u(rng)), c(u(rng), u(rng), u(rng));
    m.at(Hand::Right, finger_marker(Finger::Middle, MarkerSite::Pip)) = a;
    m.at(Hand::Right, finger_marker(Finger::Middle, MarkerSite::Dip)) = b;
    m.at(Hand::Right, finger_marker(Finger::Middle, MarkerSite::Tip)) = c;
    m.at(Hand::Right, finger_marker(Finger::Little, MarkerSite::Mcp)) = Vec3(0.3, 0.1, -0.2);
    const Vec3 oracle = (b - a).cross(c - b).normalized();
    const Vec3 n = marker_normal(m, Hand::Right, joint);
    CHECK(std::min((n - oracle).norm(), (n + oracle).norm()) < 1e-12);
  }
}

TEST_CASE("collinear neighbors are degenerate")
{
  auto m = simple_frame();
  for (int s = 0; s < 3; ++s)
    m.at(Hand::Left, finger_marker(Finger::Ring, static_cast<MarkerSite>(s))) = Vec3(0.1, 0.03 * s, 0.0);
  CHECK_THROWS_WITH_AS(marker_normal(m, Hand::Left, joint_index(Finger::Ring, JointClass::Pip)),
                       doctest::Contains("degenerate normal plane"), DataError);
}

TEST_CASE("estimate_joints offsets markers along the normal")
{
  const auto scene = grasp_scene(30.0, Mat3::Identity(), Vec3::Zero());
  auto calib = calibration_for(scene);
  const auto markers = forward_markers(scene.joints, scene.dorsal, calib);

  HandCalibration zero = calib[0];
  zero.factors = {0.0, 0.0, 0.0, 0.0};
  const auto flat = estimate_joints(markers, Hand::Left, zero);
  for (Finger f : kFingers)
    for (int s = 0; s < 4; ++s)
      CHECK(flat[joint_index(f, static_cast<JointClass>(s + 1))] ==
            markers.at(Hand::Left, finger_marker(f, static_cast<MarkerSite>(s))));

  for (Hand h : kHands)
  {
    const auto j = estimate_joints(markers, h, calib[static_cast<int>(h)]);
    for (int k = 1; k < kJointsPerHand; ++k)
    {
      INFO(joint_name(k));
      CHECK((j[k] - scene.joints[static_cast<int>(h)][k]).norm() < 1e-6);
    }
    // MCP offsets point into the palm.
    const int mcp = joint_index(Finger::Middle, JointClass::Mcp);
    const Vec3 offset = j[mcp] - markers.at(h, finger_marker(Finger::Middle, MarkerSite::Mcp));
    CHECK(offset.dot(scene.dorsal[static_cast<int>(h)]) < 0.0);
  }
}

TEST_CASE("estimate_joints is rigid equivariant")
{
  const auto scene = grasp_scene(40.0, Mat3::Identity(), Vec3::Zero());
  const auto calib = calibration_for(scene);
  const auto markers = forward_markers(scene.joints, scene.dorsal, calib);
  const RigidTransform t(synthetic::random_rotation(9), Vec3(0.4, -1.0, 0.2));
  MarkerFrame moved;
  for (std::size_t i = 0; i < moved.markers.size(); ++i)
    moved.markers[i] = t.apply(markers.markers[i]);
  for (Hand h : kHands)
  {
    const auto a = estimate_joints(markers, h, calib[0]);
    const auto b = estimate_joints(moved, h, calib[0]);
    for (int k = 0; k < kJointsPerHand; ++k)
      CHECK((t.apply(a[k]) - b[k]).norm() < 1e-9);
  }
}

TEST_CASE("optimize_wrist fixed point and recovery")
{
  Rng rng(21);
  for (int trial = 0; trial < 20; ++trial)
  {
    const auto hand = random_hand(rng);
    HandCalibration calib;
    calib.reference_lengths = hand.lengths;
    const Vec3 truth = hand.joints[kWrist];

    const auto still = optimize_wrist(hand.joints, calib, truth);
    CHECK((still.wrist - truth).norm() < 1e-12);
    CHECK(still.residual <= 1e-12);

    const Vec3 start = truth + random_offset(rng, 0.01);
    const auto fit = optimize_wrist(hand.joints, calib, start);
    CHECK((fit.wrist - truth).norm() < 1e-5);
    CHECK(fit.residual <= fit.initial_residual);
    CHECK(fit.residual == doctest::Approx(wrist_objective(hand.joints, hand.lengths, fit.wrist)));
  }
}

TEST_CASE("optimize_wrist with inconsistent lengths matches the grid oracle")
{
  Rng rng(33);
  for (int trial = 0; trial < 5; ++trial)
  {
    auto hand = random_hand(rng);
    HandCalibration calib;
    calib.reference_lengths = hand.lengths;
    calib.reference_lengths[trial % 5] += 0.005;
    const Vec3 start = hand.joints[kWrist] + random_offset(rng, 0.003);
    const auto fit = optimize_wrist(hand.joints, calib, start);
    CHECK(fit.residual > 0.0);
    CHECK(fit.residual < fit.initial_residual);
    const Vec3 oracle = grid_wrist_oracle(hand.joints, calib.reference_lengths, start);
    CHECK((fit.wrist - oracle).norm() < 1e-4);
  }
}

TEST_CASE("optimize_wrist rejects coincident MCPs")
{
  HandJoints joints;
  joints.fill(Vec3(0.1, 0.2, 0.3));
  HandCalibration calib;
  calib.reference_lengths = {0.05, 0.08, 0.08, 0.08, 0.07};
  CHECK_THROWS_WITH_AS(optimize_wrist(joints, calib, Vec3::Zero()), "underdetermined wrist", DataError);
}

TEST_CASE("solve_sequence on a forward-simulated grasp")
{
  const Mat3 rot = synthetic::random_rotation(4);
  const Vec3 shift(0.2, 0.1, 1.0);
  auto calib = calibration_for(grasp_scene(30.0, rot, shift));
  std::vector<MarkerFrame> frames;
  std::vector<Scene> truth;
  for (int f = 0; f < 60; ++f)
  {
    truth.push_back(grasp_scene(30.0 + 50.0 * f / 59.0, rot, shift));
    frames.push_back(forward_markers(truth.back().joints, truth.back().dorsal, calib));
  }
  const auto seq = solve_sequence(frames, 120.0, calib);
  CHECK(seq.fps() == 120.0);
  REQUIRE(seq.num_frames() == 60);
  double worst = 0.0;
  for (int f = 0; f < 60; ++f)
    for (Hand h : kHands)
      for (int j = 0; j < kJointsPerHand; ++j)
        worst = std::max(worst, (seq.at(f, h, j) - truth[f].joints[static_cast<int>(h)][j]).norm());
  CHECK(worst <= 1e-4);

  // Static stream: identical frames, and identical reruns.
  std::vector<MarkerFrame> still(5, frames[10]);
  const auto a = solve_sequence(still, 30.0, calib);
  for (std::size_t f = 1; f < a.num_frames(); ++f)
    for (int j = 0; j < kJointsTotal; ++j)
      CHECK((a.frame(f)[j] - a.frame(0)[j]).norm() < 1e-9);
  CHECK(solve_sequence(still, 30.0, calib) == a);

  still[3].at(Hand::Right, 7).y() = std::nan("");
  CHECK_THROWS_WITH(solve_sequence(still, 30.0, calib), doctest::Contains("frame 3"));
}

TEST_CASE("marker csv and calibration parsing")
{
  const auto scene = grasp_scene(30.0, Mat3::Identity(), Vec3::Zero());
  const auto calib = calibration_for(scene);
  std::vector<MarkerFrame> frames(3, forward_markers(scene.joints, scene.dorsal, calib));
  frames[1].at(Hand::Left, 3) += Vec3(0.001, 0, 0);
  const auto text = dump_marker_csv(frames);
  CHECK(text.rfind("frame,hand,label,x,y,z\n", 0) == 0);
  const auto back = parse_marker_csv(text);
  REQUIRE(back.size() == 3);
  for (std::size_t f = 0; f < 3; ++f)
    CHECK(back[f].markers == frames[f].markers);

  CHECK_THROWS_AS(parse_marker_csv("frame,hand,label,x,y,z\n0,left,wrist,0,0,0\n"), DataError);
  CHECK_THROWS_AS(parse_marker_csv("a,b\n"), DataError);

  const auto both = parse_calibration(
      R"({"depth_scale":0.01,"reference_lengths":[0.05,0.08,0.08,0.08,0.07],"factors":{"mcp":1,"pip":0.9,"dip":0.8,"tip":0.6}})");
  CHECK(both[0].depth_scale == 0.01);
  CHECK(both[1].reference_lengths[4] == 0.07);
  CHECK_THROWS_AS(parse_calibration(R"({"depth_scale":-1,"reference_lengths":[1,1,1,1,1]})"), ValidationError);
}
