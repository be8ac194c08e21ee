#include <doctest.h>

#include "../support/oracles.hpp"
#include "handkit/contact.hpp"
#include "handkit/error.hpp"
#include "handkit/synthetic.hpp"

using namespace handkit;

namespace {

ContactLabels empty_labels(std::size_t frames)
{
  ContactLabels l;
  l.frames = frames;
  l.intra.assign(frames * 8, 0);
  l.inter.assign(frames, 0);
  return l;
}

MotionSequence swap_hands(const MotionSequence& seq)
{
  std::vector<Vec3> pts;
  for (std::size_t f = 0; f < seq.num_frames(); ++f)
  {
    const auto r = seq.hand(f, Hand::Right);
    const auto l = seq.hand(f, Hand::Left);
    pts.insert(pts.end(), r.begin(), r.end());
    pts.insert(pts.end(), l.begin(), l.end());
  }
  return MotionSequence(seq.fps(), pts);
}

} // namespace

TEST_CASE("intra-hand contact")
{
  auto frame = synthetic::rest_frame();
  const int thumb = joint_index(Finger::Thumb, JointClass::Tip);
  frame[global_joint(Hand::Left, thumb)] = frame[global_joint(Hand::Left, joint_index(Finger::Index, JointClass::Tip))];
  const auto labels = intra_contact(MotionSequence::constant(30.0, 2, frame));
  REQUIRE(labels.size() == 16);
  CHECK(labels[0] == 1);
  for (int k = 1; k < 8; ++k)
    CHECK(labels[k] == 0);

  // Tips spread 5 cm apart: no contact.
  auto apart = synthetic::rest_frame();
  for (Hand h : kHands)
    for (int f = 0; f < 5; ++f)
      apart[global_joint(h, joint_index(kFingers[f], JointClass::Tip))] =
          Vec3(static_cast<int>(h), 0.05 * f, 1.0);
  for (auto v : intra_contact(MotionSequence::constant(30.0, 3, apart)))
    CHECK(v == 0);

  const auto seq = synthetic::active_motion(40, 5);
  const auto got = intra_contact(seq, 0.05);
  for (std::size_t f = 0; f < 40; ++f)
    for (Hand h : kHands)
      for (int p = 0; p < 4; ++p)
      {
        const double d = (seq.at(f, h, thumb) - seq.at(f, h, joint_index(kFingers[p + 1], JointClass::Tip))).norm();
        CHECK(got[(f * 2 + static_cast<std::size_t>(h)) * 4 + p] == (d < 0.05 ? 1 : 0));
      }
}

TEST_CASE("inter-hand contact")
{
  auto far = synthetic::rest_frame();
  for (int j = 0; j < kJointsPerHand; ++j)
    far[global_joint(Hand::Right, j)] += Vec3(1.0, 0, 0);
  for (auto v : inter_contact(MotionSequence::constant(30.0, 4, far)))
    CHECK(v == 0);

  // Right index tip on the left palm centroid.
  const auto left = synthetic::hand_local(Hand::Left, {});
  Vec3 centroid = left[kWrist];
  for (Finger f : kFingers)
    centroid += left[joint_index(f, JointClass::Mcp)];
  centroid /= 6.0;
  const auto right = synthetic::hand_local(Hand::Right, {});
  const Vec3 shift = centroid - right[joint_index(Finger::Index, JointClass::Tip)] + Vec3(0, 0, 0.002);
  const auto touching = synthetic::bimanual_frame({}, {}, RigidTransform::identity(),
                                                  RigidTransform(Mat3::Identity(), shift));
  const auto seq = MotionSequence::constant(30.0, 3, touching);
  for (std::uint64_t seed = 0; seed < 10; ++seed)
  {
    CHECK(min_interhand_distance(seq, 0, seed) < 0.02);
    CHECK(inter_contact(seq, kContactThreshold, seed)[1] == 1);
  }

  const auto active = synthetic::active_motion(90, 3);
  const auto a = inter_contact(active, kContactThreshold, 4);
  CHECK(a == inter_contact(swap_hands(active), kContactThreshold, 4));
  // The bounding-sphere shortcut never changes a label.
  for (std::size_t f = 0; f < active.num_frames(); ++f)
    CHECK(a[f] == (min_interhand_distance(active, f, 4) < kContactThreshold ? 1 : 0));
}

TEST_CASE("contact scoring examples")
{
  auto gt = empty_labels(30), gen = empty_labels(30);
  for (int f = 10; f <= 20; ++f)
    gt.intra[f * 8] = 1;
  for (int f = 15; f <= 25; ++f)
    gen.intra[f * 8] = 1;
  const auto r = score(gt, gen);
  CHECK(r.intra.counts.tp == 6);
  CHECK(r.intra.counts.fp == 5);
  CHECK(r.intra.counts.fn == 5);
  CHECK(r.intra.precision == 6.0 / 11.0);
  CHECK(r.intra.recall == 6.0 / 11.0);
  CHECK(r.intra.f1 == doctest::Approx(6.0 / 11.0).epsilon(1e-15));
  CHECK(r.inter.degenerate);
  CHECK(r.inter.f1 == 1.0);

  const auto same = score(gt, gt);
  CHECK(same.intra.precision == 1.0);
  CHECK(same.intra.recall == 1.0);
  CHECK(same.intra.f1 == 1.0);

  auto flipped = gt;
  for (auto& v : flipped.intra)
    v = 1 - v;
  for (auto& v : flipped.inter)
    v = 1 - v;
  const auto inv = score(gt, flipped);
  CHECK(inv.intra.precision == 0.0);
  CHECK(inv.intra.recall == 0.0);
  CHECK(inv.intra.f1 == 0.0);
  CHECK(inv.inter.degenerate);
  CHECK(inv.inter.precision == 0.0);

  CHECK_THROWS_AS(score(gt, empty_labels(29)), ValidationError);
}

TEST_CASE("per-clip scoring and accumulation")
{
  auto gt = empty_labels(10), gen = empty_labels(10);
  gt.inter[2] = 1;
  gen.inter[7] = 1;
  CHECK(score(gt, gen, ContactMode::PerFrame).inter.f1 == 0.0);
  CHECK(score(gt, gen, ContactMode::PerClip).inter.f1 == 1.0);

  ContactReportAccumulator acc;
  acc.add(gt, gen);
  acc.add(gt, gt);
  const auto rep = acc.result();
  CHECK(rep.inter.counts.tp == 1);
  CHECK(rep.inter.counts.fp == 1);
  CHECK(rep.inter.counts.fn == 1);
  CHECK(rep.inter.precision == 0.5);

  const auto json = contact_report_json(rep, -1);
  CHECK(json.find("\"inter\":{\"precision\":0.5") != std::string::npos);
}
