// Acceptance checks: one PASS/FAIL line per criterion, with timings.
// `--quick` shrinks the throughput corpus and reports that criterion as SKIP.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <map>
#include <set>
#include <sstream>
#include <thread>
#include <tuple>

#include <fmt/format.h>

#include "../support/oracles.hpp"
#include "handkit/clips.hpp"
#include "handkit/contact.hpp"
#include "handkit/descriptors.hpp"
#include "handkit/events.hpp"
#include "handkit/fsq.hpp"
#include "handkit/guidance.hpp"
#include "handkit/hmx_io.hpp"
#include "handkit/mocap.hpp"
#include "handkit/pipeline.hpp"
#include "handkit/representations.hpp"
#include "handkit/synthetic.hpp"

using namespace handkit;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

struct Outcome
{
  bool pass = true;
  std::string detail;
  bool skipped = false;
  double timed_seconds = -1.0; ///< when set, compared to the limit instead of wall time
};

// Collects failures; the first few are kept for the report line.
class Checker
{
public:
  void expect(bool ok, const std::string& what)
  {
    ++checks_;
    if (ok)
      return;
    ++failures_;
    if (failures_ <= 3)
      notes_.push_back(what);
  }

  Outcome outcome(std::string detail) const
  {
    Outcome o;
    o.pass = failures_ == 0;
    o.detail = fmt::format("{} checks", checks_);
    if (!detail.empty())
      o.detail += ", " + detail;
    for (const auto& n : notes_)
      o.detail += "; " + n;
    return o;
  }

private:
  std::size_t checks_ = 0;
  std::size_t failures_ = 0;
  std::vector<std::string> notes_;
};

// ---------------------------------------------------------------- 1

struct Row
{
  double lower, upper;
  const char* label;
};

// Expected state tables; the last row of each closed-bounded table includes
// its upper bound.
const std::vector<std::pair<DescriptorKind, std::vector<Row>>>& expected_tables()
{
  constexpr double inf = std::numeric_limits<double>::infinity();
  static const std::vector<std::pair<DescriptorKind, std::vector<Row>>> tables = {
      {DescriptorKind::FingerFlexing,
       {{-180, -20, "hyper extend"}, {-20, 30, "fully extend"}, {30, 60, "partially bent"}, {60, 180, "fully bent"}}},
      {DescriptorKind::FingerSpacing, {{0, 20, "closed"}, {20, 180, "open"}}},
      {DescriptorKind::FingerFingerDistance, {{0, 0.02, "contact"}, {0.02, inf, "no contact"}}},
      {DescriptorKind::FingerPalmDistance, {{0, 0.025, "contact"}, {0.025, 0.035, "near"}, {0.035, inf, "far"}}},
  };
  return tables;
}

Outcome criterion_table_b()
{
  Checker c;
  constexpr double inf = std::numeric_limits<double>::infinity();
  auto label = [](DescriptorKind k, double v) {
    const auto& t = StateTable::for_kind(k);
    return t.label(t.state_of(v));
  };
  for (const auto& [kind, rows] : expected_tables())
  {
    const auto name = descriptor_kind_name(kind);
    for (std::size_t i = 0; i < rows.size(); ++i)
    {
      const auto& r = rows[i];
      const double hi = std::isinf(r.upper) ? r.lower + 10.0 : r.upper;
      std::vector<double> inside = {r.lower, std::nextafter(r.lower, hi), 0.5 * (r.lower + hi),
                                    std::nextafter(hi, r.lower)};
      if (i + 1 == rows.size() && !std::isinf(r.upper))
        inside.push_back(r.upper);
      for (double v : inside)
        c.expect(label(kind, v) == r.label, fmt::format("{} {} -> {}", name, v, label(kind, v)));
      if (i == 0)
      {
        bool threw = false;
        try
        {
          label(kind, std::nextafter(r.lower, -inf));
        }
        catch (const DataError&)
        {
          threw = true;
        }
        c.expect(threw, fmt::format("{} below {} must be rejected", name, r.lower));
      }
    }
  }
  c.expect(label(DescriptorKind::FingerFlexing, 45.0) == "partially bent", "flexion 45");
  c.expect(label(DescriptorKind::FingerPalmDistance, 0.03) == "near", "finger-palm 0.03");
  return c.outcome("");
}

// ---------------------------------------------------------------- 2

Outcome criterion_wrist()
{
  Checker c;
  Rng rng(2024);
  double worst_pos = 0.0, worst_obj = 0.0;
  for (int trial = 0; trial < 100; ++trial)
  {
    const auto hand = testing::random_hand(rng);
    HandCalibration calib;
    calib.reference_lengths = hand.lengths;
    const Vec3 truth = hand.joints[kWrist];
    const auto fit = optimize_wrist(hand.joints, calib, truth + testing::random_offset(rng, 0.02));
    worst_pos = std::max(worst_pos, (fit.wrist - truth).norm());
    worst_obj = std::max(worst_obj, fit.residual);
  }
  c.expect(worst_pos <= 1e-5, fmt::format("wrist error {:.3g} m", worst_pos));
  c.expect(worst_obj <= 1e-10, fmt::format("objective {:.3g}", worst_obj));

  double worst_grid = 0.0;
  for (int trial = 0; trial < 20; ++trial)
  {
    auto hand = testing::random_hand(rng);
    HandCalibration calib;
    calib.reference_lengths = hand.lengths;
    calib.reference_lengths[trial % 5] += 0.001 + 0.001 * (trial % 5);
    const Vec3 center = hand.joints[kWrist];
    const auto fit = optimize_wrist(hand.joints, calib, center + testing::random_offset(rng, 0.02));
    const Vec3 oracle = testing::grid_wrist_oracle(hand.joints, calib.reference_lengths, center);
    // A minimum on the cube boundary would not certify anything.
    c.expect((oracle - center).cwiseAbs().maxCoeff() < 0.0195, fmt::format("grid minimum on the boundary ({})", trial));
    worst_grid = std::max(worst_grid, (fit.wrist - oracle).norm());
  }
  c.expect(worst_grid <= 1e-4, fmt::format("grid oracle gap {:.3g} m", worst_grid));
  return c.outcome(fmt::format("max wrist err {:.2g} m, max objective {:.2g}, max grid gap {:.2g} m", worst_pos,
                               worst_obj, worst_grid));
}

// ---------------------------------------------------------------- 3

Outcome criterion_clips()
{
  Checker c;
  Rng rng(303);
  const auto base = synthetic::active_motion(200, 5);
  for (int trial = 0; trial < 1000; ++trial)
  {
    const std::size_t frames = 1 + rng() % 200;
    std::vector<Vec3> pts(base.points().begin(), base.points().begin() + frames * kJointsTotal);
    std::set<std::size_t> injected;
    const int count = static_cast<int>(rng() % 4);
    for (int k = 0; k < count; ++k)
      injected.insert(rng() % frames);
    for (auto f : injected)
      pts[f * kJointsTotal + rng() % kJointsTotal].x() = std::numeric_limits<double>::quiet_NaN();
    const auto seq = MotionSequence::unchecked(30.0, std::move(pts));
    const auto defects = detect_defects(seq);
    std::vector<bool> mask(frames, false);
    for (auto f : defects.frames)
      mask[f] = true;
    for (auto f : injected)
      c.expect(mask[f], fmt::format("injected frame {} not flagged", f));
    c.expect(defects.frames.size() <= 3, "only injected frames are defective");
    const auto clips = extract_clips(frames, defects.frames);
    c.expect(clips == testing::clip_oracle(frames, mask, 60), fmt::format("case {} (F={})", trial, frames));
  }
  return c.outcome("1000 sampled cases");
}

// ---------------------------------------------------------------- 4

MotionSequence sinusoid_clip()
{
  std::vector<Vec3> pts;
  for (std::size_t f = 0; f < 60; ++f)
  {
    synthetic::HandPose moving;
    moving.fingers[1].flex_deg[0] = 45.0 - 45.0 * std::cos(2.0 * M_PI * static_cast<double>(f) / 30.0);
    const auto frame = synthetic::bimanual_frame(synthetic::HandPose{}, moving,
                                                 RigidTransform(Mat3::Identity(), Vec3(-0.15, 0, 0)),
                                                 RigidTransform(Mat3::Identity(), Vec3(0.15, 0, 0)));
    pts.insert(pts.end(), frame.begin(), frame.end());
  }
  return MotionSequence(30.0, std::move(pts));
}

Outcome criterion_intensity()
{
  Checker c;
  const IntensityConfig defaults;
  c.expect(defaults.tau_hand == 25.0 && defaults.tau_avg == 30.0, "default thresholds are 25 and 30");
  const auto still = clip_intensity(MotionSequence::constant(30.0, 60, synthetic::rest_frame()));
  c.expect(still.left == 0.0 && still.right == 0.0 && still.avg == 0.0, "static clip scores (0,0,0)");
  c.expect(!passes_filter(still, defaults), "static clip rejected");

  IntensityConfig one_joint;
  one_joint.joint_weights.fill(0.0);
  one_joint.joint_weights[joint_index(Finger::Index, JointClass::Mcp)] = 1.0;
  const auto w = clip_intensity(sinusoid_clip(), one_joint);
  const double rel = std::abs(w.right - 180.0) / 180.0;
  c.expect(rel <= 0.02, fmt::format("sinusoid scores {:.3f} deg/s", w.right));

  // Kept set against the three inequalities, on real clips and random scores.
  std::vector<ClipIntensity> ws;
  for (std::uint64_t seed = 0; seed < 20; ++seed)
  {
    const auto seq = synthetic::active_motion(120, seed);
    ws.push_back(clip_intensity(seq.slice(0, 60)));
  }
  Rng rng(4);
  std::uniform_real_distribution<double> u(0.0, 60.0);
  for (int i = 0; i < 2000; ++i)
  {
    const double l = u(rng), r = u(rng);
    ws.push_back({l, r, 0.5 * (l + r)});
  }
  for (double l : {24.0, 25.0, 26.0})
    for (double r : {24.0, 25.0, 35.0})
      for (double a : {29.0, 30.0, 31.0})
        ws.push_back({l, r, a});
  std::vector<std::size_t> direct;
  for (std::size_t i = 0; i < ws.size(); ++i)
    if (ws[i].left >= 25.0 && ws[i].right >= 25.0 && ws[i].avg >= 30.0)
      direct.push_back(i);
  c.expect(filter_clips(ws, defaults) == direct, "kept set differs from direct evaluation");
  return c.outcome(fmt::format("sinusoid {:.3f} deg/s ({:.2f}% off), {} kept of {}", w.right, 100.0 * rel,
                               direct.size(), ws.size()));
}

// ---------------------------------------------------------------- 5

Outcome criterion_events()
{
  Checker c;
  const DescriptorId id{DescriptorKind::FingerFlexing, "left", "index_pip"};
  const std::string states[] = {"fully extend", "partially bent", "fully bent"};
  std::size_t cases = 0;
  for (int len = 1; len <= 8; ++len)
  {
    int total = 1;
    for (int i = 0; i < len; ++i)
      total *= 3;
    for (int code = 0; code < total; ++code)
    {
      std::vector<std::string> labels;
      for (int i = 0, v = code; i < len; ++i, v /= 3)
        labels.push_back(states[v % 3]);
      for (bool holds : {false, true})
      {
        const auto events = segment_events(labels, {1, holds}, id);
        c.expect(reconstruct_labels(events, labels.size()) == labels, fmt::format("reconstruct code {}", code));
        const FeatureDocument doc{30.0, labels.size(), events};
        c.expect(parse_feature_json(to_feature_json(doc)) == doc, fmt::format("round trip code {}", code));
        c.expect(parse_feature_json(to_feature_json(doc, 2)) == doc, fmt::format("indented round trip {}", code));
      }
      ++cases;
    }
  }
  c.expect(cases == 9840, "case count");
  return c.outcome(fmt::format("{} label sequences", cases));
}

// ---------------------------------------------------------------- 6

// Palms face each other across the shift (palm normal along x), as in a
// palm-to-palm pose. Shifting a cloud within its own plane would pair up the
// facing edges instead, and v would shrink by the palm width.
PalmCloud facing_cloud(std::uint64_t seed)
{
  const auto seq = synthetic::active_motion(1, seed);
  auto vertices = palm_vertices(seq.hand(0, Hand::Left));
  Eigen::Matrix<double, 6, 3> centered;
  Vec3 mean = Vec3::Zero();
  for (const auto& v : vertices)
    mean += v / 6.0;
  for (int i = 0; i < 6; ++i)
    centered.row(i) = (vertices[i] - mean).transpose();
  const Eigen::JacobiSVD<Eigen::Matrix<double, 6, 3>> svd(centered, Eigen::ComputeFullV);
  const Vec3 normal = svd.matrixV().col(2);
  const Mat3 rot = Eigen::Quaterniond::FromTwoVectors(normal, Vec3::UnitX()).toRotationMatrix();
  for (auto& v : vertices)
    v = rot * (v - mean);
  return sample_palm_cloud(vertices, seed);
}

Outcome criterion_palm_relation()
{
  Checker c;
  const Vec3 shift(0.1, 0.0, 0.0);
  double worst = 0.0;
  for (std::uint64_t seed = 0; seed < 50; ++seed)
  {
    const auto left = facing_cloud(seed);
    PalmCloud right = left;
    for (auto& p : right.points)
      p += shift;
    const auto rel = palm_palm_relation(left, right);
    worst = std::max(worst, (rel.mean - shift).norm());

    // Full sort of all 10,000 pairs.
    std::vector<std::tuple<double, int, int>> all;
    for (int i = 0; i < kPalmCloudSize; ++i)
      for (int j = 0; j < kPalmCloudSize; ++j)
        all.emplace_back((right.points[j] - left.points[i]).squaredNorm(), i, j);
    std::sort(all.begin(), all.end());
    bool same = rel.pairs.size() == static_cast<std::size_t>(kPalmRelationPairs);
    for (int k = 0; same && k < kPalmRelationPairs; ++k)
      same = rel.pairs[k].first == std::get<1>(all[k]) && rel.pairs[k].second == std::get<2>(all[k]);
    c.expect(same, fmt::format("pair selection differs at seed {}", seed));
  }
  c.expect(worst <= 0.005, fmt::format("mean off by {:.3g} m", worst));
  return c.outcome(fmt::format("50 seeds, max |v - shift| {:.3g} m", worst));
}

// ---------------------------------------------------------------- 7

Outcome criterion_fsq()
{
  using namespace fsq;
  Checker c;
  std::string worst_text;
  for (int l : {5, 9, 16})
  {
    const FsqConfig cfg{{l}};
    double worst = 0.0;
    for (int i = -20000; i <= 20000; ++i)
    {
      const std::vector<double> y{i * 1e-3};
      worst = std::max(worst, std::abs(sigmoid(y[0]) - dequantize(quantize(y, cfg), cfg)[0]));
    }
    c.expect(worst <= 0.5 / (l - 1), fmt::format("L={} error {:.4g}", l, worst));
    worst_text += fmt::format(" L{}:{:.3g}", l, worst);
  }
  const std::vector<FsqConfig> books{{{8, 8, 8}}, {{4, 4, 4, 4, 4}}, {{8, 8, 8, 4}}, {{8, 8, 8, 8}}};
  const std::uint64_t sizes[] = {512, 1024, 2048, 4096};
  for (std::size_t b = 0; b < books.size(); ++b)
  {
    const auto& cfg = books[b];
    c.expect(cfg.codebook_size() == sizes[b], "codebook size");
    std::set<std::uint32_t> seen;
    std::set<std::vector<int>> codes;
    for (std::uint32_t i = 0; i < cfg.codebook_size(); ++i)
    {
      const auto q = code_from_index(i, cfg);
      codes.insert(q);
      seen.insert(code_index(q, cfg));
      c.expect(code_index(q, cfg) == i, fmt::format("index {} of {}", i, sizes[b]));
    }
    c.expect(seen.size() == sizes[b] && codes.size() == sizes[b], fmt::format("bijection {}", sizes[b]));
  }
  return c.outcome("round-trip max error" + worst_text);
}

// ---------------------------------------------------------------- 8

Outcome criterion_guidance()
{
  using namespace guidance;
  Checker c;
  const GuidanceConfig cfg;
  const auto g = gamma_field(CenterSets(kJointsTotal, {10}), cfg, 30);
  c.expect(g.at(10, 0) == 0.85, "gamma at center");
  c.expect(std::abs(g.at(15, 0) - 0.10) <= 1e-15 && std::abs(g.at(5, 0) - 0.10) <= 1e-15, "gamma at window edge");
  c.expect(g.at(16, 0) == 0.0 && g.at(4, 0) == 0.0, "gamma outside");

  for (int len = 1; len <= 20; ++len)
    for (int a = 0; a < len; ++a)
      for (int b = a; b < len; ++b)
      {
        const auto both = gamma_field(CenterSets(kJointsTotal, {a, b}), cfg, len);
        const auto ga = gamma_field(CenterSets(kJointsTotal, {a}), cfg, len);
        const auto gb = gamma_field(CenterSets(kJointsTotal, {b}), cfg, len);
        bool ok = true;
        for (std::size_t i = 0; i < both.values.size(); ++i)
        {
          // Brute force over the window definition.
          const int f = static_cast<int>(i / kJointsTotal);
          double expect = 0.0;
          for (int center : {a, b})
            if (std::abs(f - center) <= cfg.k_trans)
              expect = std::max(expect, cfg.p_hard - (cfg.p_hard - cfg.p_soft) * std::abs(f - center) / cfg.k_trans);
          ok = ok && both.values[i] == std::max(ga.values[i], gb.values[i]) &&
               std::abs(both.values[i] - expect) <= 1e-15;
        }
        c.expect(ok, fmt::format("overlap L={} a={} b={}", len, a, b));
      }

  const auto schedule = NoiseSchedule::linear(1000);
  const auto seq = synthetic::active_motion(60, 8);
  const auto rep = to_diffusion_rep(seq);
  MotionTensor gt(rep.frames, kJointsTotal, DiffusionRep::kChannels);
  gt.data = rep.data;
  const auto xT = gaussian_tensor(gt.frames, kJointsTotal, gt.channels, 3);
  const Denoiser oracle = [&](const MotionTensor&, int) { return gt; };
  TaskInputs inputs;
  inputs.keyframes = {0, 20, 40, 59};
  double worst = 0.0;
  for (Task task : {Task::InBetween, Task::Keyframe, Task::WristTrajectory, Task::HandReaction, Task::LongHorizon})
  {
    const auto gamma = gamma_field(task_centers(task, gt.frames, cfg, inputs), cfg, gt.frames);
    GaussianNoise noise(17);
    const auto out = guided_sample(oracle, xT, gt, gamma, schedule, noise);
    for (std::size_t i = 0; i < gt.data.size(); ++i)
      worst = std::max(worst, std::abs(out.data[i] - gt.data[i]));
  }
  c.expect(worst <= 1e-9, fmt::format("oracle sampling error {:.3g}", worst));

  ZeroNoise zero;
  bool exact = true;
  for (int t : {1, 2, 500, 1000})
  {
    const auto y = renoise(gt, t, schedule, zero);
    for (std::size_t i = 0; i < gt.data.size(); ++i)
      exact = exact && y.data[i] == std::sqrt(schedule.alpha_bar(t - 1)) * gt.data[i];
  }
  c.expect(exact, "renoise with zero noise");

  MotionTensor one(1, 1, 1, 0.7);
  const int t = 300;
  const double ab = schedule.alpha_bar(t - 1);
  GaussianNoise noise(42);
  double sum = 0.0, sq = 0.0;
  const int n = 10000;
  for (int i = 0; i < n; ++i)
  {
    const double v = renoise(one, t, schedule, noise).data[0];
    sum += v;
    sq += v * v;
  }
  const double mean = sum / n;
  const double var = sq / n - mean * mean;
  const double sigma = std::sqrt(1.0 - ab);
  c.expect(std::abs(mean - std::sqrt(ab) * 0.7) <= 4.0 * sigma / std::sqrt(double(n)), "noise mean");
  c.expect(std::abs(var - (1.0 - ab)) <= 0.05 * (1.0 - ab), "noise variance");
  return c.outcome(fmt::format("oracle error {:.2g}, mean dev {:.3g}, var ratio {:.4f}", worst,
                               mean - std::sqrt(ab) * 0.7, var / (1.0 - ab)));
}

// ---------------------------------------------------------------- 9

ContactLabels blank(std::size_t frames)
{
  ContactLabels l;
  l.frames = frames;
  l.intra.assign(frames * 8, 0);
  l.inter.assign(frames, 0);
  return l;
}

Outcome criterion_contact()
{
  Checker c;
  c.expect(kContactThreshold == 0.02, "threshold is 0.02 m");
  c.expect(ContactLabels{}.threshold == 0.02, "labels default threshold");
  auto gt = blank(30), gen = blank(30);
  for (int f = 10; f <= 20; ++f)
    gt.inter[f] = 1;
  for (int f = 15; f <= 25; ++f)
    gen.inter[f] = 1;
  const auto r = score(gt, gen).inter;
  c.expect(r.precision == 6.0 / 11.0 && r.recall == 6.0 / 11.0, "P and R are 6/11");
  c.expect(std::abs(r.f1 - 6.0 / 11.0) <= 1e-15, fmt::format("F1 {:.17g}", r.f1));

  const auto same = score(gt, gt).inter;
  c.expect(same.precision == 1.0 && same.recall == 1.0 && same.f1 == 1.0, "perfect match scores 1");
  auto flipped = gt;
  for (auto& v : flipped.inter)
    v = 1 - v;
  const auto inv = score(gt, flipped).inter;
  c.expect(inv.precision == 0.0 && inv.recall == 0.0 && inv.f1 == 0.0, "complement scores 0");

  // A flattened hand and its copy offset along the palm normal: the closest
  // points are exactly `gap` apart.
  std::vector<Vec3> flat(kJointsPerHand);
  const auto rest = synthetic::rest_frame();
  for (int j = 0; j < kJointsPerHand; ++j)
    flat[j] = Vec3(rest[j].x(), rest[j].y(), 0.0);
  for (double gap : {0.019, 0.021})
  {
    std::vector<Vec3> frame(flat);
    for (const auto& p : flat)
      frame.push_back(p + Vec3(0.0, 0.0, gap));
    const auto labels = inter_contact(MotionSequence::constant(30.0, 1, frame));
    c.expect(labels.at(0) == (gap < 0.02 ? 1 : 0), fmt::format("gap {} m", gap));
  }
  return c.outcome(fmt::format("P=R={:.17g} F1={:.17g}", r.precision, r.f1));
}

// ---------------------------------------------------------------- 10

std::string file_bytes(const fs::path& p)
{
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::map<std::string, std::string> digest_tree(const fs::path& dir)
{
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(dir))
    if (e.is_regular_file())
      out[fs::relative(e.path(), dir).string()] = sha256_hex(file_bytes(e.path()));
  return out;
}

Outcome criterion_pipeline(bool quick)
{
  Checker c;
  const std::size_t sequences = quick ? 4 : 100;
  const std::size_t frames = quick ? 5000 : 10000;
  const fs::path dir = fs::temp_directory_path() / "handkit_acceptance_pipeline";
  PipelineConfig cfg;
  cfg.output = dir.string();
  cfg.seed = 2024;
  cfg.workers = 0;
  const auto corpus = synthetic_corpus(sequences, frames, cfg.seed);

  std::vector<std::map<std::string, std::string>> digests;
  std::vector<double> timings;
  std::size_t total_frames = 0, events = 0;
  for (int run = 0; run < 2; ++run)
  {
    fs::remove_all(dir);
    const auto r = run_pipeline(cfg, *corpus);
    total_frames = r.frames;
    events = r.events;
    timings.push_back(r.describe_events_seconds);
    digests.push_back(digest_tree(dir));
  }
  fs::remove_all(dir);
  c.expect(total_frames == sequences * frames, "frame count");
  c.expect(digests[0] == digests[1], "artifacts differ between runs");
  c.expect(digests[0].count("manifest.json") == 1 && digests[0].count("features.jsonl") == 1, "artifact set");
  const double worst = std::max(timings[0], timings[1]);
  c.expect(worst < 120.0, fmt::format("describe+events took {:.1f} s", worst));
  Outcome o = c.outcome(fmt::format("{} frames, {} files identical, {} events, describe+events {:.1f} s / {:.1f} s "
                                    "on {} hardware thread(s)",
                                    total_frames, digests[0].size(), events, timings[0], timings[1],
                                    std::thread::hardware_concurrency()));
  o.timed_seconds = worst;
  o.skipped = quick;
  return o;
}

// ---------------------------------------------------------------- 11

Outcome criterion_representations()
{
  Checker c;
  double worst_ar = 0.0;
  for (std::uint64_t seed = 0; seed < 100; ++seed)
  {
    const auto seq = synthetic::active_motion(30 + seed % 31, 1000 + seed);
    std::vector<Vec3> wrist;
    for (std::size_t f = 0; f < seq.num_frames(); ++f)
      wrist.push_back(seq.at(f, Hand::Left, kWrist));
    const auto back = from_ar_rep(to_ar_rep(seq), wrist);
    for (std::size_t i = 0; i < seq.points().size(); ++i)
      worst_ar = std::max(worst_ar, (back.points()[i] - seq.points()[i]).norm());
  }
  c.expect(worst_ar <= 1e-6, fmt::format("AR round trip {:.3g} m", worst_ar));

  double worst_rot = 0.0;
  for (std::uint64_t seed = 0; seed < 20; ++seed)
  {
    const auto seq = synthetic::active_motion(20, seed);
    const auto rep = to_diffusion_rep(seq);
    const auto pos = rep.positions();
    c.expect(std::equal(pos.points().begin(), pos.points().end(), seq.points().begin(), seq.points().end()),
             fmt::format("positions not bit exact at seed {}", seed));

    const RigidTransform t(synthetic::random_rotation(seed + 50), Vec3(0.3 * seed, -1.0, 2.0));
    const auto moved = to_diffusion_rep(t.apply(seq));
    for (std::size_t f = 0; f < rep.frames; ++f)
      for (int j = 0; j < kJointsTotal; ++j)
        worst_rot = std::max(worst_rot, std::abs(moved.at(f, j, 3) - rep.at(f, j, 3)));
  }
  c.expect(worst_rot <= 1e-9, fmt::format("rotation scalar drift {:.3g} deg", worst_rot));
  return c.outcome(fmt::format("AR max err {:.2g} m, rotation scalar max drift {:.2g} deg", worst_ar, worst_rot));
}

struct Criterion
{
  int id;
  const char* name;
  double limit_seconds;
  std::function<Outcome()> run;
};

} // namespace

int main(int argc, char** argv)
{
  bool quick = false;
  std::set<int> only;
  for (int i = 1; i < argc; ++i)
  {
    if (std::strcmp(argv[i], "--quick") == 0)
      quick = true;
    else
      only.insert(std::atoi(argv[i]));
  }

  const std::vector<Criterion> criteria = {
      {1, "state table conformance", 1.0, criterion_table_b},
      {2, "wrist optimization oracle", 30.0, criterion_wrist},
      {3, "clip extraction equivalence", 10.0, criterion_clips},
      {4, "intensity filter", 5.0, criterion_intensity},
      {5, "event segmentation oracle", 10.0, criterion_events},
      {6, "palm relation translation", 5.0, criterion_palm_relation},
      {7, "fsq round trip and bijection", 5.0, criterion_fsq},
      {8, "guidance math", 20.0, criterion_guidance},
      {9, "contact metrics", 1.0, criterion_contact},
      {10, "pipeline determinism and throughput", 120.0, [quick] { return criterion_pipeline(quick); }},
      {11, "representation round trips", 60.0, criterion_representations},
  };

  int failed = 0;
  for (const auto& cr : criteria)
  {
    if (!only.empty() && only.count(cr.id) == 0)
      continue;
    const auto t0 = Clock::now();
    Outcome o;
    try
    {
      o = cr.run();
    }
    catch (const std::exception& e)
    {
      o.pass = false;
      o.detail = fmt::format("threw: {}", e.what());
    }
    const double wall = std::chrono::duration<double>(Clock::now() - t0).count();
    const double timed = o.timed_seconds >= 0.0 ? o.timed_seconds : wall;
    const bool in_time = timed < cr.limit_seconds;
    const char* verdict = o.skipped ? "SKIP" : (o.pass && in_time ? "PASS" : "FAIL");
    if (!o.skipped && !(o.pass && in_time))
      ++failed;
    std::cout << fmt::format("criterion {:2d} {} {} ({}; {:.2f} s wall, limit {:.0f} s{})\n", cr.id, verdict, cr.name,
                             o.detail, wall, cr.limit_seconds, o.timed_seconds >= 0.0 ? " on describe+events" : "")
              << std::flush;
  }
  std::cout << (failed == 0 ? "all criteria passed\n" : fmt::format("{} criteria failed\n", failed));
  return failed == 0 ? 0 : 1;
}
