#include "handkit/contact.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>
#include <json.hpp>

#include "handkit/error.hpp"
#include "handkit/palm.hpp"

namespace handkit {

namespace {

void check_threshold(double threshold)
{
  if (!(threshold > 0.0) || !std::isfinite(threshold))
    throw ValidationError("contact threshold must be positive");
}

struct Sphere
{
  Vec3 center;
  double radius;
};

Sphere bounding_sphere(std::span<const Vec3> pts)
{
  Vec3 c = Vec3::Zero();
  for (const auto& p : pts)
    c += p;
  c /= static_cast<double>(pts.size());
  double r = 0.0;
  for (const auto& p : pts)
    r = std::max(r, (p - c).norm());
  return {c, r};
}

double min_distance(std::span<const Vec3> a, std::span<const Vec3> b)
{
  double best = std::numeric_limits<double>::infinity();
  for (const auto& p : a)
    for (const auto& q : b)
      best = std::min(best, (p - q).squaredNorm());
  return std::sqrt(best);
}

std::vector<Vec3> with_cloud(std::span<const Vec3> joints, const PalmCloud& cloud)
{
  std::vector<Vec3> pts(joints.begin(), joints.end());
  pts.insert(pts.end(), cloud.points.begin(), cloud.points.end());
  return pts;
}

ContactCounts count_any(std::span<const std::uint8_t> gt, std::span<const std::uint8_t> gen, std::size_t frames,
                        std::size_t channels)
{
  ContactCounts c;
  for (std::size_t ch = 0; ch < channels; ++ch)
  {
    bool g = false, s = false;
    for (std::size_t f = 0; f < frames; ++f)
    {
      g = g || gt[f * channels + ch];
      s = s || gen[f * channels + ch];
    }
    c.tp += g && s;
    c.fp += !g && s;
    c.fn += g && !s;
  }
  return c;
}

void check_shapes(const ContactLabels& gt, const ContactLabels& gen)
{
  if (gt.frames != gen.frames || gt.intra.size() != gen.intra.size() || gt.inter.size() != gen.inter.size() ||
      gt.intra.size() != gt.frames * 8 || gt.inter.size() != gt.frames)
    throw ValidationError(fmt::format("contact label shapes differ ({} vs {} frames)", gt.frames, gen.frames));
}

nlohmann::ordered_json score_json(const ContactScore& s)
{
  nlohmann::ordered_json j;
  j["precision"] = s.precision;
  j["recall"] = s.recall;
  j["f1"] = s.f1;
  j["tp"] = s.counts.tp;
  j["fp"] = s.counts.fp;
  j["fn"] = s.counts.fn;
  return j;
}

} // namespace

std::vector<std::uint8_t> intra_contact(const MotionSequence& seq, double threshold)
{
  check_threshold(threshold);
  const int thumb = joint_index(Finger::Thumb, JointClass::Tip);
  std::vector<std::uint8_t> out(seq.num_frames() * 8);
  for (std::size_t f = 0; f < seq.num_frames(); ++f)
    for (Hand h : kHands)
    {
      const auto hj = seq.hand(f, h);
      for (int k = 0; k < 4; ++k)
      {
        const int tip = joint_index(static_cast<Finger>(k + 1), JointClass::Tip);
        out[(f * 2 + static_cast<std::size_t>(h)) * 4 + k] = (hj[thumb] - hj[tip]).norm() < threshold;
      }
    }
  return out;
}

double min_interhand_distance(const MotionSequence& seq, std::size_t frame, std::uint64_t seed)
{
  const auto left = with_cloud(seq.hand(frame, Hand::Left), palm_cloud(seq, frame, Hand::Left, seed));
  const auto right = with_cloud(seq.hand(frame, Hand::Right), palm_cloud(seq, frame, Hand::Right, seed));
  return min_distance(left, right);
}

std::vector<std::uint8_t> inter_contact(const MotionSequence& seq, double threshold, std::uint64_t seed)
{
  check_threshold(threshold);
  std::vector<std::uint8_t> out(seq.num_frames());
  for (std::size_t f = 0; f < seq.num_frames(); ++f)
  {
    const auto l = seq.hand(f, Hand::Left);
    const auto r = seq.hand(f, Hand::Right);
    // Palm clouds lie inside the hull of each hand's joints, so the spheres
    // bound every candidate pair.
    const Sphere sl = bounding_sphere(l);
    const Sphere sr = bounding_sphere(r);
    if ((sl.center - sr.center).norm() - sl.radius - sr.radius >= threshold)
      continue;
    if (min_distance(l, r) < threshold)
    {
      out[f] = 1;
      continue;
    }
    out[f] = min_interhand_distance(seq, f, seed) < threshold;
  }
  return out;
}

ContactLabels contact_labels(const MotionSequence& seq, double threshold, std::uint64_t seed)
{
  ContactLabels labels;
  labels.frames = seq.num_frames();
  labels.threshold = threshold;
  labels.intra = intra_contact(seq, threshold);
  labels.inter = inter_contact(seq, threshold, seed);
  return labels;
}

ContactScore score_counts(const ContactCounts& c)
{
  ContactScore s;
  s.counts = c;
  const bool gt_positive = c.tp + c.fn > 0;
  const bool gen_positive = c.tp + c.fp > 0;
  if (!gt_positive || !gen_positive)
  {
    s.degenerate = true;
    const double v = !gt_positive && !gen_positive ? 1.0 : 0.0;
    s.precision = gen_positive ? 0.0 : v;
    s.recall = gt_positive ? 0.0 : v;
    s.f1 = v;
    return s;
  }
  s.precision = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp);
  s.recall = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
  const double sum = s.precision + s.recall;
  s.f1 = sum > 0.0 ? 2.0 * s.precision * s.recall / sum : 0.0;
  return s;
}

ContactCounts count_matches(std::span<const std::uint8_t> gt, std::span<const std::uint8_t> gen)
{
  if (gt.size() != gen.size())
    throw ValidationError(fmt::format("label lengths differ ({} vs {})", gt.size(), gen.size()));
  ContactCounts c;
  for (std::size_t i = 0; i < gt.size(); ++i)
  {
    const bool g = gt[i] != 0;
    const bool s = gen[i] != 0;
    c.tp += g && s;
    c.fp += !g && s;
    c.fn += g && !s;
  }
  return c;
}

namespace {

std::pair<ContactCounts, ContactCounts> counts_for(const ContactLabels& gt, const ContactLabels& gen,
                                                   ContactMode mode)
{
  check_shapes(gt, gen);
  if (mode == ContactMode::PerClip)
    return {count_any(gt.intra, gen.intra, gt.frames, 8), count_any(gt.inter, gen.inter, gt.frames, 1)};
  return {count_matches(gt.intra, gen.intra), count_matches(gt.inter, gen.inter)};
}

} // namespace

ContactReport score(const ContactLabels& gt, const ContactLabels& gen, ContactMode mode)
{
  const auto [intra, inter] = counts_for(gt, gen, mode);
  return {score_counts(intra), score_counts(inter)};
}

void ContactReportAccumulator::add(const ContactLabels& gt, const ContactLabels& gen, ContactMode mode)
{
  const auto [intra, inter] = counts_for(gt, gen, mode);
  intra_ += intra;
  inter_ += inter;
}

ContactReport ContactReportAccumulator::result() const
{
  return {score_counts(intra_), score_counts(inter_)};
}

std::string contact_report_json(const ContactReport& report, int indent)
{
  nlohmann::ordered_json j;
  j["intra"] = score_json(report.intra);
  j["inter"] = score_json(report.inter);
  return j.dump(indent) + "\n";
}

} // namespace handkit
