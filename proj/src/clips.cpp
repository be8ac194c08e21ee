#include "handkit/clips.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "handkit/contact.hpp"
#include "handkit/error.hpp"

namespace handkit {

void ClipSpec::validate() const
{
  if (length < 2)
    throw ValidationError("clip length must be at least 2");
  if (stride < 1)
    throw ValidationError("clip stride must be at least 1");
}

std::vector<std::string> defect_reason_names(std::uint8_t mask)
{
  std::vector<std::string> names;
  if (mask & kDefectNonFinite)
    names.emplace_back("nonfinite");
  if (mask & kDefectVelocity)
    names.emplace_back("velocity");
  if (mask & kDefectBoneLength)
    names.emplace_back("bone_length");
  return names;
}

void DefectConfig::validate() const
{
  if (!(max_speed > 0.0))
    throw ValidationError("max_speed must be positive");
  if (!(max_bone_deviation > 0.0))
    throw ValidationError("max_bone_deviation must be positive");
}

DefectReport detect_defects(const MotionSequence& seq, const DefectConfig& cfg)
{
  cfg.validate();
  const std::size_t n = seq.num_frames();
  std::vector<std::uint8_t> flags(n, 0);
  std::vector<std::uint8_t> finite(n, 1);

  for (std::size_t f = 0; f < n; ++f)
    for (const auto& p : seq.frame(f))
      if (!p.allFinite())
      {
        finite[f] = 0;
        flags[f] |= kDefectNonFinite;
        break;
      }

  const double max_step = cfg.max_speed / seq.fps();
  for (std::size_t f = 1; f < n; ++f)
  {
    if (!finite[f] || !finite[f - 1])
      continue;
    const auto a = seq.frame(f - 1);
    const auto b = seq.frame(f);
    for (int j = 0; j < kJointsTotal; ++j)
      if ((b[j] - a[j]).norm() > max_step)
      {
        flags[f] |= kDefectVelocity;
        break;
      }
  }

  // Bones are (parent, child) for every non-wrist joint of both hands.
  constexpr int kBones = 2 * (kJointsPerHand - 1);
  std::vector<double> lengths;
  lengths.reserve(n);
  std::vector<double> medians(kBones, 0.0);
  const auto bone_length = [&](std::size_t f, int bone) {
    const Hand h = static_cast<Hand>(bone / (kJointsPerHand - 1));
    const int joint = 1 + bone % (kJointsPerHand - 1);
    return (seq.at(f, h, joint) - seq.at(f, h, parent_joint(joint))).norm();
  };
  for (int b = 0; b < kBones; ++b)
  {
    lengths.clear();
    for (std::size_t f = 0; f < n; ++f)
      if (finite[f])
        lengths.push_back(bone_length(f, b));
    if (lengths.empty())
      continue;
    const auto mid = lengths.begin() + static_cast<std::ptrdiff_t>(lengths.size() / 2);
    std::nth_element(lengths.begin(), mid, lengths.end());
    medians[b] = *mid;
  }
  for (std::size_t f = 0; f < n; ++f)
  {
    if (!finite[f])
      continue;
    for (int b = 0; b < kBones; ++b)
      if (medians[b] > 0.0 && std::abs(bone_length(f, b) - medians[b]) > cfg.max_bone_deviation * medians[b])
      {
        flags[f] |= kDefectBoneLength;
        break;
      }
  }

  DefectReport report;
  for (std::size_t f = 0; f < n; ++f)
    if (flags[f])
    {
      report.frames.push_back(f);
      report.reasons.push_back(flags[f]);
    }
  return report;
}

std::vector<ClipWindow> extract_clips(std::size_t num_frames, std::span<const std::size_t> defective,
                                      const ClipSpec& spec)
{
  spec.validate();
  const auto len = static_cast<std::size_t>(spec.length);
  const auto stride = static_cast<std::size_t>(spec.stride);
  std::vector<ClipWindow> clips;

  std::size_t start = 0; // first frame of the current valid interval
  auto place = [&](std::size_t a, std::size_t b_exclusive) {
    for (std::size_t t = a; t + len <= b_exclusive; t += stride)
      clips.push_back({t, t + len});
  };
  std::vector<std::size_t> sorted(defective.begin(), defective.end());
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t d : sorted)
  {
    if (d >= num_frames)
      break;
    if (d >= start)
      place(start, d);
    start = std::max(start, d + 1);
  }
  if (start < num_frames)
    place(start, num_frames);
  return clips;
}

std::vector<double> bending_angle_series(const MotionSequence& seq, Hand hand, int joint)
{
  if (joint <= 0 || joint >= kJointsPerHand || !has_bending_angle(joint))
    throw ValidationError(fmt::format("joint {} has no bending angle", joint));
  const int pre = parent_joint(joint);
  const int nxt = child_joint(joint);
  std::vector<double> out(seq.num_frames());
  for (std::size_t f = 0; f < out.size(); ++f)
  {
    const auto hj = seq.hand(f, hand);
    const Vec3 a = hj[joint] - hj[pre];
    const Vec3 b = hj[nxt] - hj[joint];
    const double la = a.norm();
    const double lb = b.norm();
    if (!(la > 1e-12) || !(lb > 1e-12))
      throw DataError(fmt::format("degenerate segment at frame {} ({} {})", f, hand_name(hand), joint_name(joint)));
    out[f] = angle_degrees(a, b);
  }
  return out;
}

std::array<double, kJointsPerHand> IntensityConfig::default_weights()
{
  std::array<double, kJointsPerHand> w{};
  for (Finger f : kFingers)
  {
    w[joint_index(f, JointClass::Mcp)] = 4.0;
    w[joint_index(f, JointClass::Pip)] = 2.0;
    w[joint_index(f, JointClass::Dip)] = 1.0;
  }
  return w;
}

void IntensityConfig::validate() const
{
  for (int j = 0; j < kJointsPerHand; ++j)
  {
    if (!(joint_weights[j] >= 0.0) || !std::isfinite(joint_weights[j]))
      throw ValidationError("joint weights must be non-negative");
    if (!has_bending_angle(j) && joint_weights[j] != 0.0)
      throw ValidationError(fmt::format("joint {} has no bending angle and must have weight 0", joint_name(j)));
  }
  for (Finger f : kFingers)
  {
    const double mcp = joint_weights[joint_index(f, JointClass::Mcp)];
    const double pip = joint_weights[joint_index(f, JointClass::Pip)];
    const double dip = joint_weights[joint_index(f, JointClass::Dip)];
    if (mcp < pip || pip < dip)
      throw ValidationError(fmt::format("{} weights must not increase distally", finger_name(f)));
  }
  if (!(tau_hand >= 0.0) || !(tau_avg >= 0.0))
    throw ValidationError("intensity thresholds must be non-negative");
}

ClipIntensity clip_intensity(const MotionSequence& clip, const IntensityConfig& cfg)
{
  const std::size_t n = clip.num_frames();
  if (n < 2)
    throw DataError("clip intensity needs at least two frames");
  const double fps = clip.fps();
  std::array<double, 2> hand_value{};
  for (Hand h : kHands)
  {
    double weighted = 0.0;
    double weight_sum = 0.0;
    for (int j = 0; j < kJointsPerHand; ++j)
    {
      const double w = cfg.joint_weights[j];
      if (w == 0.0 || !has_bending_angle(j))
        continue;
      const auto theta = bending_angle_series(clip, h, j);
      double speed_sum = 0.0;
      for (std::size_t t = 0; t + 1 < n; ++t)
        speed_sum += std::abs(theta[t + 1] - theta[t]) * fps;
      // The last frame repeats the final forward difference.
      speed_sum += std::abs(theta[n - 1] - theta[n - 2]) * fps;
      weighted += w * speed_sum;
      weight_sum += w * static_cast<double>(n);
    }
    hand_value[static_cast<int>(h)] = weight_sum > 0.0 ? weighted / weight_sum : 0.0;
  }
  return {hand_value[0], hand_value[1], 0.5 * (hand_value[0] + hand_value[1])};
}

bool passes_filter(const ClipIntensity& w, const IntensityConfig& cfg)
{
  return w.left >= cfg.tau_hand && w.right >= cfg.tau_hand && w.avg >= cfg.tau_avg;
}

std::vector<std::size_t> filter_clips(std::span<const ClipIntensity> intensities, const IntensityConfig& cfg)
{
  std::vector<std::size_t> kept;
  for (std::size_t i = 0; i < intensities.size(); ++i)
    if (passes_filter(intensities[i], cfg))
      kept.push_back(i);
  return kept;
}

void StatsAccumulator::add(std::span<const std::uint8_t> contact, double fps, const ClipIntensity& intensity)
{
  std::size_t ones = 0;
  std::size_t spans = 0;
  for (std::size_t f = 0; f < contact.size(); ++f)
  {
    if (!contact[f])
      continue;
    ++ones;
    if (f == 0 || !contact[f - 1])
      ++spans;
  }
  frames_ += contact.size();
  contact_frames_ += ones;
  events_ += spans;
  seconds_ += static_cast<double>(contact.size()) / fps;
  contact_seconds_ += static_cast<double>(ones) / fps;
  intensity_sum_ += intensity.avg;
  ++clips_;
}

void StatsAccumulator::merge(const StatsAccumulator& other)
{
  frames_ += other.frames_;
  contact_frames_ += other.contact_frames_;
  events_ += other.events_;
  seconds_ += other.seconds_;
  contact_seconds_ += other.contact_seconds_;
  intensity_sum_ += other.intensity_sum_;
  clips_ += other.clips_;
}

DatasetStats StatsAccumulator::result() const
{
  DatasetStats s;
  s.frames = frames_;
  s.contact_frames = contact_frames_;
  s.contact_events = events_;
  s.clips = clips_;
  if (frames_ > 0)
    s.contact_ratio = static_cast<double>(contact_frames_) / static_cast<double>(frames_);
  if (events_ > 0)
    s.contact_duration_s = contact_seconds_ / static_cast<double>(events_);
  if (seconds_ > 0.0)
    s.contact_freq_per_min = static_cast<double>(events_) / (seconds_ / 60.0);
  if (clips_ > 0)
    s.motion_intensity_deg_s = intensity_sum_ / static_cast<double>(clips_);
  return s;
}

DatasetStats dataset_stats(std::span<const MotionSequence> clips, const StatsConfig& cfg)
{
  StatsAccumulator acc;
  for (const auto& clip : clips)
  {
    const auto contact = inter_contact(clip, cfg.contact_threshold, cfg.seed);
    acc.add(contact, clip.fps(), clip_intensity(clip, cfg.intensity));
  }
  return acc.result();
}

} // namespace handkit
