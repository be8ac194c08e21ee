#include "handkit/guidance.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>

#include <fmt/format.h>

#include "handkit/error.hpp"

namespace handkit::guidance {

void GuidanceConfig::validate() const
{
  if (!(p_soft >= 0.0 && p_soft <= p_hard && p_hard <= 1.0))
    throw ValidationError("guidance weights need 0 <= p_soft <= p_hard <= 1");
  if (k_trans < 1)
    throw ValidationError("guidance k_trans must be at least 1");
  if (k_inbet < 1 || k_hor < 1)
    throw ValidationError("guidance k_inbet and k_hor must be at least 1");
}

MotionTensor::MotionTensor(std::size_t frames_, int joints_, int channels_, double fill)
    : frames(frames_), joints(joints_), channels(channels_),
      data(frames_ * static_cast<std::size_t>(joints_) * static_cast<std::size_t>(channels_), fill)
{
  if (joints_ <= 0 || channels_ <= 0)
    throw ValidationError("tensor joints and channels must be positive");
}

GammaField gamma_field(const CenterSets& centers, const GuidanceConfig& cfg, std::size_t length)
{
  cfg.validate();
  GammaField g;
  g.frames = length;
  g.joints = static_cast<int>(centers.size());
  g.values.assign(length * centers.size(), 0.0);
  const long k = cfg.k_trans;
  const double slope = (cfg.p_hard - cfg.p_soft) / static_cast<double>(k);
  for (std::size_t j = 0; j < centers.size(); ++j)
    for (int c : centers[j])
    {
      if (c < 0 || static_cast<std::size_t>(c) >= length)
        throw ValidationError(fmt::format("center frame {} outside [0, {})", c, length));
      const long lo = std::max<long>(0, c - k);
      const long hi = std::min<long>(static_cast<long>(length) - 1, c + k);
      for (long t = lo; t <= hi; ++t)
      {
        const double w = cfg.p_hard - slope * static_cast<double>(std::labs(t - c));
        double& cell = g.values[static_cast<std::size_t>(t) * centers.size() + j];
        cell = std::max(cell, w);
      }
    }
  return g;
}

MotionTensor blend_clean(const MotionTensor& pred, const MotionTensor& gt, const GammaField& gamma)
{
  if (!pred.same_shape(gt) || gamma.frames != pred.frames || gamma.joints != pred.joints)
    throw ValidationError("blend shapes do not match");
  MotionTensor out = pred;
  for (std::size_t f = 0; f < pred.frames; ++f)
    for (int j = 0; j < pred.joints; ++j)
    {
      const double w = gamma.at(f, j);
      if (w == 0.0)
        continue;
      for (int c = 0; c < pred.channels; ++c)
        out.at(f, j, c) = (1.0 - w) * pred.at(f, j, c) + w * gt.at(f, j, c);
    }
  return out;
}

NoiseSchedule::NoiseSchedule(std::span<const double> betas)
{
  if (betas.empty())
    throw ValidationError("noise schedule needs at least one step");
  alpha_bar_.reserve(betas.size() + 1);
  alpha_bar_.push_back(1.0);
  for (double b : betas)
  {
    if (!(b > 0.0 && b < 1.0))
      throw ValidationError(fmt::format("beta {} outside (0, 1)", b));
    alpha_bar_.push_back(alpha_bar_.back() * (1.0 - b));
  }
}

NoiseSchedule NoiseSchedule::linear(int steps, double beta_start, double beta_end)
{
  if (steps < 1)
    throw ValidationError("noise schedule needs at least one step");
  std::vector<double> betas(static_cast<std::size_t>(steps));
  for (int s = 0; s < steps; ++s)
    betas[s] = steps == 1 ? beta_start : beta_start + (beta_end - beta_start) * s / (steps - 1);
  return NoiseSchedule(betas);
}

void GaussianNoise::fill(std::span<double> out)
{
  for (double& v : out)
    v = normal_(rng_);
}

void ZeroNoise::fill(std::span<double> out)
{
  std::fill(out.begin(), out.end(), 0.0);
}

MotionTensor renoise(const MotionTensor& x0, int t, const NoiseSchedule& schedule, NoiseSource& noise)
{
  if (t < 1 || t > schedule.steps())
    throw ValidationError(fmt::format("renoise step {} outside [1, {}]", t, schedule.steps()));
  const double ab = schedule.alpha_bar(t - 1);
  const double a = std::sqrt(ab);
  const double b = std::sqrt(1.0 - ab);
  MotionTensor out = x0;
  noise.fill(out.data);
  for (std::size_t i = 0; i < out.data.size(); ++i)
    out.data[i] = a * x0.data[i] + b * out.data[i];
  return out;
}

std::optional<Task> parse_task(std::string_view name)
{
  if (name == "inbetween")
    return Task::InBetween;
  if (name == "keyframe")
    return Task::Keyframe;
  if (name == "wrist")
    return Task::WristTrajectory;
  if (name == "reaction")
    return Task::HandReaction;
  if (name == "longhorizon")
    return Task::LongHorizon;
  return std::nullopt;
}

CenterSets task_centers(Task task, std::size_t length, const GuidanceConfig& cfg, const TaskInputs& inputs)
{
  cfg.validate();
  if (length == 0)
    throw ValidationError("guidance needs at least one frame");
  const int n = static_cast<int>(length);
  std::vector<int> all(length);
  for (int t = 0; t < n; ++t)
    all[t] = t;
  CenterSets centers(kJointsTotal);
  switch (task)
  {
    case Task::InBetween:
    {
      std::vector<int> c;
      for (int t = 0; t < n; ++t)
        if (t < cfg.k_inbet || t >= n - cfg.k_inbet)
          c.push_back(t);
      centers.assign(kJointsTotal, c);
      break;
    }
    case Task::Keyframe:
    {
      if (inputs.keyframes.empty())
        throw ValidationError("keyframe task needs at least one keyframe");
      std::vector<int> c = inputs.keyframes;
      std::sort(c.begin(), c.end());
      c.erase(std::unique(c.begin(), c.end()), c.end());
      if (c.front() < 0 || c.back() >= n)
        throw ValidationError(fmt::format("keyframes must lie in [0, {})", n));
      centers.assign(kJointsTotal, c);
      break;
    }
    case Task::WristTrajectory:
      for (Hand h : kHands)
        centers[global_joint(h, kWrist)] = all;
      break;
    case Task::HandReaction:
      for (int j = 0; j < kJointsPerHand; ++j)
        centers[global_joint(inputs.conditioning_hand, j)] = all;
      break;
    case Task::LongHorizon:
    {
      if (n < cfg.k_hor + cfg.k_trans)
        throw ValidationError(fmt::format("long-horizon segments need at least {} frames", cfg.k_hor + cfg.k_trans));
      std::vector<int> c(all.begin(), all.begin() + cfg.k_hor);
      centers.assign(kJointsTotal, c);
      break;
    }
  }
  return centers;
}

MotionTensor long_horizon_target(const MotionTensor& previous, std::size_t length, const GuidanceConfig& cfg)
{
  cfg.validate();
  const auto head = static_cast<std::size_t>(cfg.k_hor + cfg.k_trans);
  if (previous.frames < head || length < head)
    throw ValidationError(fmt::format("long-horizon conditioning needs {} frames", head));
  MotionTensor out(length, previous.joints, previous.channels);
  const std::size_t row = static_cast<std::size_t>(previous.joints) * previous.channels;
  std::copy(previous.data.end() - static_cast<std::ptrdiff_t>(head * row), previous.data.end(), out.data.begin());
  return out;
}

namespace {

MotionTensor run_loop(const Denoiser& denoiser, const MotionTensor& x_T, const MotionTensor* gt,
                      const GammaField* gamma, const NoiseSchedule& schedule, NoiseSource& noise)
{
  MotionTensor x = x_T;
  MotionTensor x0;
  for (int t = schedule.steps(); t >= 1; --t)
  {
    MotionTensor pred;
    try
    {
      pred = denoiser(x, t);
    }
    catch (const std::exception& e)
    {
      throw Error(fmt::format("denoiser failed at step {}: {}", t, e.what()));
    }
    if (!pred.same_shape(x_T))
      throw Error(fmt::format("denoiser returned a mis-shaped tensor at step {}", t));
    x0 = gt ? blend_clean(pred, *gt, *gamma) : std::move(pred);
    x = renoise(x0, t, schedule, noise);
  }
  return x0;
}

} // namespace

MotionTensor guided_sample(const Denoiser& denoiser, const MotionTensor& x_T, const MotionTensor& x0_gt,
                           const GammaField& gamma, const NoiseSchedule& schedule, NoiseSource& noise)
{
  if (!x_T.same_shape(x0_gt))
    throw ValidationError("x_T and x0_gt shapes differ");
  return run_loop(denoiser, x_T, &x0_gt, &gamma, schedule, noise);
}

MotionTensor unguided_sample(const Denoiser& denoiser, const MotionTensor& x_T, const NoiseSchedule& schedule,
                             NoiseSource& noise)
{
  return run_loop(denoiser, x_T, nullptr, nullptr, schedule, noise);
}

MotionTensor gaussian_tensor(std::size_t frames, int joints, int channels, std::uint64_t seed)
{
  MotionTensor out(frames, joints, channels);
  GaussianNoise(seed).fill(out.data);
  return out;
}

} // namespace handkit::guidance
