#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "handkit/motion.hpp"
#include "handkit/random.hpp"

namespace handkit::guidance {

struct GuidanceConfig
{
  double p_hard = 0.85;
  double p_soft = 0.10;
  int k_trans = 5;
  int k_inbet = 5;
  int k_hor = 10;

  void validate() const;
};

/// Dense (frame, joint, channel) array; joints are the 42 skeleton joints.
struct MotionTensor
{
  std::size_t frames = 0;
  int joints = kJointsTotal;
  int channels = 0;
  std::vector<double> data;

  MotionTensor() = default;
  MotionTensor(std::size_t frames, int joints, int channels, double fill = 0.0);

  double& at(std::size_t f, int j, int c) { return data[(f * joints + j) * channels + c]; }
  double at(std::size_t f, int j, int c) const { return data[(f * joints + j) * channels + c]; }
  bool same_shape(const MotionTensor& o) const
  {
    return frames == o.frames && joints == o.joints && channels == o.channels;
  }
};

/// Center frames per joint (42 sets).
using CenterSets = std::vector<std::vector<int>>;

/// Per (frame, joint) constraint weights, frame-major.
struct GammaField
{
  std::size_t frames = 0;
  int joints = kJointsTotal;
  std::vector<double> values;

  double at(std::size_t f, int j) const { return values[f * joints + j]; }
};

/// gamma = p_hard - (p_hard - p_soft) * |t - i| / k_trans inside each
/// window |t - i| <= k_trans, maximum over covering windows, 0 elsewhere.
GammaField gamma_field(const CenterSets& centers, const GuidanceConfig& cfg, std::size_t length);

/// (1 - gamma) * pred + gamma * gt, broadcasting gamma over channels.
MotionTensor blend_clean(const MotionTensor& pred, const MotionTensor& gt, const GammaField& gamma);

/// Cumulative signal levels alpha_bar[0..T] with alpha_bar[0] = 1.
class NoiseSchedule
{
public:
  /// alpha_bar[t] = prod_{s<=t} (1 - betas[s-1]); betas in (0, 1).
  explicit NoiseSchedule(std::span<const double> betas);
  /// Linear betas from beta_start to beta_end over `steps`.
  static NoiseSchedule linear(int steps = 1000, double beta_start = 1e-4, double beta_end = 2e-2);

  int steps() const { return static_cast<int>(alpha_bar_.size()) - 1; }
  double alpha_bar(int t) const { return alpha_bar_.at(static_cast<std::size_t>(t)); }

private:
  std::vector<double> alpha_bar_;
};

class NoiseSource
{
public:
  virtual ~NoiseSource() = default;
  virtual void fill(std::span<double> out) = 0;
};

/// Standard normal draws from a seeded engine.
class GaussianNoise final : public NoiseSource
{
public:
  explicit GaussianNoise(std::uint64_t seed) : rng_(seed) {}
  void fill(std::span<double> out) override;

private:
  Rng rng_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

class ZeroNoise final : public NoiseSource
{
public:
  void fill(std::span<double> out) override;
};

/// sqrt(alpha_bar[t-1]) * x0 + sqrt(1 - alpha_bar[t-1]) * eps, 1 <= t <= T.
MotionTensor renoise(const MotionTensor& x0, int t, const NoiseSchedule& schedule, NoiseSource& noise);

enum class Task
{
  InBetween,
  Keyframe,
  WristTrajectory,
  HandReaction,
  LongHorizon,
};

std::optional<Task> parse_task(std::string_view name);

struct TaskInputs
{
  std::vector<int> keyframes;        ///< Keyframe
  Hand conditioning_hand = Hand::Left; ///< HandReaction
};

CenterSets task_centers(Task task, std::size_t length, const GuidanceConfig& cfg, const TaskInputs& inputs = {});

/// Target for the next long-horizon segment: the last K_hor + k_trans frames
/// of `previous` copied to the head, zeros elsewhere.
MotionTensor long_horizon_target(const MotionTensor& previous, std::size_t length, const GuidanceConfig& cfg);

/// (x_t, t) -> predicted clean sample.
using Denoiser = std::function<MotionTensor(const MotionTensor& x_t, int t)>;

/// For t = T..1: x0 = blend_clean(denoiser(x_t, t), gt, gamma), then
/// x_{t-1} = renoise(x0, t). Returns x0 from the last step.
MotionTensor guided_sample(const Denoiser& denoiser, const MotionTensor& x_T, const MotionTensor& x0_gt,
                           const GammaField& gamma, const NoiseSchedule& schedule, NoiseSource& noise);

/// The same loop without blending.
MotionTensor unguided_sample(const Denoiser& denoiser, const MotionTensor& x_T, const NoiseSchedule& schedule,
                             NoiseSource& noise);

MotionTensor gaussian_tensor(std::size_t frames, int joints, int channels, std::uint64_t seed);

} // namespace handkit::guidance
