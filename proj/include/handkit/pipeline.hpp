#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "handkit/clips.hpp"
#include "handkit/error.hpp"
#include "handkit/events.hpp"
#include "handkit/mocap.hpp"

namespace handkit {

std::string_view tool_version();

/// Single JSON document configuring every stage. Unknown keys are rejected.
struct PipelineConfig
{
  struct Stages
  {
    bool solve = false;
    bool canonicalize = true;
    bool clip = true;
    bool filter = true;
    bool describe = true;
    bool events = true;
    bool annotate = true;
    bool stats = true;
  };

  Stages stages{};
  std::string input;  ///< directory of *.hmx.json (or *.csv marker files when solving)
  std::string output; ///< artifact directory
  std::string calibration; ///< calibration JSON, required when solving
  double marker_fps = kCanonicalFps;
  double target_fps = kCanonicalFps;
  std::uint64_t seed = 0;
  std::size_t workers = 0;
  bool write_clips = false; ///< also write every kept clip as HMX-JSON

  ClipSpec clip{};
  DefectConfig defects{};
  IntensityConfig intensity{};
  EventConfig events{};
  std::vector<int> caption_levels{1, 2, 3, 4, 5};
  double contact_threshold = 0.02;

  static PipelineConfig from_json(std::string_view text);
  /// Canonical serialization (fixed key order); its SHA-256 is the config hash.
  std::string to_json() const;
  void validate() const;
};

std::string sha256_hex(std::string_view bytes);

/// Where sequences come from.
class CorpusSource
{
public:
  virtual ~CorpusSource() = default;
  virtual std::size_t size() const = 0;
  virtual std::string id(std::size_t i) const = 0;
  virtual MotionSequence load(std::size_t i) const = 0;
};

/// *.hmx.json files, or *.csv marker files solved with `calibration`, sorted
/// by file name.
std::unique_ptr<CorpusSource> directory_corpus(const PipelineConfig& cfg);

/// `count` sequences of `frames` frames from synthetic::active_motion.
std::unique_ptr<CorpusSource> synthetic_corpus(std::size_t count, std::size_t frames, std::uint64_t seed);

/// A stage failed; `stage` and `input_id` identify where.
class PipelineError : public Error
{
public:
  PipelineError(std::string stage, std::string input_id, const std::string& what);
  const std::string& stage() const { return stage_; }
  const std::string& input_id() const { return input_id_; }

private:
  std::string stage_;
  std::string input_id_;
};

struct PipelineResult
{
  std::size_t sequences = 0;
  std::size_t frames = 0;
  std::size_t clips = 0;
  std::size_t kept_clips = 0;
  std::size_t events = 0;
  DatasetStats stats{};
  double describe_events_seconds = 0.0; ///< wall time in descriptor + event extraction
  double total_seconds = 0.0;
};

/// solve -> canonicalize -> clip -> filter -> describe -> events -> annotate
/// -> stats, skipping disabled stages. Writes artifacts plus manifest.json
/// (config hash, tool version, per-artifact SHA-256) into cfg.output. On
/// failure the manifest is written with "complete": false and a
/// PipelineError is thrown.
PipelineResult run_pipeline(const PipelineConfig& cfg, const CorpusSource& corpus);

} // namespace handkit
