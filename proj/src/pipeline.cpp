#include "handkit/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>

#include <fmt/format.h>
#include <json.hpp>
#include <openssl/evp.h>

#include "handkit/captioner.hpp"
#include "handkit/contact.hpp"
#include "handkit/descriptors.hpp"
#include "handkit/hmx_io.hpp"
#include "handkit/parallel.hpp"
#include "handkit/random.hpp"
#include "handkit/synthetic.hpp"

#ifndef HANDKIT_VERSION
#define HANDKIT_VERSION "0.0.0"
#endif

namespace handkit {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

std::string_view tool_version()
{
  return HANDKIT_VERSION;
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0)
{
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

// Reads keys from a JSON object, rejecting any key it was not asked about.
class Reader
{
public:
  Reader(const nlohmann::json& j, std::string path) : j_(j), path_(std::move(path))
  {
    if (!j_.is_object())
      throw ValidationError(fmt::format("config: {} must be an object", path_.empty() ? "document" : path_));
  }

  template <typename T>
  void get(const char* key, T& out)
  {
    seen_.push_back(key);
    if (!j_.contains(key))
      return;
    try
    {
      out = j_.at(key).get<T>();
    }
    catch (const nlohmann::json::exception&)
    {
      throw ValidationError(fmt::format("config: {} has the wrong type", name(key)));
    }
  }

  Reader sub(const char* key)
  {
    seen_.push_back(key);
    static const nlohmann::json empty = nlohmann::json::object();
    return Reader(j_.contains(key) ? j_.at(key) : empty, name(key));
  }

  void finish() const
  {
    for (const auto& [k, v] : j_.items())
      if (std::find(seen_.begin(), seen_.end(), k) == seen_.end())
        throw ValidationError(fmt::format("config: unknown key {}", name(k.c_str())));
  }

private:
  std::string name(const char* key) const { return path_.empty() ? key : path_ + "." + key; }

  const nlohmann::json& j_;
  std::string path_;
  std::vector<std::string> seen_;
};

class DirectoryCorpus final : public CorpusSource
{
public:
  explicit DirectoryCorpus(const PipelineConfig& cfg) : solve_(cfg.stages.solve), fps_(cfg.marker_fps)
  {
    if (cfg.input.empty())
      throw ValidationError("config: input directory is required");
    if (!fs::is_directory(cfg.input))
      throw DataError(fmt::format("input directory {} does not exist", cfg.input));
    const std::string suffix = solve_ ? ".csv" : ".hmx.json";
    for (const auto& entry : fs::directory_iterator(cfg.input))
    {
      const auto name = entry.path().filename().string();
      if (entry.is_regular_file() && name.size() > suffix.size() && name.ends_with(suffix))
        files_.push_back(entry.path());
    }
    std::sort(files_.begin(), files_.end());
    if (solve_)
    {
      if (cfg.calibration.empty())
        throw ValidationError("config: calibration is required when solving markers");
      calib_ = parse_calibration(read_text_file(cfg.calibration));
    }
    suffix_len_ = suffix.size();
  }

  std::size_t size() const override { return files_.size(); }

  std::string id(std::size_t i) const override
  {
    const auto name = files_.at(i).filename().string();
    return name.substr(0, name.size() - suffix_len_);
  }

  MotionSequence load(std::size_t i) const override
  {
    if (!solve_)
      return read_hmx(files_.at(i));
    const auto markers = parse_marker_csv(read_text_file(files_.at(i)));
    auto seq = solve_sequence(markers, fps_, calib_);
    return MotionSequence(seq.fps(), std::vector<Vec3>(seq.points().begin(), seq.points().end()), id(i));
  }

private:
  bool solve_;
  double fps_;
  std::vector<fs::path> files_;
  std::size_t suffix_len_ = 0;
  std::array<HandCalibration, 2> calib_{};
};

class SyntheticCorpus final : public CorpusSource
{
public:
  SyntheticCorpus(std::size_t count, std::size_t frames, std::uint64_t seed)
      : count_(count), frames_(frames), seed_(seed)
  {
  }

  std::size_t size() const override { return count_; }
  std::string id(std::size_t i) const override { return fmt::format("synthetic_{:06d}", i); }
  MotionSequence load(std::size_t i) const override
  {
    auto seq = synthetic::active_motion(frames_, derive_seed(seed_, i));
    return MotionSequence(seq.fps(), std::vector<Vec3>(seq.points().begin(), seq.points().end()), id(i));
  }

private:
  std::size_t count_;
  std::size_t frames_;
  std::uint64_t seed_;
};

// An artifact file whose SHA-256 is computed over the bytes written.
class Artifact
{
public:
  Artifact(const fs::path& dir, std::string name) : name_(std::move(name)), out_(dir / name_, std::ios::binary)
  {
    if (!out_)
      throw DataError(fmt::format("cannot write {}", (dir / name_).string()));
    ctx_ = EVP_MD_CTX_new();
    EVP_DigestInit_ex(ctx_, EVP_sha256(), nullptr);
  }
  ~Artifact() { EVP_MD_CTX_free(ctx_); }
  Artifact(const Artifact&) = delete;
  Artifact& operator=(const Artifact&) = delete;

  void write(std::string_view bytes)
  {
    out_.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    EVP_DigestUpdate(ctx_, bytes.data(), bytes.size());
  }

  const std::string& name() const { return name_; }

  std::string finish()
  {
    out_.flush();
    if (!out_)
      throw DataError(fmt::format("failed writing {}", name_));
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_DigestFinal_ex(ctx_, md, &len);
    std::string hex;
    for (unsigned int i = 0; i < len; ++i)
      fmt::format_to(std::back_inserter(hex), "{:02x}", md[i]);
    return hex;
  }

private:
  std::string name_;
  std::ofstream out_;
  EVP_MD_CTX* ctx_ = nullptr;
};

struct ClipResult
{
  ClipWindow window;
  ClipIntensity intensity;
  bool kept = true;
  FeatureDocument features;
  CaptionSet captions;
  std::vector<std::uint8_t> contact;
  std::string hmx;
};

ojson intensity_json(const ClipIntensity& w)
{
  return {{"left", w.left}, {"right", w.right}, {"avg", w.avg}};
}

ojson stats_json(const DatasetStats& s)
{
  ojson j;
  j["contact_ratio"] = s.contact_ratio;
  j["contact_duration_s"] = s.contact_duration_s;
  j["contact_freq_per_min"] = s.contact_freq_per_min;
  j["motion_intensity_deg_s"] = s.motion_intensity_deg_s;
  j["frames"] = s.frames;
  j["contact_frames"] = s.contact_frames;
  j["contact_events"] = s.contact_events;
  j["clips"] = s.clips;
  return j;
}

template <typename Fn>
auto in_stage(std::string_view stage, const std::string& input_id, Fn&& fn) -> decltype(fn())
{
  try
  {
    return fn();
  }
  catch (const PipelineError&)
  {
    throw;
  }
  catch (const std::exception& e)
  {
    throw PipelineError(std::string(stage), input_id, e.what());
  }
}

} // namespace

PipelineConfig PipelineConfig::from_json(std::string_view text)
{
  nlohmann::json j;
  try
  {
    j = nlohmann::json::parse(text);
  }
  catch (const nlohmann::json::exception& e)
  {
    throw ValidationError(fmt::format("config: {}", e.what()));
  }
  PipelineConfig cfg;
  Reader r(j, "");
  {
    auto s = r.sub("stages");
    s.get("solve", cfg.stages.solve);
    s.get("canonicalize", cfg.stages.canonicalize);
    s.get("clip", cfg.stages.clip);
    s.get("filter", cfg.stages.filter);
    s.get("describe", cfg.stages.describe);
    s.get("events", cfg.stages.events);
    s.get("annotate", cfg.stages.annotate);
    s.get("stats", cfg.stages.stats);
    s.finish();
  }
  r.get("input", cfg.input);
  r.get("output", cfg.output);
  r.get("calibration", cfg.calibration);
  r.get("marker_fps", cfg.marker_fps);
  r.get("target_fps", cfg.target_fps);
  r.get("seed", cfg.seed);
  r.get("workers", cfg.workers);
  r.get("write_clips", cfg.write_clips);
  {
    auto s = r.sub("clip");
    s.get("length", cfg.clip.length);
    s.get("stride", cfg.clip.stride);
    s.finish();
  }
  {
    auto s = r.sub("defects");
    s.get("max_speed", cfg.defects.max_speed);
    s.get("max_bone_deviation", cfg.defects.max_bone_deviation);
    s.finish();
  }
  {
    auto s = r.sub("intensity");
    std::vector<double> weights(cfg.intensity.joint_weights.begin(), cfg.intensity.joint_weights.end());
    s.get("joint_weights", weights);
    if (weights.size() != static_cast<std::size_t>(kJointsPerHand))
      throw ValidationError(fmt::format("config: intensity.joint_weights needs {} values", kJointsPerHand));
    std::copy(weights.begin(), weights.end(), cfg.intensity.joint_weights.begin());
    s.get("tau_hand", cfg.intensity.tau_hand);
    s.get("tau_avg", cfg.intensity.tau_avg);
    s.finish();
  }
  {
    auto s = r.sub("events");
    s.get("min_dwell", cfg.events.segment.min_dwell);
    s.get("emit_holds", cfg.events.segment.emit_holds);
    s.get("hysteresis", cfg.events.hysteresis);
    s.get("axis_bin", cfg.events.axis_bin);
    s.finish();
  }
  r.get("caption_levels", cfg.caption_levels);
  r.get("contact_threshold", cfg.contact_threshold);
  r.finish();
  cfg.validate();
  return cfg;
}

std::string PipelineConfig::to_json() const
{
  ojson j;
  j["stages"] = {{"solve", stages.solve},       {"canonicalize", stages.canonicalize}, {"clip", stages.clip},
                 {"filter", stages.filter},     {"describe", stages.describe},         {"events", stages.events},
                 {"annotate", stages.annotate}, {"stats", stages.stats}};
  j["input"] = input;
  j["output"] = output;
  j["calibration"] = calibration;
  j["marker_fps"] = marker_fps;
  j["target_fps"] = target_fps;
  j["seed"] = seed;
  j["workers"] = workers;
  j["write_clips"] = write_clips;
  j["clip"] = {{"length", clip.length}, {"stride", clip.stride}};
  j["defects"] = {{"max_speed", defects.max_speed}, {"max_bone_deviation", defects.max_bone_deviation}};
  j["intensity"] = {{"joint_weights", intensity.joint_weights},
                    {"tau_hand", intensity.tau_hand},
                    {"tau_avg", intensity.tau_avg}};
  j["events"] = {{"min_dwell", events.segment.min_dwell},
                 {"emit_holds", events.segment.emit_holds},
                 {"hysteresis", events.hysteresis},
                 {"axis_bin", events.axis_bin}};
  j["caption_levels"] = caption_levels;
  j["contact_threshold"] = contact_threshold;
  return j.dump(2) + "\n";
}

void PipelineConfig::validate() const
{
  if (!(marker_fps > 0.0) || !(target_fps > 0.0))
    throw ValidationError("config: frame rates must be positive");
  clip.validate();
  defects.validate();
  intensity.validate();
  events.validate();
  if (!(contact_threshold > 0.0))
    throw ValidationError("config: contact_threshold must be positive");
  if (stages.events && !stages.describe)
    throw ValidationError("config: the events stage needs the describe stage");
  if (stages.annotate && !stages.events)
    throw ValidationError("config: the annotate stage needs the events stage");
  if (stages.annotate)
    CaptionRequest{"{\"events\":[]}", caption_levels, {}}.validate();
}

std::string sha256_hex(std::string_view bytes)
{
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr) != 1)
    throw Error("sha256 failed");
  std::string hex;
  for (unsigned int i = 0; i < len; ++i)
    fmt::format_to(std::back_inserter(hex), "{:02x}", md[i]);
  return hex;
}

std::unique_ptr<CorpusSource> directory_corpus(const PipelineConfig& cfg)
{
  return std::make_unique<DirectoryCorpus>(cfg);
}

std::unique_ptr<CorpusSource> synthetic_corpus(std::size_t count, std::size_t frames, std::uint64_t seed)
{
  return std::make_unique<SyntheticCorpus>(count, frames, seed);
}

PipelineError::PipelineError(std::string stage, std::string input_id, const std::string& what)
    : Error(fmt::format("stage {} failed on {}: {}", stage, input_id.empty() ? "<none>" : input_id, what)),
      stage_(std::move(stage)), input_id_(std::move(input_id))
{
}

PipelineResult run_pipeline(const PipelineConfig& cfg, const CorpusSource& corpus)
{
  cfg.validate();
  if (cfg.output.empty())
    throw ValidationError("config: output directory is required");
  const auto start = Clock::now();
  const fs::path out_dir(cfg.output);
  fs::create_directories(out_dir);
  if (cfg.write_clips)
    fs::create_directories(out_dir / "clips");

  const std::string config_text = cfg.to_json();
  const std::size_t workers = resolve_workers(cfg.workers);

  std::vector<std::unique_ptr<Artifact>> artifacts;
  auto open = [&](std::string name) -> Artifact& {
    artifacts.push_back(std::make_unique<Artifact>(out_dir, std::move(name)));
    return *artifacts.back();
  };
  Artifact& defects_file = open("defects.jsonl");
  Artifact& clips_file = open("clips.jsonl");
  Artifact* features_file = cfg.stages.events ? &open("features.jsonl") : nullptr;
  Artifact* captions_file = cfg.stages.annotate ? &open("captions.jsonl") : nullptr;
  std::map<std::string, std::string> clip_hashes;

  PipelineResult result;
  StatsAccumulator stats;

  auto write_manifest = [&](bool complete, const PipelineError* error) {
    ojson m;
    m["tool"] = "handkit";
    m["version"] = tool_version();
    m["config_sha256"] = sha256_hex(config_text);
    m["complete"] = complete;
    if (error)
      m["error"] = {{"stage", error->stage()}, {"input", error->input_id()}, {"message", error->what()}};
    m["sequences"] = result.sequences;
    m["frames"] = result.frames;
    m["clips"] = result.clips;
    m["kept_clips"] = result.kept_clips;
    m["events"] = result.events;
    ojson files = ojson::object();
    for (auto& a : artifacts)
      files[a->name()] = a->finish();
    for (const auto& [name, hash] : clip_hashes)
      files[name] = hash;
    m["artifacts"] = files;
    write_text_file(out_dir / "config.json", config_text);
    write_text_file(out_dir / "manifest.json", m.dump(2) + "\n");
  };

  try
  {
    for (std::size_t s = 0; s < corpus.size(); ++s)
    {
      const std::string id = corpus.id(s);
      MotionSequence seq = in_stage(cfg.stages.solve ? "solve" : "load", id, [&] { return corpus.load(s); });
      if (cfg.stages.canonicalize)
        seq = in_stage("canonicalize", id, [&] {
          auto resampled = seq.fps() == cfg.target_fps ? seq : resample(seq, cfg.target_fps);
          return canonicalize(resampled).sequence;
        });
      ++result.sequences;
      result.frames += seq.num_frames();

      std::vector<ClipResult> clips;
      in_stage("clip", id, [&] {
        DefectReport defects;
        std::vector<ClipWindow> windows;
        if (cfg.stages.clip)
        {
          defects = detect_defects(seq, cfg.defects);
          windows = extract_clips(seq.num_frames(), defects.frames, cfg.clip);
        }
        else if (seq.num_frames() >= 2)
        {
          windows.push_back({0, seq.num_frames()});
        }
        ojson d;
        d["sequence"] = id;
        d["frames"] = defects.frames;
        ojson reasons = ojson::array();
        for (auto mask : defects.reasons)
          reasons.push_back(defect_reason_names(mask));
        d["reasons"] = reasons;
        defects_file.write(d.dump() + "\n");
        for (const auto& w : windows)
          clips.push_back({w, {}, true, {}, {}, {}, {}});
      });
      result.clips += clips.size();
      auto clip_seq = [&](std::size_t k) { return seq.slice(clips[k].window.begin, clips[k].window.end); };

      // Filtering needs every clip; later stages only the kept ones.
      in_stage("filter", id, [&] {
        parallel_for(clips.size(), workers, [&](std::size_t k) {
          clips[k].intensity = clip_intensity(clip_seq(k), cfg.intensity);
          clips[k].kept = !cfg.stages.filter || passes_filter(clips[k].intensity, cfg.intensity);
        });
      });
      std::vector<std::size_t> kept;
      for (std::size_t k = 0; k < clips.size(); ++k)
        if (clips[k].kept)
          kept.push_back(k);
      result.kept_clips += kept.size();

      if (cfg.stages.describe)
      {
        const auto t0 = Clock::now();
        in_stage("describe", id, [&] {
          parallel_for(kept.size(), workers, [&](std::size_t i) {
            const std::size_t k = kept[i];
            const auto clip = clip_seq(k);
            const auto timelines = compute_all_descriptors(clip, derive_seed(cfg.seed, s, k));
            auto& doc = clips[k].features;
            doc.fps = clip.fps();
            doc.num_frames = clip.num_frames();
            if (!cfg.stages.events)
              return;
            for (const auto& tl : timelines)
            {
              auto ev = extract_events(tl, cfg.events);
              doc.events.insert(doc.events.end(), std::make_move_iterator(ev.begin()),
                                std::make_move_iterator(ev.end()));
            }
          });
        });
        result.describe_events_seconds += seconds_since(t0);
      }

      in_stage(cfg.stages.annotate ? "annotate" : "stats", id, [&] {
        parallel_for(kept.size(), workers, [&](std::size_t i) {
          const std::size_t k = kept[i];
          auto& c = clips[k];
          if (cfg.stages.annotate)
            c.captions = render_template_captions(c.features, cfg.caption_levels);
          const auto clip = clip_seq(k);
          if (cfg.stages.stats)
            c.contact = inter_contact(clip, cfg.contact_threshold, derive_seed(cfg.seed, s, k));
          if (cfg.write_clips)
            c.hmx = dump_hmx(clip);
        });
      });

      for (std::size_t k = 0; k < clips.size(); ++k)
      {
        const auto& c = clips[k];
        ojson line;
        line["sequence"] = id;
        line["clip"] = k;
        line["begin"] = c.window.begin;
        line["end"] = c.window.end;
        line["intensity"] = intensity_json(c.intensity);
        line["kept"] = c.kept;
        clips_file.write(line.dump() + "\n");
        if (!c.kept)
          continue;
        result.events += c.features.events.size();
        if (features_file)
          features_file->write(fmt::format("{{\"sequence\":{},\"clip\":{},\"features\":{}}}\n",
                                           ojson(id).dump(), k, to_feature_json(c.features)));
        if (captions_file)
          captions_file->write(fmt::format("{{\"sequence\":{},\"clip\":{},\"captions\":{}}}\n",
                                           ojson(id).dump(), k, captions_to_json(c.captions, -1)));
        if (cfg.stages.stats)
          stats.add(c.contact, seq.fps(), c.intensity);
        if (cfg.write_clips)
        {
          const auto name = fmt::format("clips/{}_{:04d}.hmx.json", id, k);
          write_text_file(out_dir / name, c.hmx);
          clip_hashes[name] = sha256_hex(c.hmx);
        }
      }
    }

    result.stats = stats.result();
    if (cfg.stages.stats)
    {
      Artifact& stats_file = open("stats.json");
      stats_file.write(stats_json(result.stats).dump(2) + "\n");
    }
  }
  catch (const PipelineError& e)
  {
    write_manifest(false, &e);
    throw;
  }
  catch (const std::exception& e)
  {
    const PipelineError wrapped("write", "", e.what());
    write_manifest(false, &wrapped);
    throw wrapped;
  }
  write_manifest(true, nullptr);
  result.total_seconds = seconds_since(start);
  return result;
}

} // namespace handkit
