#include <algorithm>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>

#include "handkit/captioner.hpp"
#include "handkit/clips.hpp"
#include "handkit/contact.hpp"
#include "handkit/descriptors.hpp"
#include "handkit/error.hpp"
#include "handkit/events.hpp"
#include "handkit/fsq.hpp"
#include "handkit/guidance.hpp"
#include "handkit/hmx_io.hpp"
#include "handkit/mocap.hpp"
#include "handkit/pipeline.hpp"
#include "handkit/representations.hpp"

namespace fs = std::filesystem;
using namespace handkit;
using ojson = nlohmann::ordered_json;

namespace {

constexpr int kExitValidation = 2;
constexpr int kExitData = 3;
constexpr int kExitNetwork = 4;

struct Common
{
  std::uint64_t seed = 0;
  std::string config;
  std::string out;
};

void add_common(CLI::App* app, Common& c)
{
  app->add_option("--seed", c.seed, "Random seed");
  app->add_option("--config", c.config, "Pipeline config JSON supplying defaults");
  app->add_option("--out", c.out, "Output path (stdout when omitted)");
}

PipelineConfig load_config(const Common& c)
{
  if (c.config.empty())
    return PipelineConfig{};
  return PipelineConfig::from_json(read_text_file(c.config));
}

// --seed on the command line wins over the config file.
std::uint64_t effective_seed(const CLI::App* app, const Common& c, const PipelineConfig& cfg)
{
  return app->count("--seed") > 0 ? c.seed : cfg.seed;
}

void emit(const std::string& out, const std::string& text)
{
  if (out.empty())
    std::cout << text;
  else
    write_text_file(out, text);
}

// One file, or every *.hmx.json in a directory sorted by name.
std::vector<fs::path> hmx_inputs(const std::string& in)
{
  if (in.empty())
    throw ValidationError("--in is required");
  if (!fs::exists(in))
    throw DataError(fmt::format("input not found: {}", in));
  if (!fs::is_directory(in))
    return {fs::path(in)};
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(in))
  {
    const auto name = e.path().filename().string();
    if (e.is_regular_file() && name.size() > 9 && name.ends_with(".hmx.json"))
      files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  return files;
}

std::string stem_of(const fs::path& p)
{
  auto name = p.filename().string();
  if (name.ends_with(".hmx.json"))
    name.resize(name.size() - 9);
  return name;
}

std::vector<int> parse_int_list(const std::string& text, const char* what)
{
  std::vector<int> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ','))
  {
    try
    {
      std::size_t used = 0;
      out.push_back(std::stoi(item, &used));
      if (used != item.size())
        throw std::invalid_argument(item);
    }
    catch (const std::logic_error&)
    {
      throw ValidationError(fmt::format("{}: '{}' is not an integer", what, item));
    }
  }
  if (out.empty())
    throw ValidationError(fmt::format("{}: empty list", what));
  return out;
}

ojson intensity_json(const ClipIntensity& w)
{
  return {{"left", w.left}, {"right", w.right}, {"avg", w.avg}};
}

ojson timelines_json(const MotionSequence& seq, const std::vector<DescriptorTimeline>& timelines)
{
  ojson doc;
  doc["fps"] = seq.fps();
  doc["num_frames"] = seq.num_frames();
  ojson list = ojson::array();
  for (const auto& t : timelines)
  {
    ojson item;
    item["descriptor"] = descriptor_kind_name(t.id.kind);
    item["hand"] = t.id.hand;
    item["target"] = t.id.target;
    if (t.is_vector())
    {
      ojson values = ojson::array();
      for (const auto& v : t.vectors)
        values.push_back({v.x(), v.y(), v.z()});
      item["values"] = values;
    }
    else
    {
      item["values"] = t.scalars;
    }
    list.push_back(item);
  }
  doc["descriptors"] = list;
  return doc;
}

guidance::MotionTensor to_tensor(const DiffusionRep& rep)
{
  guidance::MotionTensor t(rep.frames, kJointsTotal, DiffusionRep::kChannels);
  t.data = rep.data;
  return t;
}

MotionSequence tensor_positions(const guidance::MotionTensor& t, double fps)
{
  std::vector<Vec3> pts;
  pts.reserve(t.frames * kJointsTotal);
  for (std::size_t f = 0; f < t.frames; ++f)
    for (int j = 0; j < kJointsTotal; ++j)
      pts.emplace_back(t.at(f, j, 0), t.at(f, j, 1), t.at(f, j, 2));
  return MotionSequence(fps, std::move(pts));
}

int run(int argc, char** argv)
{
  CLI::App app{"handkit: bimanual hand-motion data toolkit"};
  app.set_version_flag("--version", std::string(tool_version()));
  app.require_subcommand(1);

  // solve
  Common solve_c;
  std::string markers, calibration;
  double marker_fps = kCanonicalFps;
  auto* solve = app.add_subcommand("solve", "Marker CSV to skeleton HMX");
  add_common(solve, solve_c);
  solve->add_option("--markers", markers, "Marker CSV")->required();
  solve->add_option("--calibration", calibration, "Calibration JSON")->required();
  solve->add_option("--fps", marker_fps, "Marker stream frame rate");
  solve->callback([&] {
    const auto frames = parse_marker_csv(read_text_file(markers));
    const auto calib = parse_calibration(read_text_file(calibration));
    emit(solve_c.out, dump_hmx(solve_sequence(frames, marker_fps, calib)));
  });

  // canonicalize
  Common canon_c;
  std::string canon_in;
  std::optional<double> canon_fps;
  auto* canon = app.add_subcommand("canonicalize", "Resample and move into the canonical frame");
  add_common(canon, canon_c);
  canon->add_option("--in", canon_in, "HMX file")->required();
  canon->add_option("--target-fps", canon_fps, "Output frame rate");
  canon->callback([&] {
    const auto cfg = load_config(canon_c);
    const double fps = canon_fps.value_or(cfg.target_fps);
    auto seq = read_hmx(canon_in);
    if (seq.fps() != fps)
      seq = resample(seq, fps);
    emit(canon_c.out, dump_hmx(canonicalize(seq).sequence));
  });

  // clip
  Common clip_c;
  std::string clip_in;
  std::optional<int> clip_length, clip_stride;
  auto* clip = app.add_subcommand("clip", "Cut defect-free fixed-length clips");
  add_common(clip, clip_c);
  clip->add_option("--in", clip_in, "HMX file or directory")->required();
  clip->add_option("--length", clip_length, "Clip length in frames");
  clip->add_option("--stride", clip_stride, "Window stride in frames");
  clip->callback([&] {
    if (clip_c.out.empty())
      throw ValidationError("clip: --out directory is required");
    auto cfg = load_config(clip_c);
    if (clip_length)
      cfg.clip.length = *clip_length;
    cfg.clip.stride = clip_stride.value_or(clip_length ? *clip_length : cfg.clip.stride);
    cfg.clip.validate();
    cfg.defects.validate();
    const auto inputs = hmx_inputs(clip_in);
    fs::create_directories(clip_c.out);
    std::string index;
    for (const auto& path : inputs)
    {
      const auto seq = read_hmx(path);
      const auto defects = detect_defects(seq, cfg.defects);
      const auto windows = extract_clips(seq.num_frames(), defects.frames, cfg.clip);
      for (std::size_t k = 0; k < windows.size(); ++k)
      {
        const auto name = fmt::format("{}_{:04d}.hmx.json", stem_of(path), k);
        write_hmx(fs::path(clip_c.out) / name, seq.slice(windows[k].begin, windows[k].end));
        ojson line{{"sequence", stem_of(path)}, {"clip", name}, {"begin", windows[k].begin}, {"end", windows[k].end}};
        index += line.dump() + "\n";
      }
    }
    write_text_file(fs::path(clip_c.out) / "clips.jsonl", index);
  });

  // filter
  Common filter_c;
  std::string filter_in;
  std::optional<double> tau_hand, tau_avg;
  auto* filter = app.add_subcommand("filter", "Score clip intensity and apply the both-hands rule");
  add_common(filter, filter_c);
  filter->add_option("--in", filter_in, "Clip file or directory")->required();
  filter->add_option("--tau-hand", tau_hand, "Per-hand threshold, deg/s");
  filter->add_option("--tau-avg", tau_avg, "Average threshold, deg/s");
  filter->callback([&] {
    auto cfg = load_config(filter_c);
    if (tau_hand)
      cfg.intensity.tau_hand = *tau_hand;
    if (tau_avg)
      cfg.intensity.tau_avg = *tau_avg;
    cfg.intensity.validate();
    std::string out;
    for (const auto& path : hmx_inputs(filter_in))
    {
      const auto w = clip_intensity(read_hmx(path), cfg.intensity);
      ojson line{{"clip", path.filename().string()}, {"intensity", intensity_json(w)},
                 {"kept", passes_filter(w, cfg.intensity)}};
      out += line.dump() + "\n";
    }
    emit(filter_c.out, out);
  });

  // describe
  Common describe_c;
  std::string describe_in;
  auto* describe = app.add_subcommand("describe", "Per-frame kinematic descriptors of a clip");
  add_common(describe, describe_c);
  describe->add_option("--in", describe_in, "HMX file")->required();
  describe->callback([&] {
    const auto cfg = load_config(describe_c);
    const auto seq = read_hmx(describe_in);
    const auto timelines = compute_all_descriptors(seq, effective_seed(describe, describe_c, cfg));
    emit(describe_c.out, timelines_json(seq, timelines).dump() + "\n");
  });

  // events
  Common events_c;
  std::string events_in;
  std::optional<int> min_dwell;
  std::optional<double> hysteresis;
  bool emit_holds = false;
  auto* events = app.add_subcommand("events", "Descriptor events in the feature JSON format");
  add_common(events, events_c);
  events->add_option("--in", events_in, "HMX file")->required();
  events->add_option("--min-dwell", min_dwell, "Debounce runs shorter than this many frames");
  events->add_option("--hysteresis", hysteresis, "Boundary hysteresis as a fraction of interval width");
  events->add_flag("--emit-holds", emit_holds, "Also emit constant events between transitions");
  events->callback([&] {
    auto cfg = load_config(events_c);
    if (min_dwell)
      cfg.events.segment.min_dwell = *min_dwell;
    if (hysteresis)
      cfg.events.hysteresis = *hysteresis;
    if (emit_holds)
      cfg.events.segment.emit_holds = true;
    cfg.events.validate();
    const auto seq = read_hmx(events_in);
    FeatureDocument doc{seq.fps(), seq.num_frames(), {}};
    for (const auto& t : compute_all_descriptors(seq, effective_seed(events, events_c, cfg)))
    {
      auto ev = extract_events(t, cfg.events);
      doc.events.insert(doc.events.end(), ev.begin(), ev.end());
    }
    emit(events_c.out, to_feature_json(doc, 2) + "\n");
  });

  // annotate
  Common annotate_c;
  std::string annotate_in, levels_text, style;
  bool remote = false, prompt_only = false;
  auto* annotate = app.add_subcommand("annotate", "Captions from feature JSON (templates, or a remote model)");
  add_common(annotate, annotate_c);
  annotate->add_option("--in", annotate_in, "Feature JSON file")->required();
  annotate->add_option("--levels", levels_text, "Comma-separated caption levels, e.g. 1,3,5");
  annotate->add_option("--style", style, "Extra style guidance for the remote model");
  annotate->add_flag("--remote", remote, "Call the chat-completion endpoint from HANDKIT_LLM_* variables");
  annotate->add_flag("--prompt-only", prompt_only, "Print the prompt and exit");
  annotate->callback([&] {
    const auto cfg = load_config(annotate_c);
    CaptionRequest req;
    req.feature_json = read_text_file(annotate_in);
    req.levels = levels_text.empty() ? cfg.caption_levels : parse_int_list(levels_text, "--levels");
    req.style = style;
    req.validate();
    if (prompt_only)
    {
      emit(annotate_c.out, build_prompt(req));
      return;
    }
    const auto captions = remote ? annotate_remote(req, EndpointConfig::from_environment())
                                 : render_template_captions(parse_feature_json(req.feature_json), req.levels);
    emit(annotate_c.out, captions_to_json(captions) + "\n");
  });

  // contact
  Common contact_c;
  std::string gt_path, gen_path;
  std::optional<double> contact_threshold;
  bool per_clip = false;
  auto* contact = app.add_subcommand("contact", "Contact precision, recall and F1 of generated motion");
  add_common(contact, contact_c);
  contact->add_option("--gt", gt_path, "Ground-truth HMX")->required();
  contact->add_option("--gen", gen_path, "Generated HMX")->required();
  contact->add_option("--threshold", contact_threshold, "Contact distance in meters");
  contact->add_flag("--per-clip", per_clip, "Score 'contact at any frame' per label channel");
  contact->callback([&] {
    const auto cfg = load_config(contact_c);
    const double threshold = contact_threshold.value_or(cfg.contact_threshold);
    if (!(threshold > 0.0))
      throw ValidationError("--threshold must be positive");
    const auto seed = effective_seed(contact, contact_c, cfg);
    const auto gt = contact_labels(read_hmx(gt_path), threshold, seed);
    const auto gen = contact_labels(read_hmx(gen_path), threshold, seed);
    const auto report = score(gt, gen, per_clip ? ContactMode::PerClip : ContactMode::PerFrame);
    emit(contact_c.out, contact_report_json(report));
  });

  // stats
  Common stats_c;
  std::string stats_in;
  auto* stats = app.add_subcommand("stats", "Contact and intensity statistics of a clip set");
  add_common(stats, stats_c);
  stats->add_option("--in", stats_in, "Clip file or directory")->required();
  stats->callback([&] {
    const auto cfg = load_config(stats_c);
    std::vector<MotionSequence> clips;
    for (const auto& path : hmx_inputs(stats_in))
      clips.push_back(read_hmx(path));
    StatsConfig sc;
    sc.contact_threshold = cfg.contact_threshold;
    sc.seed = effective_seed(stats, stats_c, cfg);
    sc.intensity = cfg.intensity;
    const auto s = dataset_stats(clips, sc);
    ojson doc{{"contact_ratio", s.contact_ratio},
              {"contact_duration_s", s.contact_duration_s},
              {"contact_freq_per_min", s.contact_freq_per_min},
              {"motion_intensity_deg_s", s.motion_intensity_deg_s},
              {"clips", s.clips},
              {"frames", s.frames},
              {"contact_frames", s.contact_frames},
              {"contact_events", s.contact_events}};
    emit(stats_c.out, doc.dump(2) + "\n");
  });

  // guide
  Common guide_c;
  std::string task_name, guide_gt, denoiser_name = "oracle", keyframes_text, hand_name_text = "left";
  int steps = 1000;
  auto* guide = app.add_subcommand("guide", "Masked partial-denoising sampler with a built-in denoiser");
  add_common(guide, guide_c);
  guide->add_option("--task", task_name, "inbetween|keyframe|wrist|reaction|longhorizon")->required();
  guide->add_option("--gt", guide_gt, "Target clip HMX")->required();
  guide->add_option("--denoiser", denoiser_name, "oracle|zero");
  guide->add_option("--keyframes", keyframes_text, "Comma-separated keyframe indices (keyframe task)");
  guide->add_option("--hand", hand_name_text, "Conditioning hand (reaction task)");
  guide->add_option("--steps", steps, "Diffusion steps");
  guide->callback([&] {
    const auto cfg = load_config(guide_c);
    const auto task = guidance::parse_task(task_name);
    if (!task)
      throw ValidationError(fmt::format("unknown task '{}'", task_name));
    if (denoiser_name != "oracle" && denoiser_name != "zero")
      throw ValidationError(fmt::format("unknown denoiser '{}'", denoiser_name));
    if (steps < 1)
      throw ValidationError("--steps must be at least 1");
    guidance::TaskInputs inputs;
    if (!keyframes_text.empty())
      inputs.keyframes = parse_int_list(keyframes_text, "--keyframes");
    const auto hand = parse_hand(hand_name_text);
    if (!hand)
      throw ValidationError(fmt::format("unknown hand '{}'", hand_name_text));
    inputs.conditioning_hand = *hand;
    const guidance::GuidanceConfig gcfg;
    gcfg.validate();

    const auto seq = read_hmx(guide_gt);
    auto gt = to_tensor(to_diffusion_rep(seq));
    if (*task == guidance::Task::LongHorizon)
      gt = guidance::long_horizon_target(gt, gt.frames, gcfg);
    const auto gamma = guidance::gamma_field(guidance::task_centers(*task, gt.frames, gcfg, inputs), gcfg, gt.frames);
    const auto schedule = guidance::NoiseSchedule::linear(steps);
    const std::uint64_t seed = effective_seed(guide, guide_c, cfg);
    const auto x_T = guidance::gaussian_tensor(gt.frames, gt.joints, gt.channels, seed);
    guidance::GaussianNoise noise(seed + 1);
    const guidance::Denoiser oracle = [&](const guidance::MotionTensor&, int) { return gt; };
    const guidance::Denoiser zero = [](const guidance::MotionTensor& x, int) {
      return guidance::MotionTensor(x.frames, x.joints, x.channels);
    };
    const auto out = guidance::guided_sample(denoiser_name == "oracle" ? oracle : zero, x_T, gt, gamma, schedule, noise);
    emit(guide_c.out, dump_hmx(tensor_positions(out, seq.fps())));
  });

  // fsq
  Common fsq_c;
  std::string fsq_levels = "8,5,5,5", fsq_in, fsq_decode;
  auto* fsq_cmd = app.add_subcommand("fsq", "Quantize latent vectors into FSQ tokens");
  add_common(fsq_cmd, fsq_c);
  fsq_cmd->add_option("--levels", fsq_levels, "Comma-separated levels per dimension");
  fsq_cmd->add_option("--in", fsq_in, "JSON array of latent vectors");
  fsq_cmd->add_option("--decode", fsq_decode, "Token stream to decode into codes");
  fsq_cmd->callback([&] {
    if (!fsq_decode.empty())
    {
      fsq::FsqConfig cfg;
      const auto tokens = fsq::read_token_stream(fsq_decode, &cfg);
      ojson codes = ojson::array();
      for (auto t : tokens)
        codes.push_back(fsq::code_from_index(t, cfg));
      emit(fsq_c.out, ojson{{"levels", cfg.levels}, {"codes", codes}}.dump() + "\n");
      return;
    }
    if (fsq_in.empty())
      throw ValidationError("fsq: --in or --decode is required");
    fsq::FsqConfig cfg{parse_int_list(fsq_levels, "--levels")};
    cfg.validate();
    nlohmann::json doc;
    try
    {
      doc = nlohmann::json::parse(read_text_file(fsq_in));
    }
    catch (const nlohmann::json::exception& e)
    {
      throw DataError(fmt::format("fsq input: {}", e.what()));
    }
    if (!doc.is_array())
      throw DataError("fsq input must be an array of vectors");
    std::vector<std::uint32_t> tokens;
    for (const auto& row : doc)
    {
      if (!row.is_array() || row.size() != cfg.dim())
        throw DataError(fmt::format("fsq input rows must have {} numbers", cfg.dim()));
      std::vector<double> y;
      for (const auto& v : row)
      {
        if (!v.is_number())
          throw DataError("fsq input rows must be numeric");
        y.push_back(v.get<double>());
      }
      tokens.push_back(fsq::code_index(fsq::quantize(y, cfg), cfg));
    }
    const ojson summary{{"count", tokens.size()}, {"codebook_size", cfg.codebook_size()},
                        {"utilization", fsq::utilization(tokens, cfg)}};
    if (fsq_c.out.empty())
    {
      ojson with_tokens = summary;
      with_tokens["tokens"] = tokens;
      std::cout << with_tokens.dump() << "\n";
    }
    else
    {
      fsq::write_token_stream(fsq_c.out, tokens, cfg);
      std::cout << summary.dump() << "\n";
    }
  });

  // pipeline
  Common pipe_c;
  std::string pipe_in;
  std::size_t synthetic_count = 0, synthetic_frames = 1800;
  std::optional<std::size_t> pipe_workers;
  auto* pipe = app.add_subcommand("pipeline", "Run the offline end-to-end pipeline");
  add_common(pipe, pipe_c);
  pipe->add_option("--in", pipe_in, "Input directory (overrides the config)");
  pipe->add_option("--synthetic", synthetic_count, "Use this many synthetic sequences instead of --in");
  pipe->add_option("--frames", synthetic_frames, "Frames per synthetic sequence");
  pipe->add_option("--workers", pipe_workers, "Worker threads (0 = all cores)");
  pipe->callback([&] {
    auto cfg = load_config(pipe_c);
    if (pipe->count("--seed") > 0)
      cfg.seed = pipe_c.seed;
    if (!pipe_c.out.empty())
      cfg.output = pipe_c.out;
    if (!pipe_in.empty())
      cfg.input = pipe_in;
    if (pipe_workers)
      cfg.workers = *pipe_workers;
    cfg.validate();
    std::unique_ptr<CorpusSource> corpus;
    if (synthetic_count > 0)
      corpus = synthetic_corpus(synthetic_count, synthetic_frames, cfg.seed);
    else if (!cfg.input.empty())
      corpus = directory_corpus(cfg);
    else
      throw ValidationError("pipeline: an input directory or --synthetic count is required");
    const auto r = run_pipeline(cfg, *corpus);
    const ojson summary{{"sequences", r.sequences},       {"frames", r.frames},
                        {"clips", r.clips},               {"kept_clips", r.kept_clips},
                        {"events", r.events},             {"describe_events_seconds", r.describe_events_seconds},
                        {"total_seconds", r.total_seconds}};
    std::cout << summary.dump(2) << "\n";
  });

  try
  {
    app.parse(argc, argv);
  }
  catch (const CLI::ParseError& e)
  {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitValidation;
  }
  return 0;
}

int exit_code_for(const RemoteError& e)
{
  return e.code() == RemoteErrorCode::Config ? kExitValidation : kExitNetwork;
}

} // namespace

int main(int argc, char** argv)
{
  try
  {
    return run(argc, argv);
  }
  catch (const ValidationError& e)
  {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  }
  catch (const RemoteError& e)
  {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e);
  }
  catch (const PipelineError& e)
  {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  }
  catch (const Error& e)
  {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  }
  catch (const std::exception& e)
  {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  }
}
