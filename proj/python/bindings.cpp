#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "handkit/captioner.hpp"
#include "handkit/clips.hpp"
#include "handkit/contact.hpp"
#include "handkit/descriptors.hpp"
#include "handkit/events.hpp"
#include "handkit/fsq.hpp"
#include "handkit/guidance.hpp"
#include "handkit/hmx_io.hpp"
#include "handkit/pipeline.hpp"
#include "handkit/representations.hpp"
#include "handkit/synthetic.hpp"

namespace py = pybind11;
using namespace handkit;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

// (frames, 42, 3) array -> sequence.
MotionSequence to_sequence(const Array& a, double fps)
{
  if (a.ndim() != 3 || a.shape(1) != kJointsTotal || a.shape(2) != 3)
    throw ValidationError("expected an array of shape (frames, 42, 3)");
  const auto frames = static_cast<std::size_t>(a.shape(0));
  std::vector<Vec3> pts(frames * kJointsTotal);
  const double* d = a.data();
  for (std::size_t i = 0; i < pts.size(); ++i)
    pts[i] = Vec3(d[3 * i], d[3 * i + 1], d[3 * i + 2]);
  return MotionSequence(fps, std::move(pts));
}

Array to_array(const MotionSequence& seq)
{
  Array out({static_cast<py::ssize_t>(seq.num_frames()), static_cast<py::ssize_t>(kJointsTotal), py::ssize_t{3}});
  double* d = out.mutable_data();
  const auto pts = seq.points();
  for (std::size_t i = 0; i < pts.size(); ++i)
    for (int k = 0; k < 3; ++k)
      d[3 * i + k] = pts[i][k];
  return out;
}

py::dict intensity_dict(const ClipIntensity& w)
{
  py::dict d;
  d["left"] = w.left;
  d["right"] = w.right;
  d["avg"] = w.avg;
  return d;
}

} // namespace

PYBIND11_MODULE(_handkit, m)
{
  m.doc() = "Bimanual hand-motion data toolkit";
  m.attr("__version__") = std::string(tool_version());
  m.attr("CONTACT_THRESHOLD") = kContactThreshold;

  static py::exception<Error> base(m, "HandkitError", PyExc_RuntimeError);
  static py::exception<ValidationError> validation(m, "ValidationError", base.ptr());
  static py::exception<DataError> data(m, "DataError", base.ptr());
  static py::exception<RemoteError> remote(m, "RemoteError", base.ptr());
  static py::exception<PipelineError> pipeline(m, "PipelineError", base.ptr());
  py::register_exception_translator([](std::exception_ptr p) {
    try
    {
      if (p)
        std::rethrow_exception(p);
    }
    catch (const ValidationError& e)
    {
      PyErr_SetString(validation.ptr(), e.what());
    }
    catch (const DataError& e)
    {
      PyErr_SetString(data.ptr(), e.what());
    }
    catch (const RemoteError& e)
    {
      PyErr_SetString(remote.ptr(), e.what());
    }
    catch (const PipelineError& e)
    {
      PyErr_SetString(pipeline.ptr(), e.what());
    }
    catch (const Error& e)
    {
      PyErr_SetString(base.ptr(), e.what());
    }
  });

  m.def(
      "parse_hmx",
      [](const std::string& text) {
        const auto seq = parse_hmx(text);
        return py::make_tuple(seq.fps(), to_array(seq));
      },
      "HMX JSON text -> (fps, positions)");
  m.def(
      "dump_hmx", [](const Array& a, double fps) { return dump_hmx(to_sequence(a, fps)); }, py::arg("positions"),
      py::arg("fps") = kCanonicalFps);
  m.def(
      "synthetic_motion",
      [](std::size_t frames, std::uint64_t seed) { return to_array(synthetic::active_motion(frames, seed)); },
      py::arg("frames"), py::arg("seed") = 0);
  m.def(
      "resample", [](const Array& a, double fps, double target) { return to_array(resample(to_sequence(a, fps), target)); },
      py::arg("positions"), py::arg("fps"), py::arg("target_fps"));
  m.def(
      "canonicalize", [](const Array& a, double fps) { return to_array(canonicalize(to_sequence(a, fps)).sequence); },
      py::arg("positions"), py::arg("fps") = kCanonicalFps);

  m.def(
      "extract_clips",
      [](std::size_t frames, std::vector<std::size_t> defects, int length, int stride) {
        std::sort(defects.begin(), defects.end());
        std::vector<std::pair<std::size_t, std::size_t>> out;
        for (const auto& w : extract_clips(frames, defects, ClipSpec{length, stride}))
          out.emplace_back(w.begin, w.end);
        return out;
      },
      py::arg("num_frames"), py::arg("defects"), py::arg("length") = 60, py::arg("stride") = 60);
  m.def(
      "clip_intensity", [](const Array& a, double fps) { return intensity_dict(clip_intensity(to_sequence(a, fps))); },
      py::arg("positions"), py::arg("fps") = kCanonicalFps);
  m.def(
      "passes_filter",
      [](double left, double right, double avg) { return passes_filter({left, right, avg}, IntensityConfig{}); },
      py::arg("left"), py::arg("right"), py::arg("avg"));

  m.def(
      "descriptors",
      [](const Array& a, double fps, std::uint64_t seed) {
        py::list out;
        for (const auto& t : compute_all_descriptors(to_sequence(a, fps), seed))
        {
          py::dict d;
          d["key"] = t.id.key();
          d["descriptor"] = descriptor_kind_name(t.id.kind);
          d["hand"] = t.id.hand;
          d["target"] = t.id.target;
          if (t.is_vector())
          {
            Array v({static_cast<py::ssize_t>(t.vectors.size()), py::ssize_t{3}});
            for (std::size_t i = 0; i < t.vectors.size(); ++i)
              for (int k = 0; k < 3; ++k)
                v.mutable_data()[3 * i + k] = t.vectors[i][k];
            d["values"] = v;
          }
          else
          {
            d["values"] = Array(static_cast<py::ssize_t>(t.scalars.size()), t.scalars.data());
          }
          out.append(d);
        }
        return out;
      },
      py::arg("positions"), py::arg("fps") = kCanonicalFps, py::arg("seed") = 0);
  m.def(
      "state_label",
      [](const std::string& descriptor, double value) {
        const auto kind = parse_descriptor_kind(descriptor);
        if (!kind || !StateTable::has_table(*kind))
          throw ValidationError("no state table for " + descriptor);
        const auto& table = StateTable::for_kind(*kind);
        return table.label(table.state_of(value));
      },
      py::arg("descriptor"), py::arg("value"));
  m.def(
      "feature_json",
      [](const Array& a, double fps, std::uint64_t seed, int min_dwell, double hysteresis) {
        const auto seq = to_sequence(a, fps);
        EventConfig cfg;
        cfg.segment.min_dwell = min_dwell;
        cfg.hysteresis = hysteresis;
        cfg.validate();
        FeatureDocument doc{seq.fps(), seq.num_frames(), {}};
        for (const auto& t : compute_all_descriptors(seq, seed))
        {
          auto ev = extract_events(t, cfg);
          doc.events.insert(doc.events.end(), ev.begin(), ev.end());
        }
        return to_feature_json(doc);
      },
      py::arg("positions"), py::arg("fps") = kCanonicalFps, py::arg("seed") = 0, py::arg("min_dwell") = 1,
      py::arg("hysteresis") = 0.0);
  m.def(
      "captions",
      [](const std::string& feature_json, const std::vector<int>& levels) {
        return captions_to_json(render_template_captions(parse_feature_json(feature_json), levels));
      },
      py::arg("feature_json"), py::arg("levels") = std::vector<int>{1, 3, 5});
  m.def(
      "build_prompt",
      [](const std::string& feature_json, const std::vector<int>& levels, const std::string& style) {
        const CaptionRequest req{feature_json, levels, style};
        req.validate();
        return build_prompt(req);
      },
      py::arg("feature_json"), py::arg("levels") = std::vector<int>{1, 3, 5}, py::arg("style") = "");

  m.def(
      "contact_report",
      [](const Array& gt, const Array& gen, double fps, double threshold, bool per_clip, std::uint64_t seed) {
        const auto a = contact_labels(to_sequence(gt, fps), threshold, seed);
        const auto b = contact_labels(to_sequence(gen, fps), threshold, seed);
        return contact_report_json(score(a, b, per_clip ? ContactMode::PerClip : ContactMode::PerFrame));
      },
      py::arg("gt"), py::arg("gen"), py::arg("fps") = kCanonicalFps, py::arg("threshold") = kContactThreshold,
      py::arg("per_clip") = false, py::arg("seed") = 0);

  m.def(
      "diffusion_rep",
      [](const Array& a, double fps) {
        const auto rep = to_diffusion_rep(to_sequence(a, fps));
        Array out({static_cast<py::ssize_t>(rep.frames), static_cast<py::ssize_t>(kJointsTotal),
                   static_cast<py::ssize_t>(DiffusionRep::kChannels)});
        std::copy(rep.data.begin(), rep.data.end(), out.mutable_data());
        return out;
      },
      py::arg("positions"), py::arg("fps") = kCanonicalFps);

  m.def(
      "fsq_quantize", [](const std::vector<double>& y, const std::vector<int>& levels) {
        const fsq::FsqConfig cfg{levels};
        cfg.validate();
        const auto q = fsq::quantize(y, cfg);
        return py::make_tuple(q, fsq::code_index(q, cfg));
      },
      py::arg("y"), py::arg("levels"));
  m.def(
      "fsq_code", [](std::uint32_t index, const std::vector<int>& levels) {
        const fsq::FsqConfig cfg{levels};
        cfg.validate();
        return fsq::code_from_index(index, cfg);
      },
      py::arg("index"), py::arg("levels"));

  m.def(
      "gamma_field",
      [](const std::string& task_name, std::size_t length, const std::vector<int>& keyframes,
         const std::string& hand) {
        const auto task = guidance::parse_task(task_name);
        if (!task)
          throw ValidationError("unknown task " + task_name);
        const auto h = parse_hand(hand);
        if (!h)
          throw ValidationError("unknown hand " + hand);
        const guidance::GuidanceConfig cfg;
        guidance::TaskInputs inputs{keyframes, *h};
        const auto g = guidance::gamma_field(guidance::task_centers(*task, length, cfg, inputs), cfg, length);
        Array out({static_cast<py::ssize_t>(g.frames), static_cast<py::ssize_t>(g.joints)});
        std::copy(g.values.begin(), g.values.end(), out.mutable_data());
        return out;
      },
      py::arg("task"), py::arg("length"), py::arg("keyframes") = std::vector<int>{}, py::arg("hand") = "left");

  m.def(
      "run_pipeline",
      [](const std::string& config_json, std::size_t synthetic_sequences, std::size_t synthetic_frames) {
        const auto cfg = PipelineConfig::from_json(config_json);
        const auto corpus = synthetic_sequences > 0 ? synthetic_corpus(synthetic_sequences, synthetic_frames, cfg.seed)
                                                    : directory_corpus(cfg);
        PipelineResult r;
        {
          py::gil_scoped_release release;
          r = run_pipeline(cfg, *corpus);
        }
        py::dict d;
        d["sequences"] = r.sequences;
        d["frames"] = r.frames;
        d["clips"] = r.clips;
        d["kept_clips"] = r.kept_clips;
        d["events"] = r.events;
        d["describe_events_seconds"] = r.describe_events_seconds;
        d["total_seconds"] = r.total_seconds;
        return d;
      },
      py::arg("config_json"), py::arg("synthetic_sequences") = 0, py::arg("synthetic_frames") = 1800);
}
