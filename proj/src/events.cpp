#include "handkit/events.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include <fmt/format.h>
#include <json.hpp>

#include "handkit/error.hpp"

namespace handkit {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double row_width(const std::vector<StateInterval>& rows, int i)
{
  const double w = rows[i].upper - rows[i].lower;
  if (std::isfinite(w))
    return w;
  if (i > 0 && std::isfinite(rows[i - 1].upper - rows[i - 1].lower))
    return rows[i - 1].upper - rows[i - 1].lower;
  if (i + 1 < static_cast<int>(rows.size()) && std::isfinite(rows[i + 1].upper - rows[i + 1].lower))
    return rows[i + 1].upper - rows[i + 1].lower;
  return 0.0;
}

struct Run
{
  std::string label;
  std::size_t begin;
  std::size_t length;
};

std::vector<Run> runs_of(const std::vector<std::string>& labels)
{
  std::vector<Run> runs;
  for (std::size_t f = 0; f < labels.size(); ++f)
  {
    if (!runs.empty() && runs.back().label == labels[f])
      ++runs.back().length;
    else
      runs.push_back({labels[f], f, 1});
  }
  return runs;
}

Event make_event(const DescriptorId& id, EventKind kind, std::size_t start, std::size_t end, std::string from,
                 std::string to)
{
  return {descriptor_kind_name(id.kind), id.hand, id.target, kind, start, end, std::move(from), std::move(to)};
}

} // namespace

StateTable::StateTable(std::vector<StateInterval> rows) : rows_(std::move(rows))
{
  if (rows_.empty())
    throw ValidationError("state table needs at least one row");
  for (std::size_t i = 0; i < rows_.size(); ++i)
  {
    if (!(rows_[i].lower < rows_[i].upper))
      throw ValidationError(fmt::format("state row '{}' is empty", rows_[i].label));
    if (i > 0 && rows_[i].lower != rows_[i - 1].upper)
      throw ValidationError(fmt::format("state rows '{}' and '{}' are not contiguous", rows_[i - 1].label,
                                        rows_[i].label));
  }
}

const StateTable& StateTable::for_kind(DescriptorKind kind)
{
  static const StateTable flexing({{-180.0, -20.0, "hyper extend"},
                                   {-20.0, 30.0, "fully extend"},
                                   {30.0, 60.0, "partially bent"},
                                   {60.0, 180.0, "fully bent"}});
  static const StateTable spacing({{0.0, 20.0, "closed"}, {20.0, 180.0, "open"}});
  static const StateTable finger_finger({{0.0, 0.02, "contact"}, {0.02, kInf, "no contact"}});
  static const StateTable finger_palm({{0.0, 0.025, "contact"}, {0.025, 0.035, "near"}, {0.035, kInf, "far"}});
  switch (kind)
  {
    case DescriptorKind::FingerFlexing: return flexing;
    case DescriptorKind::FingerSpacing: return spacing;
    case DescriptorKind::FingerFingerDistance: return finger_finger;
    case DescriptorKind::FingerPalmDistance: return finger_palm;
    default: break;
  }
  throw ValidationError(fmt::format("no state table for {}", descriptor_kind_name(kind)));
}

bool StateTable::has_table(DescriptorKind kind)
{
  return kind == DescriptorKind::FingerFlexing || kind == DescriptorKind::FingerSpacing ||
         kind == DescriptorKind::FingerFingerDistance || kind == DescriptorKind::FingerPalmDistance;
}

int StateTable::state_of(double value) const
{
  for (std::size_t i = 0; i < rows_.size(); ++i)
    if (value >= rows_[i].lower && value < rows_[i].upper)
      return static_cast<int>(i);
  if (value == rows_.back().upper)
    return static_cast<int>(rows_.size()) - 1;
  throw DataError(fmt::format("value {} outside the state table range", value));
}

std::vector<std::string> label_states(const DescriptorTimeline& timeline, const StateTable& table, double hysteresis)
{
  if (timeline.is_vector())
    throw ValidationError(fmt::format("{} is vector-valued and has no state table", timeline.id.key()));
  if (!(hysteresis >= 0.0))
    throw ValidationError("hysteresis must be non-negative");
  const auto& rows = table.rows();
  std::vector<std::string> out;
  out.reserve(timeline.scalars.size());
  int prev = -1;
  for (double v : timeline.scalars)
  {
    int s = table.state_of(v);
    if (prev >= 0 && s != prev && hysteresis > 0.0)
    {
      const double margin = hysteresis * row_width(rows, prev);
      const bool entered = s > prev ? v >= rows[s].lower + margin : v < rows[s].upper - margin;
      if (!entered)
        s = prev;
    }
    out.push_back(table.label(s));
    prev = s;
  }
  return out;
}

std::vector<std::string> label_states(const DescriptorTimeline& timeline, double hysteresis)
{
  if (!StateTable::has_table(timeline.id.kind))
    throw ValidationError(fmt::format("no state table for {}", descriptor_kind_name(timeline.id.kind)));
  return label_states(timeline, StateTable::for_kind(timeline.id.kind), hysteresis);
}

std::vector<std::string> debounce_labels(const std::vector<std::string>& labels, int min_dwell)
{
  if (min_dwell < 1)
    throw ValidationError("min_dwell must be at least 1");
  std::vector<Run> merged;
  for (auto& run : runs_of(labels))
  {
    if (!merged.empty() && (run.length < static_cast<std::size_t>(min_dwell) || merged.back().label == run.label))
      merged.back().length += run.length;
    else
      merged.push_back(std::move(run));
  }
  std::vector<std::string> out;
  out.reserve(labels.size());
  for (const auto& run : merged)
    out.insert(out.end(), run.length, run.label);
  return out;
}

std::vector<Event> segment_events(const std::vector<std::string>& labels, const SegmentOptions& opts,
                                  const DescriptorId& id)
{
  if (labels.empty())
    throw ValidationError("cannot segment an empty label sequence");
  const auto runs = runs_of(debounce_labels(labels, opts.min_dwell));
  std::vector<Event> events;
  if (runs.size() == 1)
  {
    events.push_back(make_event(id, EventKind::Constant, 0, labels.size() - 1, runs[0].label, runs[0].label));
    return events;
  }
  for (std::size_t k = 0; k < runs.size(); ++k)
  {
    const std::size_t first = runs[k].begin;
    const std::size_t last = first + runs[k].length - 1;
    if (opts.emit_holds)
    {
      const std::size_t hold_begin = k > 0 ? first + 1 : first;
      const std::size_t hold_end = k + 1 < runs.size() ? last : last + 1; // exclusive
      if (hold_begin < hold_end)
        events.push_back(
            make_event(id, EventKind::Constant, hold_begin, hold_end - 1, runs[k].label, runs[k].label));
    }
    if (k + 1 < runs.size())
      events.push_back(make_event(id, EventKind::Transition, last, last + 1, runs[k].label, runs[k + 1].label));
  }
  return events;
}

std::vector<std::string> reconstruct_labels(const std::vector<Event>& events, std::size_t num_frames)
{
  std::vector<std::string> labels(num_frames);
  std::vector<bool> set(num_frames, false);
  auto put = [&](std::size_t f, const std::string& label) {
    if (f >= num_frames)
      throw DataError(fmt::format("event frame {} beyond {} frames", f, num_frames));
    labels[f] = label;
    set[f] = true;
  };
  for (const auto& e : events)
  {
    if (e.kind == EventKind::Constant)
    {
      for (std::size_t f = e.start_frame; f <= e.end_frame; ++f)
        put(f, e.from_state);
    }
    else
    {
      put(e.start_frame, e.from_state);
      put(e.end_frame, e.to_state);
    }
  }
  const auto first = std::find(set.begin(), set.end(), true);
  if (first == set.end())
    return labels;
  const std::string lead = labels[first - set.begin()];
  std::string current = lead;
  for (std::size_t f = 0; f < num_frames; ++f)
  {
    if (set[f])
      current = labels[f];
    else
      labels[f] = current;
  }
  return labels;
}

std::vector<Event> axis_motion_events(const DescriptorTimeline& timeline, double bin)
{
  if (!timeline.is_vector())
    throw ValidationError(fmt::format("{} is not a vector timeline", timeline.id.key()));
  if (!(bin > 0.0))
    throw ValidationError("axis bin must be positive");
  static constexpr std::array<std::array<const char*, 2>, 3> kNames{{
      {"moves right", "moves left"},
      {"moves forward", "moves backward"},
      {"moves up", "moves down"},
  }};
  const auto& v = timeline.vectors;
  const std::size_t n = v.size();
  std::vector<Event> events;
  for (int axis = 0; axis < 3; ++axis)
  {
    std::string previous = "stationary";
    auto emit = [&](std::size_t s, std::size_t e, int dir) {
      std::string to = kNames[axis][dir > 0 ? 0 : 1];
      events.push_back(make_event(timeline.id, EventKind::Transition, s, e, previous, to));
      previous = std::move(to);
    };
    int dir = 0;
    std::size_t start = 0, extreme = 0, lo = 0, hi = 0;
    for (std::size_t f = 1; f < n; ++f)
    {
      const double x = v[f][axis];
      if (dir == 0)
      {
        // Latest frame of an extreme plateau, so runs start when motion does.
        if (x <= v[lo][axis])
          lo = f;
        if (x >= v[hi][axis])
          hi = f;
        if (x - v[lo][axis] >= bin)
        {
          dir = 1;
          start = lo;
          extreme = f;
        }
        else if (v[hi][axis] - x >= bin)
        {
          dir = -1;
          start = hi;
          extreme = f;
        }
      }
      else if (dir * (x - v[extreme][axis]) > 0.0)
      {
        extreme = f;
      }
      else if (dir * (v[extreme][axis] - x) >= bin)
      {
        emit(start, extreme, dir);
        dir = -dir;
        start = extreme;
        extreme = f;
      }
    }
    if (dir != 0)
      emit(start, extreme, dir);
  }
  if (events.empty() && n > 0)
    events.push_back(make_event(timeline.id, EventKind::Constant, 0, n - 1, "stationary", "stationary"));
  std::stable_sort(events.begin(), events.end(), [](const Event& a, const Event& b) {
    return std::tie(a.start_frame, a.end_frame) < std::tie(b.start_frame, b.end_frame);
  });
  return events;
}

void EventConfig::validate() const
{
  if (segment.min_dwell < 1)
    throw ValidationError("events.min_dwell must be at least 1");
  if (!(hysteresis >= 0.0 && hysteresis < 0.5))
    throw ValidationError("events.hysteresis must be in [0, 0.5)");
  if (!(axis_bin > 0.0))
    throw ValidationError("events.axis_bin must be positive");
}

std::vector<Event> extract_events(const DescriptorTimeline& timeline, const EventConfig& cfg)
{
  if (timeline.size() == 0)
    return {};
  if (StateTable::has_table(timeline.id.kind))
    return segment_events(label_states(timeline, cfg.hysteresis), cfg.segment, timeline.id);
  return axis_motion_events(timeline, cfg.axis_bin);
}

std::string_view event_kind_name(EventKind kind)
{
  return kind == EventKind::Transition ? "transition" : "constant";
}

std::string to_feature_json(const FeatureDocument& doc, int indent)
{
  nlohmann::ordered_json j;
  if (doc.fps == std::floor(doc.fps) && std::abs(doc.fps) < 1e9)
    j["fps"] = static_cast<long long>(doc.fps);
  else
    j["fps"] = doc.fps;
  j["num_frames"] = doc.num_frames;
  auto& arr = j["events"] = nlohmann::ordered_json::array();
  for (const auto& e : doc.events)
  {
    nlohmann::ordered_json o;
    o["descriptor"] = e.descriptor;
    o["hand"] = e.hand;
    o["target"] = e.target;
    o["kind"] = event_kind_name(e.kind);
    o["start_frame"] = e.start_frame;
    o["end_frame"] = e.end_frame;
    o["from_state"] = e.from_state;
    o["to_state"] = e.to_state;
    arr.push_back(std::move(o));
  }
  return j.dump(indent);
}

FeatureDocument parse_feature_json(std::string_view text)
{
  nlohmann::json j;
  try
  {
    j = nlohmann::json::parse(text);
  }
  catch (const nlohmann::json::exception& e)
  {
    throw DataError(fmt::format("feature json: {}", e.what()));
  }
  if (!j.is_object() || !j.contains("events") || !j["events"].is_array())
    throw DataError("feature json: missing events array");
  FeatureDocument doc;
  try
  {
    if (j.contains("fps"))
      doc.fps = j["fps"].get<double>();
    bool have_frames = j.contains("num_frames");
    if (have_frames)
      doc.num_frames = j["num_frames"].get<std::size_t>();
    for (const auto& o : j["events"])
    {
      Event e;
      e.descriptor = o.at("descriptor").get<std::string>();
      e.hand = o.at("hand").get<std::string>();
      e.target = o.at("target").get<std::string>();
      const auto kind = o.at("kind").get<std::string>();
      if (kind == "transition")
        e.kind = EventKind::Transition;
      else if (kind == "constant")
        e.kind = EventKind::Constant;
      else
        throw DataError(fmt::format("feature json: unknown event kind '{}'", kind));
      e.start_frame = o.at("start_frame").get<std::size_t>();
      e.end_frame = o.at("end_frame").get<std::size_t>();
      e.from_state = o.at("from_state").get<std::string>();
      e.to_state = o.at("to_state").get<std::string>();
      if (e.start_frame > e.end_frame)
        throw DataError("feature json: event starts after it ends");
      if (have_frames && e.end_frame >= doc.num_frames)
        throw DataError("feature json: event beyond num_frames");
      if ((e.kind == EventKind::Transition) == (e.from_state == e.to_state))
        throw DataError("feature json: event states inconsistent with its kind");
      if (!have_frames)
        doc.num_frames = std::max(doc.num_frames, e.end_frame + 1);
      doc.events.push_back(std::move(e));
    }
  }
  catch (const nlohmann::json::exception& e)
  {
    throw DataError(fmt::format("feature json: {}", e.what()));
  }
  if (!(doc.fps > 0.0))
    throw DataError("feature json: fps must be positive");
  return doc;
}

} // namespace handkit
