#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <string_view>
#include <vector>

#include "handkit/descriptors.hpp"

namespace handkit {

/// Half-open interval [lower, upper) mapped to a state label.
struct StateInterval
{
  double lower = -std::numeric_limits<double>::infinity();
  double upper = std::numeric_limits<double>::infinity();
  std::string label;
};

/// Ordered, gap-free partition of a descriptor's range. A value equal to the
/// final finite upper bound (e.g. 180 degrees) belongs to the last interval.
class StateTable
{
public:
  StateTable() = default;
  explicit StateTable(std::vector<StateInterval> rows);

  /// Interval tables for the four scalar descriptor kinds.
  static const StateTable& for_kind(DescriptorKind kind);
  static bool has_table(DescriptorKind kind);

  const std::vector<StateInterval>& rows() const { return rows_; }
  /// Index of the row containing `value`; throws DataError outside the range.
  int state_of(double value) const;
  const std::string& label(int state) const { return rows_.at(state).label; }

private:
  std::vector<StateInterval> rows_;
};

/// Per-frame state labels. With hysteresis h > 0 a frame only leaves the
/// previous frame's state once the value is inside the new interval by at
/// least h times the width of the interval being left (or of its finite
/// neighbor when that width is infinite).
std::vector<std::string> label_states(const DescriptorTimeline& timeline, const StateTable& table,
                                      double hysteresis = 0.0);
std::vector<std::string> label_states(const DescriptorTimeline& timeline, double hysteresis = 0.0);

enum class EventKind : std::uint8_t
{
  Transition,
  Constant,
};

struct Event
{
  std::string descriptor; ///< descriptor kind name
  std::string hand;       ///< "left", "right" or "both"
  std::string target;
  EventKind kind = EventKind::Constant;
  std::size_t start_frame = 0;
  std::size_t end_frame = 0;
  std::string from_state;
  std::string to_state;

  friend bool operator==(const Event&, const Event&) = default;
};

struct SegmentOptions
{
  /// Runs shorter than this (other than the first) are relabeled to the
  /// preceding state before extraction.
  int min_dwell = 3;
  /// Also emit constant events for the frames of each run not covered by a
  /// transition, so events tile [0, F-1].
  bool emit_holds = false;
};

/// One transition per label change, spanning [last frame of the old run,
/// first frame of the new run]; a single constant event over [0, F-1] when
/// the labels never change.
std::vector<Event> segment_events(const std::vector<std::string>& labels, const SegmentOptions& opts,
                                  const DescriptorId& id);

/// Run-length debouncing used by segment_events.
std::vector<std::string> debounce_labels(const std::vector<std::string>& labels, int min_dwell);

/// Inverse of segment_events for one descriptor: per-frame labels recovered
/// from the event list and the frame count.
std::vector<std::string> reconstruct_labels(const std::vector<Event>& events, std::size_t num_frames);

/// Per axis, monotone runs whose displacement reaches `bin` meters become
/// transition events ("moves right", "moves up", ...). A timeline without any
/// such run yields one constant "stationary" event.
std::vector<Event> axis_motion_events(const DescriptorTimeline& timeline, double bin = 0.02);

struct EventConfig
{
  SegmentOptions segment{};
  double hysteresis = 0.0;
  double axis_bin = 0.02;

  void validate() const;
};

/// Events for one timeline, dispatching on the descriptor kind.
std::vector<Event> extract_events(const DescriptorTimeline& timeline, const EventConfig& cfg = {});

struct FeatureDocument
{
  double fps = kCanonicalFps;
  std::size_t num_frames = 0;
  std::vector<Event> events;

  friend bool operator==(const FeatureDocument&, const FeatureDocument&) = default;
};

/// {"fps","num_frames","events":[{"descriptor","hand","target","kind",
/// "start_frame","end_frame","from_state","to_state"}]} in that key order.
std::string to_feature_json(const FeatureDocument& doc, int indent = -1);
FeatureDocument parse_feature_json(std::string_view text);

std::string_view event_kind_name(EventKind kind);

} // namespace handkit
