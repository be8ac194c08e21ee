#pragma once

#include <array>
#include <chrono>
#include <cstddef>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "handkit/error.hpp"
#include "handkit/events.hpp"

namespace handkit {

inline constexpr int kNumCaptionLevels = 5;

struct CaptionRequest
{
  std::string feature_json;
  std::vector<int> levels{1, 2, 3, 4, 5};
  /// Free-form style guidance appended to the instructions (may be empty).
  std::string style;

  /// Levels non-empty, each in [1, 5], no duplicates; feature JSON parses.
  void validate() const;
};

/// Left-hand, right-hand and inter-hand text for one level.
struct CaptionTriple
{
  std::string left;
  std::string right;
  std::string inter;

  friend bool operator==(const CaptionTriple&, const CaptionTriple&) = default;
};

/// Level (1..5) to caption triple.
using CaptionSet = std::map<int, CaptionTriple>;

/// Deterministic prompt: three-part output instruction, critical-event and
/// temporal-order instructions, the requested level definitions, the reply
/// format contract and the feature JSON verbatim.
std::string build_prompt(const CaptionRequest& req);

/// How many of `available` events level `level` verbalizes: 3, 6, 50%, 80%,
/// 100% (fractions rounded up).
std::size_t events_for_level(int level, std::size_t available);

/// Offline fallback renderer with one fixed sentence template per event.
CaptionSet render_template_captions(const FeatureDocument& features, const std::vector<int>& levels);

/// Parses a model reply containing a JSON object {"level_N": {"left",
/// "right","inter"}} (optionally fenced). Throws RemoteError(Parse).
CaptionSet parse_caption_reply(std::string_view reply, const std::vector<int>& levels);

enum class RemoteErrorCode
{
  Network,
  Auth,
  Http,
  Parse,
  Config,
};

class RemoteError : public Error
{
public:
  RemoteError(RemoteErrorCode code, const std::string& what) : Error(what), code_(code) {}
  RemoteErrorCode code() const { return code_; }

private:
  RemoteErrorCode code_;
};

struct EndpointConfig
{
  std::string base_url; ///< e.g. https://api.example.com/v1
  std::string api_key;
  std::string model;
  int max_retries = 2;
  std::chrono::seconds timeout{60};
  std::size_t max_in_flight = 4;

  /// HANDKIT_LLM_BASE_URL, HANDKIT_LLM_API_KEY, HANDKIT_LLM_MODEL.
  static EndpointConfig from_environment();
};

/// Sends build_prompt(req) to `<base_url>/chat/completions` and parses the
/// reply. On unparseable replies retries with a format reminder, then throws
/// RemoteError(Parse). Never falls back to the template renderer.
CaptionSet annotate_remote(const CaptionRequest& req, const EndpointConfig& endpoint);

/// annotate_remote over many requests with at most endpoint.max_in_flight
/// concurrent calls. Results are index-aligned with `reqs`.
std::vector<CaptionSet> annotate_remote_batch(const std::vector<CaptionRequest>& reqs,
                                              const EndpointConfig& endpoint);

std::string captions_to_json(const CaptionSet& captions, int indent = 2);

} // namespace handkit
