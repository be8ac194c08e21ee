#include "handkit/captioner.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <numeric>
#include <set>

#include <fmt/format.h>
#include <httplib.h>
#include <json.hpp>

#include "handkit/parallel.hpp"

namespace handkit {

namespace {

void validate_levels(const std::vector<int>& levels)
{
  if (levels.empty())
    throw ValidationError("at least one caption level is required");
  std::set<int> seen;
  for (int l : levels)
  {
    if (l < 1 || l > kNumCaptionLevels)
      throw ValidationError(fmt::format("caption level {} outside 1..{}", l, kNumCaptionLevels));
    if (!seen.insert(l).second)
      throw ValidationError(fmt::format("caption level {} requested twice", l));
  }
}

std::string_view level_definition(int level)
{
  switch (level)
  {
    case 1: return "one short sentence per part naming only the three most prominent events";
    case 2: return "two or three sentences per part covering about six events";
    case 3: return "a balanced description covering about half of the events";
    case 4: return "a detailed description covering about four fifths of the events";
    case 5: return "an exhaustive description that mentions every event";
  }
  return "";
}

std::string finger_phrase(std::string_view finger)
{
  return finger == "thumb" ? "thumb" : fmt::format("{} finger", finger);
}

std::string upper_first(std::string s)
{
  if (!s.empty())
    s[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(s[0])));
  return s;
}

std::pair<std::string, std::string> split_once(const std::string& s, char sep)
{
  const auto pos = s.find(sep);
  if (pos == std::string::npos)
    return {s, {}};
  return {s.substr(0, pos), s.substr(pos + 1)};
}

// "left_index" -> "left index finger"
std::string tip_phrase(const std::string& hand_finger)
{
  const auto [hand, finger] = split_once(hand_finger, '_');
  return fmt::format("{} {}", hand, finger_phrase(finger));
}

std::string subject_of(const Event& e)
{
  const auto kind = parse_descriptor_kind(e.descriptor);
  if (!kind)
    return fmt::format("the {} {} {}", e.hand, e.descriptor, e.target);
  switch (*kind)
  {
    case DescriptorKind::FingerFlexing:
    {
      const auto [finger, joint] = split_once(e.target, '_');
      std::string joint_upper = joint;
      std::transform(joint_upper.begin(), joint_upper.end(), joint_upper.begin(),
                     [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
      return fmt::format("the {} {} {} joint", e.hand, finger_phrase(finger), joint_upper);
    }
    case DescriptorKind::FingerSpacing:
    {
      const auto [a, b] = split_once(e.target, '-');
      return fmt::format("the spacing between the {} {} and {}", e.hand, finger_phrase(a), finger_phrase(b));
    }
    case DescriptorKind::FingerFingerDistance:
    {
      const auto [a, b] = split_once(e.target, '-');
      if (e.hand == "both")
        return fmt::format("the {} tip and the {} tip", tip_phrase(a), tip_phrase(b));
      return fmt::format("the {} {} tip and {} tip", e.hand, finger_phrase(a), finger_phrase(b));
    }
    case DescriptorKind::FingerPalmDistance:
    {
      const auto [tip, palm] = split_once(e.target, '-');
      const auto [palm_hand, rest] = split_once(palm, '_');
      return fmt::format("the {} tip relative to the {} palm", tip_phrase(tip), palm_hand);
    }
    case DescriptorKind::PalmPalmRelation: return "the right palm relative to the left palm";
    case DescriptorKind::WristTrajectory: return fmt::format("the {} wrist", e.hand);
  }
  return e.target;
}

std::string sentence(const Event& e, double fps)
{
  const double t0 = static_cast<double>(e.start_frame) / fps;
  const double t1 = static_cast<double>(e.end_frame) / fps;
  const std::string subject = subject_of(e);
  const bool motion = e.to_state.rfind("moves ", 0) == 0 || e.to_state == "stationary";
  if (e.kind == EventKind::Constant)
    return upper_first(fmt::format("{} stays {} from {:.2f}s to {:.2f}s.", subject, e.to_state, t0, t1));
  if (motion)
    return upper_first(fmt::format("{} {} between {:.2f}s and {:.2f}s.", subject, e.to_state, t0, t1));
  return upper_first(
      fmt::format("{} goes from {} to {} between {:.2f}s and {:.2f}s.", subject, e.from_state, e.to_state, t0, t1));
}

std::string render_group(const std::vector<const Event*>& events, int level, double fps, std::string_view empty)
{
  if (events.empty())
    return std::string(empty);
  std::vector<std::size_t> order(events.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return events[a]->end_frame - events[a]->start_frame > events[b]->end_frame - events[b]->start_frame;
  });
  order.resize(events_for_level(level, events.size()));
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return std::tie(events[a]->start_frame, a) < std::tie(events[b]->start_frame, b);
  });
  std::string out;
  for (std::size_t i : order)
  {
    if (!out.empty())
      out += ' ';
    out += sentence(*events[i], fps);
  }
  return out;
}

std::string extract_json_object(std::string_view reply)
{
  const auto fence = reply.find("```");
  if (fence != std::string_view::npos)
  {
    auto body_start = reply.find('\n', fence);
    const auto close = body_start == std::string_view::npos ? std::string_view::npos : reply.find("```", body_start);
    if (close != std::string_view::npos)
      return std::string(reply.substr(body_start + 1, close - body_start - 1));
  }
  const auto open = reply.find('{');
  const auto last = reply.rfind('}');
  if (open == std::string_view::npos || last == std::string_view::npos || last < open)
    throw RemoteError(RemoteErrorCode::Parse, "reply contains no JSON object");
  return std::string(reply.substr(open, last - open + 1));
}

struct ParsedUrl
{
  std::string origin; // scheme://host[:port]
  std::string prefix; // path without trailing slash
};

ParsedUrl parse_url(const std::string& url)
{
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos)
    throw RemoteError(RemoteErrorCode::Config, fmt::format("endpoint url '{}' has no scheme", url));
  const auto path_start = url.find('/', scheme_end + 3);
  ParsedUrl out;
  out.origin = url.substr(0, path_start);
  out.prefix = path_start == std::string::npos ? "" : url.substr(path_start);
  while (!out.prefix.empty() && out.prefix.back() == '/')
    out.prefix.pop_back();
  return out;
}

std::string chat_completion(httplib::Client& client, const std::string& path, const EndpointConfig& endpoint,
                            const nlohmann::json& messages)
{
  nlohmann::json body;
  body["model"] = endpoint.model;
  body["messages"] = messages;
  body["temperature"] = 0;
  httplib::Headers headers;
  if (!endpoint.api_key.empty())
    headers.emplace("Authorization", "Bearer " + endpoint.api_key);
  auto res = client.Post(path, headers, body.dump(), "application/json");
  if (!res)
    throw RemoteError(RemoteErrorCode::Network, fmt::format("request failed: {}", httplib::to_string(res.error())));
  if (res->status == 401 || res->status == 403)
    throw RemoteError(RemoteErrorCode::Auth, fmt::format("endpoint rejected credentials (HTTP {})", res->status));
  if (res->status != 200)
    throw RemoteError(RemoteErrorCode::Http, fmt::format("endpoint returned HTTP {}", res->status));
  try
  {
    const auto j = nlohmann::json::parse(res->body);
    return j.at("choices").at(0).at("message").at("content").get<std::string>();
  }
  catch (const nlohmann::json::exception& e)
  {
    throw RemoteError(RemoteErrorCode::Parse, fmt::format("malformed completion response: {}", e.what()));
  }
}

} // namespace

void CaptionRequest::validate() const
{
  validate_levels(levels);
  parse_feature_json(feature_json);
}

std::string build_prompt(const CaptionRequest& req)
{
  req.validate();
  std::vector<int> levels = req.levels;
  std::sort(levels.begin(), levels.end());
  std::string p;
  auto out = std::back_inserter(p);
  fmt::format_to(out, "You are given structured features extracted from a two-hand motion clip. Each event names a "
                      "descriptor, the hand it belongs to, its frame span and the states before and after.\n\n");
  fmt::format_to(out, "Instructions:\n");
  fmt::format_to(out, "1. Write three separate parts for every level: \"left\" describes only the left hand, "
                      "\"right\" describes only the right hand, and \"inter\" describes how the two hands relate "
                      "to each other.\n");
  fmt::format_to(out, "2. Always report critical events such as contact, separation and hyperextension whenever "
                      "they appear in the features.\n");
  fmt::format_to(out, "3. Keep temporal order: narrate events in the order of their frame indices and say what "
                      "happens before, during and after each one.\n");
  fmt::format_to(out, "4. Mention only hands, fingers and events that appear in the features.\n\n");
  fmt::format_to(out, "Levels:\n");
  for (int l : levels)
    fmt::format_to(out, "- level_{}: {}.\n", l, level_definition(l));
  fmt::format_to(out, "\nReply format: a single JSON object in a ```json fenced block with exactly the keys ");
  for (std::size_t i = 0; i < levels.size(); ++i)
    fmt::format_to(out, "{}\"level_{}\"", i == 0 ? "" : ", ", levels[i]);
  fmt::format_to(out, ". Each value is an object with string fields \"left\", \"right\" and \"inter\". "
                      "No other text.\n");
  if (!req.style.empty())
    fmt::format_to(out, "\nStyle: {}\n", req.style);
  fmt::format_to(out, "\nFeatures:\n{}\n", req.feature_json);
  return p;
}

std::size_t events_for_level(int level, std::size_t available)
{
  std::size_t want = 0;
  switch (level)
  {
    case 1: want = 3; break;
    case 2: want = 6; break;
    case 3: want = (available + 1) / 2; break;
    case 4: want = (available * 4 + 4) / 5; break;
    case 5: want = available; break;
    default: throw ValidationError(fmt::format("caption level {} outside 1..{}", level, kNumCaptionLevels));
  }
  return std::min(want, available);
}

CaptionSet render_template_captions(const FeatureDocument& features, const std::vector<int>& levels)
{
  validate_levels(levels);
  std::vector<const Event*> left, right, inter;
  for (const auto& e : features.events)
  {
    if (e.hand == "left")
      left.push_back(&e);
    else if (e.hand == "right")
      right.push_back(&e);
    else
      inter.push_back(&e);
  }
  CaptionSet out;
  for (int l : levels)
    out[l] = {render_group(left, l, features.fps, "the left hand is still"),
              render_group(right, l, features.fps, "the right hand is still"),
              render_group(inter, l, features.fps, "the hands do not interact")};
  return out;
}

CaptionSet parse_caption_reply(std::string_view reply, const std::vector<int>& levels)
{
  nlohmann::json j;
  try
  {
    j = nlohmann::json::parse(extract_json_object(reply));
  }
  catch (const nlohmann::json::exception& e)
  {
    throw RemoteError(RemoteErrorCode::Parse, fmt::format("reply is not valid JSON: {}", e.what()));
  }
  if (!j.is_object())
    throw RemoteError(RemoteErrorCode::Parse, "reply JSON is not an object");
  CaptionSet out;
  for (int l : levels)
  {
    const auto key = fmt::format("level_{}", l);
    if (!j.contains(key) || !j[key].is_object())
      throw RemoteError(RemoteErrorCode::Parse, fmt::format("reply lacks {}", key));
    const auto& o = j[key];
    CaptionTriple t;
    for (auto [name, field] : {std::pair{"left", &t.left}, {"right", &t.right}, {"inter", &t.inter}})
    {
      if (!o.contains(name) || !o[name].is_string() || o[name].get<std::string>().empty())
        throw RemoteError(RemoteErrorCode::Parse, fmt::format("reply {} lacks a non-empty \"{}\"", key, name));
      *field = o[name].get<std::string>();
    }
    out[l] = std::move(t);
  }
  return out;
}

EndpointConfig EndpointConfig::from_environment()
{
  EndpointConfig cfg;
  if (const char* v = std::getenv("HANDKIT_LLM_BASE_URL"))
    cfg.base_url = v;
  if (const char* v = std::getenv("HANDKIT_LLM_API_KEY"))
    cfg.api_key = v;
  if (const char* v = std::getenv("HANDKIT_LLM_MODEL"))
    cfg.model = v;
  return cfg;
}

CaptionSet annotate_remote(const CaptionRequest& req, const EndpointConfig& endpoint)
{
  if (endpoint.base_url.empty() || endpoint.model.empty())
    throw RemoteError(RemoteErrorCode::Config, "remote annotation needs HANDKIT_LLM_BASE_URL and HANDKIT_LLM_MODEL");
  if (endpoint.max_retries < 0)
    throw RemoteError(RemoteErrorCode::Config, "max_retries must be non-negative");
  const auto url = parse_url(endpoint.base_url);
  const std::string prompt = build_prompt(req);

  httplib::Client client(url.origin);
  if (!client.is_valid())
    throw RemoteError(RemoteErrorCode::Config, fmt::format("unsupported endpoint url '{}'", endpoint.base_url));
  client.set_connection_timeout(endpoint.timeout);
  client.set_read_timeout(endpoint.timeout);
  client.set_write_timeout(endpoint.timeout);
  const std::string path = url.prefix + "/chat/completions";

  nlohmann::json messages = nlohmann::json::array();
  messages.push_back({{"role", "user"}, {"content", prompt}});
  std::string last_error;
  for (int attempt = 0; attempt <= endpoint.max_retries; ++attempt)
  {
    const std::string reply = chat_completion(client, path, endpoint, messages);
    try
    {
      return parse_caption_reply(reply, req.levels);
    }
    catch (const RemoteError& e)
    {
      last_error = e.what();
      messages.push_back({{"role", "assistant"}, {"content", reply}});
      messages.push_back({{"role", "user"},
                          {"content", fmt::format("The previous reply could not be used ({}). Reply again with only "
                                                  "the ```json fenced object and every requested level, each with "
                                                  "non-empty \"left\", \"right\" and \"inter\" strings.",
                                                  e.what())}});
    }
  }
  throw RemoteError(RemoteErrorCode::Parse,
                    fmt::format("unparseable reply after {} attempts: {}", endpoint.max_retries + 1, last_error));
}

std::vector<CaptionSet> annotate_remote_batch(const std::vector<CaptionRequest>& reqs, const EndpointConfig& endpoint)
{
  std::vector<CaptionSet> out(reqs.size());
  parallel_for(reqs.size(), std::max<std::size_t>(1, endpoint.max_in_flight),
               [&](std::size_t i) { out[i] = annotate_remote(reqs[i], endpoint); });
  return out;
}

std::string captions_to_json(const CaptionSet& captions, int indent)
{
  nlohmann::ordered_json j = nlohmann::ordered_json::object();
  for (const auto& [level, t] : captions)
    j[fmt::format("level_{}", level)] = {{"left", t.left}, {"right", t.right}, {"inter", t.inter}};
  return j.dump(indent);
}

} // namespace handkit
