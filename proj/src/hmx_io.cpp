#include "handkit/hmx_io.hpp"

#include <cmath>
#include <fstream>
#include <iterator>
#include <sstream>

#include <fmt/format.h>
#include <json.hpp>

#include "handkit/error.hpp"

namespace handkit {

using nlohmann::json;

namespace {

double finite_number(const json& v, std::size_t frame)
{
  if (!v.is_number())
    throw DataError(fmt::format("HMX frame {}: coordinate is not a number", frame));
  const double d = v.get<double>();
  if (!std::isfinite(d))
    throw DataError(fmt::format("HMX frame {}: non-finite coordinate", frame));
  return d;
}

} // namespace

MotionSequence parse_hmx(std::string_view text, std::string source_id)
{
  json doc;
  try
  {
    doc = json::parse(text);
  }
  catch (const json::exception& e)
  {
    throw DataError(fmt::format("HMX parse error: {}", e.what()));
  }
  if (!doc.is_object())
    throw DataError("HMX document must be an object");
  for (const char* key : {"fps", "joints_per_hand", "hands", "frames"})
    if (!doc.contains(key))
      throw DataError(fmt::format("HMX document missing \"{}\"", key));
  if (!doc["fps"].is_number() || !(doc["fps"].get<double>() > 0.0))
    throw DataError("HMX fps must be a positive number");
  if (doc["joints_per_hand"] != kJointsPerHand)
    throw DataError("HMX joints_per_hand must be 21");
  if (doc["hands"] != json::array({"left", "right"}))
    throw DataError("HMX hands must be [\"left\",\"right\"]");
  const json& frames = doc["frames"];
  if (!frames.is_array() || frames.empty())
    throw DataError("HMX frames must be a non-empty array");

  std::vector<Vec3> pts;
  pts.reserve(frames.size() * kJointsTotal);
  for (std::size_t f = 0; f < frames.size(); ++f)
  {
    const json& fr = frames[f];
    if (!fr.is_array() || fr.size() != static_cast<std::size_t>(kJointsTotal))
      throw DataError(fmt::format("HMX frame {}: expected 42 joints", f));
    for (const json& p : fr)
    {
      if (!p.is_array() || p.size() != 3)
        throw DataError(fmt::format("HMX frame {}: expected [x,y,z]", f));
      pts.emplace_back(finite_number(p[0], f), finite_number(p[1], f), finite_number(p[2], f));
    }
  }
  return MotionSequence(doc["fps"].get<double>(), std::move(pts), std::move(source_id));
}

std::string dump_hmx(const MotionSequence& seq)
{
  std::string out;
  out.reserve(64 + seq.points().size() * 64);
  auto it = std::back_inserter(out);
  fmt::format_to(it, "{{\"fps\":{},\"joints_per_hand\":{},\"hands\":[\"left\",\"right\"],\"frames\":[",
                 seq.fps(), kJointsPerHand);
  for (std::size_t f = 0; f < seq.num_frames(); ++f)
  {
    out += f ? ",[" : "[";
    const auto fr = seq.frame(f);
    for (int j = 0; j < kJointsTotal; ++j)
      fmt::format_to(it, "{}[{},{},{}]", j ? "," : "", fr[j].x(), fr[j].y(), fr[j].z());
    out += ']';
  }
  out += "]}\n";
  return out;
}

std::string read_text_file(const std::filesystem::path& path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw DataError(fmt::format("cannot open {}", path.string()));
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::filesystem::path& path, std::string_view text)
{
  if (path.has_parent_path())
    std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw DataError(fmt::format("cannot write {}", path.string()));
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out)
    throw DataError(fmt::format("write failed for {}", path.string()));
}

MotionSequence read_hmx(const std::filesystem::path& path)
{
  return parse_hmx(read_text_file(path), path.filename().string());
}

void write_hmx(const std::filesystem::path& path, const MotionSequence& seq)
{
  if (!seq.all_finite())
    throw DataError("refusing to write non-finite HMX data");
  write_text_file(path, dump_hmx(seq));
}

} // namespace handkit
