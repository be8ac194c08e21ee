#include "handkit/fsq.hpp"

#include <bit>
#include <cmath>
#include <fstream>
#include <limits>

#include <fmt/format.h>
#include <json.hpp>

#include "handkit/error.hpp"

namespace handkit::fsq {

static_assert(std::endian::native == std::endian::little, "token streams assume a little-endian host");

void FsqConfig::validate() const
{
  if (levels.empty())
    throw ValidationError("fsq levels must not be empty");
  std::uint64_t product = 1;
  for (int l : levels)
  {
    if (l < 2)
      throw ValidationError(fmt::format("fsq level {} is below 2", l));
    product *= static_cast<std::uint64_t>(l);
    if (product > (std::uint64_t{1} << 32))
      throw ValidationError("fsq codebook does not fit a 32-bit index");
  }
}

std::uint64_t FsqConfig::codebook_size() const
{
  std::uint64_t product = 1;
  for (int l : levels)
    product *= static_cast<std::uint64_t>(l);
  return product;
}

double sigmoid(double y)
{
  if (y >= 0.0)
    return 1.0 / (1.0 + std::exp(-y));
  const double e = std::exp(y);
  return e / (1.0 + e);
}

std::vector<int> quantize(std::span<const double> y, const FsqConfig& cfg)
{
  if (y.size() != cfg.dim())
    throw ValidationError(fmt::format("fsq input has {} values, expected {}", y.size(), cfg.dim()));
  std::vector<int> q(y.size());
  for (std::size_t d = 0; d < y.size(); ++d)
  {
    if (std::isnan(y[d]))
      throw DataError("fsq input is NaN");
    q[d] = static_cast<int>(std::round(sigmoid(y[d]) * (cfg.levels[d] - 1)));
  }
  return q;
}

std::vector<double> dequantize(std::span<const int> q, const FsqConfig& cfg)
{
  if (q.size() != cfg.dim())
    throw ValidationError(fmt::format("fsq code has {} values, expected {}", q.size(), cfg.dim()));
  std::vector<double> out(q.size());
  for (std::size_t d = 0; d < q.size(); ++d)
  {
    if (q[d] < 0 || q[d] >= cfg.levels[d])
      throw DataError(fmt::format("fsq level {} out of range for dimension {}", q[d], d));
    out[d] = static_cast<double>(q[d]) / (cfg.levels[d] - 1);
  }
  return out;
}

std::uint32_t code_index(std::span<const int> q, const FsqConfig& cfg)
{
  if (q.size() != cfg.dim())
    throw ValidationError(fmt::format("fsq code has {} values, expected {}", q.size(), cfg.dim()));
  if (cfg.codebook_size() > (std::uint64_t{1} << 32))
    throw ValidationError("fsq codebook does not fit a 32-bit index");
  std::uint64_t index = 0;
  for (std::size_t d = 0; d < q.size(); ++d)
  {
    if (q[d] < 0 || q[d] >= cfg.levels[d])
      throw DataError(fmt::format("fsq level {} out of range for dimension {}", q[d], d));
    index = index * static_cast<std::uint64_t>(cfg.levels[d]) + static_cast<std::uint64_t>(q[d]);
  }
  return static_cast<std::uint32_t>(index);
}

std::vector<int> code_from_index(std::uint32_t index, const FsqConfig& cfg)
{
  if (index >= cfg.codebook_size())
    throw DataError(fmt::format("fsq index {} outside codebook of {}", index, cfg.codebook_size()));
  std::vector<int> q(cfg.dim());
  std::uint64_t rest = index;
  for (std::size_t d = cfg.dim(); d-- > 0;)
  {
    q[d] = static_cast<int>(rest % static_cast<std::uint64_t>(cfg.levels[d]));
    rest /= static_cast<std::uint64_t>(cfg.levels[d]);
  }
  return q;
}

void CodebookUsage::add(std::uint32_t index)
{
  if (index >= size_)
    throw DataError(fmt::format("fsq index {} outside codebook of {}", index, size_));
  seen_.insert(index);
}

void CodebookUsage::merge(const CodebookUsage& other)
{
  if (other.size_ != size_)
    throw ValidationError("cannot merge usage of different codebooks");
  seen_.insert(other.seen_.begin(), other.seen_.end());
}

double CodebookUsage::utilization() const
{
  return size_ == 0 ? 0.0 : static_cast<double>(seen_.size()) / static_cast<double>(size_);
}

double utilization(std::span<const std::uint32_t> tokens, const FsqConfig& cfg)
{
  CodebookUsage usage(cfg.codebook_size());
  for (auto t : tokens)
    usage.add(t);
  return usage.utilization();
}

void write_token_stream(const std::filesystem::path& path, std::span<const std::uint32_t> tokens,
                        const FsqConfig& cfg)
{
  cfg.validate();
  for (auto t : tokens)
    if (t >= cfg.codebook_size())
      throw DataError(fmt::format("fsq index {} outside codebook of {}", t, cfg.codebook_size()));
  if (path.has_parent_path())
    std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out)
    throw DataError(fmt::format("cannot write {}", path.string()));
  nlohmann::ordered_json header;
  header["levels"] = cfg.levels;
  header["dim"] = cfg.dim();
  header["count"] = tokens.size();
  out << header.dump() << '\n';
  out.write(reinterpret_cast<const char*>(tokens.data()), static_cast<std::streamsize>(tokens.size_bytes()));
  if (!out)
    throw DataError(fmt::format("failed writing {}", path.string()));
}

std::vector<std::uint32_t> read_token_stream(const std::filesystem::path& path, FsqConfig* cfg_out)
{
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw DataError(fmt::format("cannot read {}", path.string()));
  std::string line;
  if (!std::getline(in, line))
    throw DataError(fmt::format("{}: missing token header", path.string()));
  FsqConfig cfg;
  std::size_t count = 0;
  try
  {
    const auto header = nlohmann::json::parse(line);
    cfg.levels = header.at("levels").get<std::vector<int>>();
    count = header.at("count").get<std::size_t>();
    if (header.at("dim").get<std::size_t>() != cfg.levels.size())
      throw DataError(fmt::format("{}: dim disagrees with levels", path.string()));
  }
  catch (const nlohmann::json::exception& e)
  {
    throw DataError(fmt::format("{}: bad token header: {}", path.string(), e.what()));
  }
  try
  {
    cfg.validate();
  }
  catch (const ValidationError& e)
  {
    throw DataError(fmt::format("{}: {}", path.string(), e.what()));
  }
  std::vector<std::uint32_t> tokens(count);
  in.read(reinterpret_cast<char*>(tokens.data()), static_cast<std::streamsize>(count * sizeof(std::uint32_t)));
  if (static_cast<std::size_t>(in.gcount()) != count * sizeof(std::uint32_t) || in.peek() != EOF)
    throw DataError(fmt::format("{}: token payload does not match count {}", path.string(), count));
  for (auto t : tokens)
    if (t >= cfg.codebook_size())
      throw DataError(fmt::format("{}: token {} outside codebook", path.string(), t));
  if (cfg_out)
    *cfg_out = cfg;
  return tokens;
}

} // namespace handkit::fsq
