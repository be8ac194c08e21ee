#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <unordered_set>
#include <vector>

namespace handkit::fsq {

/// Per-dimension level counts; the codebook is their product.
struct FsqConfig
{
  std::vector<int> levels;

  std::size_t dim() const { return levels.size(); }
  /// Throws ValidationError when empty, any level < 2, or the product does
  /// not fit a 32-bit token.
  void validate() const;
  std::uint64_t codebook_size() const;
};

double sigmoid(double y);

/// round(sigmoid(y_d) * (L_d - 1)), ties away from zero. Accepts +-inf;
/// NaN throws DataError.
std::vector<int> quantize(std::span<const double> y, const FsqConfig& cfg);

/// q_d / (L_d - 1); throws DataError for out-of-range indices.
std::vector<double> dequantize(std::span<const int> q, const FsqConfig& cfg);

/// Mixed-radix index, last dimension fastest.
std::uint32_t code_index(std::span<const int> q, const FsqConfig& cfg);
std::vector<int> code_from_index(std::uint32_t index, const FsqConfig& cfg);

/// Distinct-code counter; merge() combines partial counts from workers.
class CodebookUsage
{
public:
  explicit CodebookUsage(std::uint64_t codebook_size) : size_(codebook_size) {}

  void add(std::uint32_t index);
  void merge(const CodebookUsage& other);
  std::size_t distinct() const { return seen_.size(); }
  double utilization() const;

private:
  std::uint64_t size_;
  std::unordered_set<std::uint32_t> seen_;
};

double utilization(std::span<const std::uint32_t> tokens, const FsqConfig& cfg);

/// One JSON header line {"levels":[...],"dim":D,"count":N} terminated by
/// '\n', then N little-endian uint32 indices.
void write_token_stream(const std::filesystem::path& path, std::span<const std::uint32_t> tokens,
                        const FsqConfig& cfg);
std::vector<std::uint32_t> read_token_stream(const std::filesystem::path& path, FsqConfig* cfg = nullptr);

} // namespace handkit::fsq
