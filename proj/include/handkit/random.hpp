#pragma once

#include <cstdint>
#include <random>

namespace handkit {

/// Engine used everywhere a seed appears in a public signature.
using Rng = std::mt19937_64;

/// Derives an independent stream seed from a base seed and up to two stream
/// indices (frame, hand, ...). splitmix64 finalizer.
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a = 0, std::uint64_t b = 0)
{
  std::uint64_t z = seed;
  for (std::uint64_t v : {a, b})
  {
    z += 0x9e3779b97f4a7c15ULL + v * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    z ^= z >> 31;
  }
  return z;
}

} // namespace handkit
