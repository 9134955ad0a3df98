#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace lebow {

using Rng = std::mt19937_64;

/// Derives an independent, reproducible seed for a named sub-stream of a
/// master seed (e.g. "codebook", "synthetic", "svm").
inline std::uint64_t stream_seed(std::uint64_t master, std::string_view name,
                                 std::uint64_t index = 0) {
  std::uint64_t h = 0xcbf29ce484222325ull;  // FNV-1a
  for (unsigned char c : name) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  // splitmix64 finaliser over the combined words
  std::uint64_t z = master ^ (h + 0x9e3779b97f4a7c15ull + (index << 6) + (index >> 2));
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

}  // namespace lebow
