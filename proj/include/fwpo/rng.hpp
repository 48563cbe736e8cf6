#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace fwpo {

using Rng = std::mt19937_64;

/// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Seed of the named stream `name` under the run seed `seed`. Streams are
/// independent of each other, so adding a consumer never shifts another.
constexpr std::uint64_t stream_seed(std::uint64_t seed, std::string_view name) {
  std::uint64_t h = 0xcbf29ce484222325ULL; // FNV-1a
  for (char c : name) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return mix64(mix64(seed) ^ h);
}

inline Rng make_stream(std::uint64_t seed, std::string_view name) {
  return Rng(stream_seed(seed, name));
}

} // namespace fwpo
