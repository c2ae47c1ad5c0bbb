#pragma once

#include <cstdint>
#include <random>

namespace fgts {

using Rng = std::mt19937_64;

/// SplitMix64 finalizer.
inline constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Seed for run `run` of curve `stream` (e.g. the lambda index):
/// splitmix64(base ^ splitmix64((stream << 32) ^ run)).
/// Distinct (stream, run) pairs give distinct, decorrelated generator seeds.
inline constexpr std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream, std::uint64_t run) {
  return splitmix64(base ^ splitmix64((stream << 32) ^ run));
}

}  // namespace fgts
