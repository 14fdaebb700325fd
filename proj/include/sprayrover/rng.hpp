// Seeded random streams. Every subsystem draws from its own generator derived
// from the run seed and a fixed label, so adding draws in one subsystem never
// shifts another subsystem's sequence.
#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace sprayrover {

using Rng = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

inline std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  return h;
}

/// Generator for stream `label` under run seed `seed`.
inline Rng fork_stream(std::uint64_t seed, std::string_view label) {
  return Rng(splitmix64(seed ^ splitmix64(fnv1a(label))));
}

namespace streams {
inline constexpr std::string_view kGps = "gps";
inline constexpr std::string_view kDetector = "detector";
inline constexpr std::string_view kLink = "link";
}  // namespace streams

}  // namespace sprayrover
