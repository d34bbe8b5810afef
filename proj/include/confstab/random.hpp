#pragma once

#include <cstdint>
#include <random>

namespace confstab {

using Rng = std::mt19937_64;

// SplitMix64 finalizer; used to derive independent stream seeds.
constexpr std::uint64_t mix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

// Seed for stream `stream` / item `index` under a master seed. Results do not
// depend on the order in which items are processed.
constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream, std::uint64_t index = 0) {
  return mix64(mix64(mix64(master) ^ (stream * 0xD1B54A32D192ED03ULL)) ^ index);
}

// Well-known stream identifiers so different consumers never share a stream.
namespace stream {
inline constexpr std::uint64_t kTrainData = 1;
inline constexpr std::uint64_t kProbe = 2;
inline constexpr std::uint64_t kIndices = 3;
inline constexpr std::uint64_t kReplacement = 4;
inline constexpr std::uint64_t kTrial = 5;
inline constexpr std::uint64_t kHoldout = 6;
inline constexpr std::uint64_t kExpectation = 7;
inline constexpr std::uint64_t kCapProbe = 8;
inline constexpr std::uint64_t kFixedHypothesis = 9;
}  // namespace stream

}  // namespace confstab
