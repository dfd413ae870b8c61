#pragma once

#include <cmath>
#include <cstdint>

// Counter-based randomness for the Monte Carlo harness. Each draw is a pure
// hash of (seed, trial, link), so the stream assigned to one link of one
// trial never depends on how many other draws happened: growing the alpha
// grid, reordering cells, or fanning trials across threads reproduces the
// same channels bit for bit.

namespace relaymec::rng {

// splitmix64 step: golden-gamma increment followed by the 64-bit finalizer.
constexpr std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Stream key for one exponential draw. Link ids are fixed by convention:
// 0 = AP-PR, 1 = PT-PR, 2 = PT-AP, 3+k = IoT node k.
constexpr std::uint64_t stream(std::uint64_t seed, std::uint64_t trial,
                               std::uint64_t link) {
  return splitmix64(splitmix64(splitmix64(seed) ^ trial) ^ link);
}

// Top 53 bits to [0, 1); never returns 1.0.
constexpr double uniform01(std::uint64_t h) {
  return static_cast<double>(h >> 11) * 0x1.0p-53;
}

// Inverse-CDF exponential draw; log1p keeps small quantiles exact.
inline double exponential(std::uint64_t h, double mean) {
  return -mean * std::log1p(-uniform01(h));
}

}  // namespace relaymec::rng
