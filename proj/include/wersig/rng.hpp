#pragma once

#include <cstdint>
#include <random>

namespace wersig {

/// SplitMix64 finalizer. Used only to derive seeds, never as the sampling engine.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Seed of child stream `index` under a root seed.
///
/// Stream-splitting rule: child(seed, i) = mix64(mix64(seed) + i * gamma), the
/// i-th output of a SplitMix64 sequence started at mix64(seed).
/// Every parallel unit of work (bootstrap replicate, Monte-Carlo repetition,
/// CV fold assignment) draws from its own child stream, so results never
/// depend on how work is scheduled across threads.
constexpr std::uint64_t child_seed(std::uint64_t seed, std::uint64_t index) noexcept {
  return mix64(mix64(seed) + index * 0x9e3779b97f4a7c15ULL);
}

/// The sampling engine: 64-bit Mersenne Twister, whose output sequence is
/// fixed by the C++ standard.
using Engine = std::mt19937_64;

inline Engine make_engine(std::uint64_t seed, std::uint64_t stream) {
  return Engine(child_seed(seed, stream));
}

/// Uniform integer in [0, bound) by Lemire's multiply-and-reject method.
/// Portable across standard libraries, unlike std::uniform_int_distribution.
inline std::uint64_t uniform_below(Engine& eng, std::uint64_t bound) {
  __extension__ typedef unsigned __int128 u128;
  u128 m = static_cast<u128>(eng()) * bound;
  auto low = static_cast<std::uint64_t>(m);
  if (low < bound) {
    const std::uint64_t threshold = (0 - bound) % bound;
    while (low < threshold) {
      m = static_cast<u128>(eng()) * bound;
      low = static_cast<std::uint64_t>(m);
    }
  }
  return static_cast<std::uint64_t>(m >> 64);
}

/// Uniform double in [0, 1) with 53 random bits.
inline double uniform01(Engine& eng) {
  return static_cast<double>(eng() >> 11) * 0x1.0p-53;
}

}  // namespace wersig
