#pragma once

#include <cstdint>
#include <random>

namespace crowdscore {

/// splitmix64 finalizer; good avalanche, cheap, and stable across platforms.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Derives a child seed from a parent seed and a path of stream labels.
/// Distinct paths give statistically independent streams, so trials,
/// workers and policy decisions never share random state.
constexpr std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t label) {
  return mix64(parent ^ mix64(label));
}
constexpr std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t a, std::uint64_t b) {
  return derive_seed(derive_seed(parent, a), b);
}
constexpr std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t a, std::uint64_t b,
                                    std::uint64_t c) {
  return derive_seed(derive_seed(parent, a, b), c);
}

// Stream labels used throughout the library.
inline constexpr std::uint64_t kQualityStream = 0x71u;   // instance qualities
inline constexpr std::uint64_t kWorkerStream = 0x77u;    // per-worker bias/variance
inline constexpr std::uint64_t kAnswerStream = 0xa5u;    // evaluation noise
inline constexpr std::uint64_t kPolicyStream = 0x70u;    // shuffles, tie breaks
inline constexpr std::uint64_t kTrialStream = 0x75u;     // harness trial derivation
inline constexpr std::uint64_t kFitnessStream = 0xf1u;   // Monte Carlo fitness

inline std::mt19937_64 make_rng(std::uint64_t seed) { return std::mt19937_64(seed); }

/// One Gaussian draw. A fresh distribution per call keeps the consumed
/// engine state independent of call-site history.
inline double draw_normal(std::mt19937_64& rng, double mean, double stddev) {
  std::normal_distribution<double> d(mean, stddev);
  return d(rng);
}

inline double draw_uniform(std::mt19937_64& rng, double lo, double hi) {
  std::uniform_real_distribution<double> d(lo, hi);
  return d(rng);
}

}  // namespace crowdscore
