#pragma once

#include <cstdint>
#include <random>

namespace lgap {

// SplitMix64 mixing step.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

// Deterministic stream split: stream k of a master seed is
// splitmix64(master + (k+1)*GOLDEN). Chains use streams 0..chains-1,
// the trace estimator uses kTraceStream, parameter init uses kInitStream.
inline std::uint64_t stream_seed(std::uint64_t master, std::uint64_t stream) {
  return splitmix64(master + (stream + 1) * 0x9E3779B97F4A7C15ULL);
}

inline constexpr std::uint64_t kInitStream = 1u << 20;
inline constexpr std::uint64_t kTraceStream = 1u << 21;

using Rng = std::mt19937_64;

inline Rng make_rng(std::uint64_t master, std::uint64_t stream) {
  return Rng(stream_seed(master, stream));
}

// Uniform double in [0,1) built from the top 53 bits; avoids
// distribution objects so streams are identical across stdlibs.
inline double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Uniform integer in [0, n). Modulo bias is ~n/2^64, irrelevant here.
inline std::uint64_t uniform_below(Rng& rng, std::uint64_t n) {
  return rng() % n;
}

// Uniform double in [-s, s].
inline double uniform_symmetric(Rng& rng, double s) {
  return (2.0 * uniform01(rng) - 1.0) * s;
}

}  // namespace lgap
