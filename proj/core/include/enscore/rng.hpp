#pragma once

#include "enscore/types.hpp"

#include <cstdint>
#include <random>

namespace enscore {

using Rng = std::mt19937_64;

// splitmix64 finalizer
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Independent stream keyed by (seed, domain, index). Domains separate
/// unrelated consumers that share a seed (member noise, node draws, ...).
inline Rng derive_stream(std::uint64_t seed, std::uint64_t domain, std::uint64_t index = 0) {
  std::uint64_t s = mix64(seed);
  s = mix64(s ^ mix64(domain + 0x632be59bd9b4e019ULL));
  s = mix64(s ^ mix64(index + 0x85157af5ULL));
  std::seed_seq seq{static_cast<std::uint32_t>(s), static_cast<std::uint32_t>(s >> 32)};
  return Rng(seq);
}

namespace stream_domain {
inline constexpr std::uint64_t kMemberNoise = 1;
inline constexpr std::uint64_t kNodeDraw = 2;
inline constexpr std::uint64_t kReference = 3;
inline constexpr std::uint64_t kChain = 4;
inline constexpr std::uint64_t kPermutation = 5;
inline constexpr std::uint64_t kForwardSim = 6;
inline constexpr std::uint64_t kTargetData = 7;
}  // namespace stream_domain

inline Vector standard_normal(Rng& rng, Eigen::Index dim) {
  std::normal_distribution<double> normal;
  Vector z(dim);
  for (Eigen::Index k = 0; k < dim; ++k) z[k] = normal(rng);
  return z;
}

}  // namespace enscore
