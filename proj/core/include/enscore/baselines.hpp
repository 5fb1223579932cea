#pragma once

#include "enscore/targets.hpp"
#include "enscore/types.hpp"

#include <cstdint>
#include <optional>

namespace enscore {

struct ChainConfig {
  int n_chains = 10;
  int n_steps = 10000;
  int burn_in = 1000;
  double step_size = 0.5;
  std::uint64_t seed = 0;
  /// Pooled post-burn-in samples to return, thinned evenly per chain; 0 keeps all.
  int n_samples = 0;
  int threads = 1;
  /// Starting points, one row per chain; standard-normal draws when absent.
  std::optional<SampleSet> initial;
};

struct ChainResult {
  SampleSet samples;
  double acceptance_rate = 0.0;
};

/// Throws ContractViolation unless n_steps > burn_in >= 0 and step_size > 0.
void validate(const ChainConfig& cfg);

/// Metropolis-adjusted Langevin. Throws ContractViolation when the target has no gradient.
ChainResult mala(const TargetDensity& target, const ChainConfig& cfg);

/// Random-walk Metropolis-Hastings with isotropic Gaussian proposals.
ChainResult rwmh(const TargetDensity& target, const ChainConfig& cfg);

}  // namespace enscore
