#pragma once

#include "enscore/diffusion.hpp"
#include "enscore/rng.hpp"
#include "enscore/score_estimator.hpp"
#include "enscore/targets.hpp"

#include <cstdint>
#include <string_view>
#include <vector>

namespace enscore {

enum class Integrator { ReverseSDE_EulerMaruyama, ProbabilityFlow_Heun };
enum class EstimatorKind { Gaussian, MIS };

std::string_view to_string(Integrator integrator);
std::string_view to_string(EstimatorKind kind);
std::string_view to_string(NodeMode mode);

struct SamplerConfig {
  int n_ens = 1000;
  int n_resample = 10;
  double dt_init = 0.005;
  Integrator integrator = Integrator::ReverseSDE_EulerMaruyama;
  EstimatorKind estimator_kind = EstimatorKind::Gaussian;
  bool antithetic = false;
  NodeMode node_mode = NodeMode::ReuseEnsemble;
  std::uint64_t seed = 0;
  int threads = 1;
  bool keep_snapshots = false;
};

/// Throws ContractViolation on n_ens < 2, n_resample < 1 or dt_init outside (0, 1/n_resample].
void validate(const SamplerConfig& cfg);

struct RunRecord {
  SampleSet final_ensemble;
  std::size_t p0_eval_count = 0;
  std::vector<double> resample_times;
  std::vector<SampleSet> snapshots;  // ensemble at each resample time, then the final one
};

/// Terminal clamp of the last interval; the kernel is singular at t = 0.
inline double terminal_time(double dt_init) { return dt_init / 10.0; }

/// Decreasing substep times t_start = s_0 > s_1 > ... > s_n = t_end spaced by dt,
/// with the last step shortened to land on t_end.
std::vector<double> substep_grid(double t_start, double t_end, double dt);

/// N(mu, Sigma_1) for ZeroDrift and N(mu, g g^T) = N(mu, alpha Sigma_prior) for OU.
/// Member i is drawn from streams[i].
SampleSet initial_ensemble(const ForwardSpec& spec, std::vector<Rng>& streams);

/// One Algorithm-1 integration phase: every member moves from t_start to
/// t_end under the frozen estimator. streams[i] feeds member i's Brownian
/// increments; the probability flow never touches them.
void integrate_interval(const ForwardSpec& spec, const ScoreEstimator& estimator, SampleSet& ensemble,
                        std::vector<Rng>& streams, double t_start, double t_end, double dt,
                        Integrator integrator, int threads = 1);

std::vector<Rng> member_streams(std::uint64_t seed, int n_ens);

/// Reverse diffusion with periodic re-freezing of the score estimator.
RunRecord run(const ForwardSpec& spec, const TargetDensity& target, const SamplerConfig& cfg);

}  // namespace enscore
