#include "enscore/sampler.hpp"

#include "enscore/parallel.hpp"

#include <cmath>
#include <sstream>

namespace enscore {

std::string_view to_string(Integrator integrator) {
  switch (integrator) {
    case Integrator::ReverseSDE_EulerMaruyama: return "ReverseSDE_EulerMaruyama";
    case Integrator::ProbabilityFlow_Heun: return "ProbabilityFlow_Heun";
  }
  return "?";
}

std::string_view to_string(EstimatorKind kind) {
  switch (kind) {
    case EstimatorKind::Gaussian: return "Gaussian";
    case EstimatorKind::MIS: return "MIS";
  }
  return "?";
}

std::string_view to_string(NodeMode mode) {
  switch (mode) {
    case NodeMode::ReuseEnsemble: return "ReuseEnsemble";
    case NodeMode::DrawFresh: return "DrawFresh";
  }
  return "?";
}

void validate(const SamplerConfig& cfg) {
  require(cfg.n_ens >= 2, "n_ens must be at least 2");
  require(cfg.n_resample >= 1, "n_resample must be at least 1");
  require(cfg.dt_init > 0.0, "dt_init must be positive");
  require(cfg.dt_init <= 1.0 / cfg.n_resample * (1.0 + 1e-12),
          "dt_init must not exceed the resampling interval 1/n_resample");
}

std::vector<double> substep_grid(double t_start, double t_end, double dt) {
  require(t_start > t_end && dt > 0.0, "substep grid needs t_start > t_end and dt > 0");
  const auto n = static_cast<long>(std::max(1.0, std::ceil((t_start - t_end) / dt - 1e-9)));
  std::vector<double> grid;
  grid.reserve(static_cast<std::size_t>(n) + 1);
  for (long k = 0; k < n; ++k) grid.push_back(t_start - static_cast<double>(k) * dt);
  grid.push_back(t_end);
  return grid;
}

std::vector<Rng> member_streams(std::uint64_t seed, int n_ens) {
  std::vector<Rng> streams;
  streams.reserve(static_cast<std::size_t>(n_ens));
  for (int i = 0; i < n_ens; ++i)
    streams.push_back(derive_stream(seed, stream_domain::kMemberNoise, static_cast<std::uint64_t>(i)));
  return streams;
}

SampleSet initial_ensemble(const ForwardSpec& spec, std::vector<Rng>& streams) {
  const auto d = spec.dim();
  // ZeroDrift: Sigma_1 = v(1) I; OU: g g^T = alpha Sigma_prior
  const double scale =
      spec.kind() == ForwardKind::ZeroDrift ? std::sqrt(spec.variance_scale(1.0)) : 1.0;
  SampleSet ensemble(static_cast<Eigen::Index>(streams.size()), d);
  for (std::size_t i = 0; i < streams.size(); ++i) {
    const Vector z = standard_normal(streams[i], d);
    ensemble.row(static_cast<Eigen::Index>(i)) = (spec.mu() + scale * (spec.scale_matrix() * z)).transpose();
  }
  return ensemble;
}

void integrate_interval(const ForwardSpec& spec, const ScoreEstimator& estimator, SampleSet& ensemble,
                        std::vector<Rng>& streams, double t_start, double t_end, double dt,
                        Integrator integrator, int threads) {
  require(ensemble.cols() == spec.dim(), "ensemble dimension must match the forward spec");
  require(streams.size() == static_cast<std::size_t>(ensemble.rows()), "one noise stream per member");
  const std::vector<double> grid = substep_grid(t_start, t_end, dt);

  std::vector<ScoreEstimator::TimeContext> contexts;
  contexts.reserve(grid.size());
  const std::size_t needed = integrator == Integrator::ProbabilityFlow_Heun ? grid.size() : grid.size() - 1;
  for (std::size_t k = 0; k < needed; ++k) contexts.push_back(estimator.context(grid[k]));

  const auto d = spec.dim();
  parallel_for(static_cast<std::size_t>(ensemble.rows()), threads, [&](std::size_t i) {
    const auto row = static_cast<Eigen::Index>(i);
    Vector x = ensemble.row(row).transpose();
    for (std::size_t k = 0; k + 1 < grid.size(); ++k) {
      const double t = grid[k];
      const double h = t - grid[k + 1];
      if (integrator == Integrator::ReverseSDE_EulerMaruyama) {
        const Vector s = estimator.score(contexts[k], x);
        const Vector xi = standard_normal(streams[i], d);
        x = x - h * reverse_drift(spec, t, x, s) + std::sqrt(h) * (spec.diffusion_matrix(t) * xi);
      } else {
        const Vector k1 = probability_flow_drift(spec, t, x, estimator.score(contexts[k], x));
        const Vector predictor = x - h * k1;
        const Vector k2 = probability_flow_drift(spec, grid[k + 1], predictor,
                                                 estimator.score(contexts[k + 1], predictor));
        x -= 0.5 * h * (k1 + k2);
      }
      if (!x.allFinite()) {
        std::ostringstream msg;
        msg << "ensemble member " << i << " became non-finite at t = " << grid[k + 1];
        throw NonFiniteState(i, grid[k + 1], msg.str());
      }
    }
    ensemble.row(row) = x.transpose();
  });
}

RunRecord run(const ForwardSpec& spec, const TargetDensity& target, const SamplerConfig& cfg) {
  validate(cfg);
  require(spec.dim() == target.dim, "forward spec and target dimensions must agree");

  std::vector<Rng> streams = member_streams(cfg.seed, cfg.n_ens);
  SampleSet ensemble = initial_ensemble(spec, streams);

  RunRecord record;
  const double dt_r = 1.0 / cfg.n_resample;
  for (int r = 1; r <= cfg.n_resample; ++r) {
    const double t_start = 1.0 - (r - 1) * dt_r;
    const double t_end = r == cfg.n_resample ? terminal_time(cfg.dt_init) : 1.0 - r * dt_r;
    record.resample_times.push_back(t_start);
    if (cfg.keep_snapshots) record.snapshots.push_back(ensemble);

    const std::uint64_t node_seed = mix64(cfg.seed ^ mix64(static_cast<std::uint64_t>(r)));
    const ScoreEstimator estimator =
        cfg.estimator_kind == EstimatorKind::MIS
            ? build_mis(ensemble, t_start, spec, target, cfg.antithetic, node_seed, cfg.threads)
            : freeze_estimator(target, build_gaussian_is(ensemble), spec, ensemble, cfg.node_mode,
                               cfg.antithetic, node_seed, cfg.threads);
    record.p0_eval_count += estimator.p0_evaluations();

    integrate_interval(spec, estimator, ensemble, streams, t_start, t_end, cfg.dt_init, cfg.integrator,
                       cfg.threads);
  }
  if (cfg.keep_snapshots) record.snapshots.push_back(ensemble);
  record.final_ensemble = std::move(ensemble);
  return record;
}

}  // namespace enscore
