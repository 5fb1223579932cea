#include "enscore/baselines.hpp"

#include "enscore/parallel.hpp"
#include "enscore/rng.hpp"

#include <cmath>
#include <limits>
#include <random>
#include <vector>

namespace enscore {

namespace {

struct ChainOutput {
  std::vector<Vector> kept;
  long accepted = 0;
};

// Per-chain sample budget so that the pooled count equals n_samples.
int kept_per_chain(const ChainConfig& cfg, int chain) {
  const int post = cfg.n_steps - cfg.burn_in;
  if (cfg.n_samples <= 0) return post;
  const int base = cfg.n_samples / cfg.n_chains;
  const int extra = chain < cfg.n_samples % cfg.n_chains ? 1 : 0;
  return std::min(post, base + extra);
}

template <typename Step>
ChainResult run_chains(const TargetDensity& target, const ChainConfig& cfg, Step&& step) {
  validate(cfg);
  if (cfg.initial)
    require(cfg.initial->rows() == cfg.n_chains && cfg.initial->cols() == target.dim,
            "initial states must provide one row per chain");

  std::vector<ChainOutput> outputs(static_cast<std::size_t>(cfg.n_chains));
  parallel_for(outputs.size(), target.concurrency_safe ? cfg.threads : 1, [&](std::size_t c) {
    const int chain = static_cast<int>(c);
    Rng rng = derive_stream(cfg.seed, stream_domain::kChain, c);
    Vector x = cfg.initial ? Vector(cfg.initial->row(chain).transpose()) : standard_normal(rng, target.dim);
    double lp = target.log_density(x);

    const int post = cfg.n_steps - cfg.burn_in;
    const int keep = kept_per_chain(cfg, chain);
    const int stride = keep > 0 ? post / keep : post + 1;
    auto& out = outputs[c];
    out.kept.reserve(static_cast<std::size_t>(keep));
    for (int s = 0; s < cfg.n_steps; ++s) {
      if (step(x, lp, rng)) ++out.accepted;
      const int post_index = s - cfg.burn_in;
      if (post_index >= 0 && (post_index + 1) % stride == 0 &&
          static_cast<int>(out.kept.size()) < keep)
        out.kept.push_back(x);
    }
  });

  ChainResult result;
  std::size_t total = 0;
  long accepted = 0;
  for (const auto& o : outputs) {
    total += o.kept.size();
    accepted += o.accepted;
  }
  result.samples.resize(static_cast<Eigen::Index>(total), target.dim);
  Eigen::Index row = 0;
  for (const auto& o : outputs)
    for (const auto& v : o.kept) result.samples.row(row++) = v.transpose();
  result.acceptance_rate =
      static_cast<double>(accepted) / (static_cast<double>(cfg.n_chains) * cfg.n_steps);
  return result;
}

bool accept(double log_alpha, Rng& rng) {
  if (std::isnan(log_alpha)) return false;
  if (log_alpha >= 0.0) return true;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  return std::log(unit(rng)) < log_alpha;
}

}  // namespace

void validate(const ChainConfig& cfg) {
  require(cfg.n_chains >= 1, "n_chains must be positive");
  require(cfg.burn_in >= 0 && cfg.n_steps > cfg.burn_in, "need n_steps > burn_in >= 0");
  require(cfg.step_size > 0.0, "step_size must be positive");
}

ChainResult mala(const TargetDensity& target, const ChainConfig& cfg) {
  if (!target.has_gradient())
    throw ContractViolation("MALA needs a target with grad_log_density: " + target.name);
  const double eps = cfg.step_size;
  const double half_eps2 = 0.5 * eps * eps;

  // log q(to | from) up to a constant shared by both directions
  auto log_q = [&](const Vector& to, const Vector& from, const Vector& grad_from) {
    return -(to - from - half_eps2 * grad_from).squaredNorm() / (2.0 * eps * eps);
  };

  return run_chains(target, cfg, [&](Vector& x, double& lp, Rng& rng) {
    const Vector grad = target.grad_log_density(x);
    const Vector proposal = x + half_eps2 * grad + eps * standard_normal(rng, x.size());
    const double lp_new = target.log_density(proposal);
    if (!std::isfinite(lp_new)) return false;
    const Vector grad_new = target.grad_log_density(proposal);
    const double log_alpha = lp_new - lp + log_q(x, proposal, grad_new) - log_q(proposal, x, grad);
    if (!accept(log_alpha, rng)) return false;
    x = proposal;
    lp = lp_new;
    return true;
  });
}

ChainResult rwmh(const TargetDensity& target, const ChainConfig& cfg) {
  const double eps = cfg.step_size;
  return run_chains(target, cfg, [&](Vector& x, double& lp, Rng& rng) {
    const Vector proposal = x + eps * standard_normal(rng, x.size());
    const double lp_new = target.log_density(proposal);
    if (std::isnan(lp_new) || lp_new == -std::numeric_limits<double>::infinity()) return false;
    if (!accept(lp_new - lp, rng)) return false;
    x = proposal;
    lp = lp_new;
    return true;
  });
}

}  // namespace enscore
