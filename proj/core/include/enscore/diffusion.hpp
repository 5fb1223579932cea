#pragma once

#include "enscore/types.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace enscore {

/// Karras-style polynomial noise magnitude
///   g(t) = (sigma_min^{1/p} + t (sigma_max^{1/p} - sigma_min^{1/p}))^p
/// on t in [0, 1]. sigma_min == sigma_max gives a constant diffusion.
class NoiseSchedule {
 public:
  NoiseSchedule(double sigma_min, double sigma_max, double p = 5.0);

  double sigma_min() const { return sigma_min_; }
  double sigma_max() const { return sigma_max_; }
  double p() const { return p_; }

  double operator()(double t) const;

  /// Exact antiderivative v(t) = \int_0^t g(s)^2 ds.
  double integrated_variance(double t) const;

 private:
  double sigma_min_;
  double sigma_max_;
  double p_;
  double base_;   // sigma_min^{1/p}
  double slope_;  // sigma_max^{1/p} - sigma_min^{1/p}
};

enum class ForwardKind { ZeroDrift, OrnsteinUhlenbeck };

/// Moments of the Gaussian transition kernel
///   kappa_t(x | x') = N(mean_shrink x' + mean_offset, cov).
struct KernelMoments {
  Matrix mean_shrink;
  Vector mean_offset;
  Matrix cov;
  std::optional<Matrix> cov_chol;  // empty where cov is singular (t = 0)
};

/// Linear forward diffusion dx = -b (x - mu) dt + g_t dW with b = theta I.
///
/// Both supported kinds share the structure Sigma_t = c(t) S S^T with a
/// time-independent lower-triangular S and scalar c(t), and a scalar mean
/// shrink a(t). The score estimator relies on this to whiten once per
/// freeze instead of once per evaluation.
class ForwardSpec {
 public:
  static ForwardSpec zero_drift(Eigen::Index dim, const NoiseSchedule& schedule);

  /// OU process with g = Cholesky(alpha * prior_cov).
  static ForwardSpec ornstein_uhlenbeck(double theta, const Vector& mu, const Matrix& prior_cov,
                                        double alpha);

  /// OU process with an explicit lower-triangular scale matrix.
  static ForwardSpec ornstein_uhlenbeck_with_scale(double theta, const Vector& mu,
                                                   const Matrix& scale_matrix);

  ForwardKind kind() const { return kind_; }
  Eigen::Index dim() const { return mu_.size(); }
  double theta() const { return theta_; }
  double alpha() const { return alpha_; }
  const Vector& mu() const { return mu_; }
  const std::optional<NoiseSchedule>& schedule() const { return schedule_; }

  /// S in Sigma_t = c(t) S S^T: identity for ZeroDrift, g for OU.
  const Matrix& scale_matrix() const { return scale_; }
  double log_det_scale() const { return log_det_scale_; }

  /// a(t) such that mu_t(x') = a(t) x' + (1 - a(t)) mu.
  double shrink(double t) const;
  /// c(t) such that Sigma_t = c(t) S S^T.
  double variance_scale(double t) const;

  /// g_t g_t^T at time t.
  Matrix diffusion_gram(double t) const;
  /// g_t at time t.
  Matrix diffusion_matrix(double t) const;

  Vector kernel_mean(double t, const Eigen::Ref<const Vector>& x_prime) const;

 private:
  ForwardSpec() = default;

  ForwardKind kind_ = ForwardKind::ZeroDrift;
  double theta_ = 0.0;
  double alpha_ = 1.0;
  Vector mu_;
  std::optional<NoiseSchedule> schedule_;
  Matrix scale_;
  double log_det_scale_ = 0.0;
};

/// Throws std::domain_error unless 0 <= t <= 1.
void check_time(double t);

KernelMoments kernel_moments(const ForwardSpec& spec, double t);

/// Full reverse-SDE drift -(b (x - mu) + g g^T s_hat); integrated backwards in time.
Vector reverse_drift(const ForwardSpec& spec, double t, const Eigen::Ref<const Vector>& x,
                     const Eigen::Ref<const Vector>& s_hat);

/// Probability-flow drift -(b (x - mu) + 1/2 g g^T s_hat).
Vector probability_flow_drift(const ForwardSpec& spec, double t, const Eigen::Ref<const Vector>& x,
                              const Eigen::Ref<const Vector>& s_hat);

/// Euler-Maruyama forward trajectory from t = 0 to t = 1. Returns n_steps + 1
/// snapshots (the first is x0). Member i uses its own seed-derived stream.
std::vector<SampleSet> forward_simulate(const ForwardSpec& spec, const SampleSet& x0,
                                        int n_steps, std::uint64_t seed);

}  // namespace enscore
