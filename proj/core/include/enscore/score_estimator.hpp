#pragma once

#include "enscore/diffusion.hpp"
#include "enscore/targets.hpp"
#include "enscore/types.hpp"

#include <cstdint>
#include <memory>
#include <optional>

namespace enscore {

struct EnsembleMoments {
  Vector mean;
  Matrix cov;  // biased (1/N) covariance plus the regularization floor
};

/// eps_reg = 1e-8 * trace(cov) / D + 1e-12
double regularization_floor(const Matrix& cov);

/// Mean and regularized 1/N covariance of the ensemble rows. Requires N >= 2.
EnsembleMoments ensemble_moments(const SampleSet& ensemble);

class ScoreEstimator;

/// Proposal density for the importance-sampling nodes: either one Gaussian
/// fitted to the ensemble, or an equal-weight mixture of transition kernels
/// centred on the ensemble members.
class ImportanceDistribution {
 public:
  enum class Kind { EnsembleGaussian, MixtureMIS };

  static ImportanceDistribution gaussian(Vector mean, const Matrix& cov);
  static ImportanceDistribution mixture(const ForwardSpec& spec, SampleSet centers, double kernel_time);

  Kind kind() const { return kind_; }
  Eigen::Index dim() const { return dim_; }
  const Vector& mean() const { return mean_; }
  const Matrix& cov() const { return cov_; }
  const SampleSet& centers() const { return centers_; }
  double kernel_time() const { return kernel_time_; }

  double log_density(const Eigen::Ref<const Vector>& x) const;

  /// n draws; the mixture draws exactly one point per component (n must
  /// equal the number of centres).
  SampleSet sample(Rng& rng, Eigen::Index n) const;

 private:
  ImportanceDistribution() = default;

  Kind kind_ = Kind::EnsembleGaussian;
  Eigen::Index dim_ = 0;
  Vector mean_;
  Matrix cov_;
  Matrix chol_;
  SampleSet centers_;
  double kernel_time_ = 0.0;
  std::optional<ForwardSpec> spec_;
  std::shared_ptr<const ScoreEstimator> mixture_;
};

ImportanceDistribution build_gaussian_is(const SampleSet& ensemble);

/// Frozen Monte Carlo estimate
///   p_hat_t(x) = 1/N sum_i kappa_t(x | x'_i) exp(log_ratio_i)
/// and its score. Immutable; evaluation is safe from many threads.
class ScoreEstimator {
 public:
  ScoreEstimator(ForwardSpec spec, SampleSet nodes, Vector log_ratios, bool antithetic,
                 std::size_t p0_evaluations);

  const ForwardSpec& spec() const { return spec_; }
  const SampleSet& nodes() const { return nodes_; }
  const Vector& log_ratios() const { return log_ratios_; }
  Eigen::Index node_count() const { return nodes_.rows(); }
  bool antithetic() const { return antithetic_; }
  std::size_t p0_evaluations() const { return p0_evaluations_; }

  /// Throws std::domain_error for t outside (0, 1].
  double log_p_hat(double t, const Eigen::Ref<const Vector>& x) const;
  Vector score(double t, const Eigen::Ref<const Vector>& x) const;
  /// Softmax weights of the nodes at (t, x).
  Vector weights(double t, const Eigen::Ref<const Vector>& x) const;

  /// Scores for every row of xs at a shared time.
  SampleSet score_batch(double t, const SampleSet& xs, int threads = 1) const;

  /// Kernel quantities shared by every evaluation at one time. Integrators
  /// prepare each substep time once and reuse it across members.
  struct TimeContext {
    double t = 0.0;
    double c = 0.0;
    double log_norm = 0.0;
    Matrix means;  // whitened kernel means, one row per node
  };

  TimeContext context(double t) const;
  Vector score(const TimeContext& ctx, const Eigen::Ref<const Vector>& x) const;

 private:
  Vector whiten(const Eigen::Ref<const Vector>& x) const;
  // log p_hat at x; fills `weights` and the whitened weighted node mean when asked
  double evaluate(const TimeContext& ctx, const Vector& u, Vector* weights, Vector* mean_out) const;
  Vector score_from(const TimeContext& ctx, const Vector& u) const;

  ForwardSpec spec_;
  SampleSet nodes_;
  Vector log_ratios_;
  bool antithetic_;
  std::size_t p0_evaluations_;
  Matrix whitened_nodes_;  // S^{-1} node_i as rows
  Vector whitened_mu_;
};

enum class NodeMode { ReuseEnsemble, DrawFresh };

/// Evaluates p_0 on the nodes (ensemble rows or fresh draws from p_is),
/// optionally adding the mirrored nodes -x'_i, and freezes the estimator.
/// Throws EstimatorDegenerate when every node has zero target density.
ScoreEstimator freeze_estimator(const TargetDensity& target, const ImportanceDistribution& p_is,
                                const ForwardSpec& spec, const SampleSet& ensemble, NodeMode mode,
                                bool antithetic, std::uint64_t seed, int threads = 1);

/// Multiple importance sampling with one draw per ensemble member from
/// kappa_t(. | x_i) and balance-heuristic weights, i.e. a normalized
/// equal-weight kernel mixture as the proposal.
ScoreEstimator build_mis(const SampleSet& ensemble, double t, const ForwardSpec& spec,
                         const TargetDensity& target, bool antithetic, std::uint64_t seed,
                         int threads = 1);

}  // namespace enscore
