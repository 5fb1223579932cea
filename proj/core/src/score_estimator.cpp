#include "enscore/score_estimator.hpp"

#include "enscore/parallel.hpp"
#include "enscore/rng.hpp"

#include <Eigen/Cholesky>

#include <cmath>
#include <limits>
#include <stdexcept>

namespace enscore {

namespace {

constexpr double kLog2Pi = 1.8378770664093454835606594728112;
constexpr double kNegInf = -std::numeric_limits<double>::infinity();

void check_open_time(double t) {
  check_time(t);
  if (t == 0.0) throw std::domain_error("transition kernel is singular at t = 0");
}

}  // namespace

double regularization_floor(const Matrix& cov) {
  return 1e-8 * cov.trace() / static_cast<double>(cov.rows()) + 1e-12;
}

EnsembleMoments ensemble_moments(const SampleSet& ensemble) {
  require(ensemble.rows() >= 2, "ensemble moments need at least two members");
  const double n = static_cast<double>(ensemble.rows());
  EnsembleMoments m;
  m.mean = ensemble.colwise().mean().transpose();
  const Matrix centered = ensemble.rowwise() - m.mean.transpose();
  m.cov = centered.transpose() * centered / n;
  m.cov = 0.5 * (m.cov + m.cov.transpose());
  m.cov.diagonal().array() += regularization_floor(m.cov);
  return m;
}

ImportanceDistribution ImportanceDistribution::gaussian(Vector mean, const Matrix& cov) {
  require(cov.rows() == mean.size() && cov.cols() == mean.size(),
          "importance covariance must match the mean");
  Eigen::LLT<Matrix> llt(cov);
  if (llt.info() != Eigen::Success)
    throw ContractViolation("importance covariance is not positive definite");
  ImportanceDistribution p;
  p.kind_ = Kind::EnsembleGaussian;
  p.dim_ = mean.size();
  p.mean_ = std::move(mean);
  p.cov_ = cov;
  p.chol_ = llt.matrixL();
  return p;
}

ImportanceDistribution ImportanceDistribution::mixture(const ForwardSpec& spec, SampleSet centers,
                                                       double kernel_time) {
  check_open_time(kernel_time);
  require(centers.rows() >= 1, "mixture needs at least one centre");
  require(centers.cols() == spec.dim(), "mixture centres must match the forward spec");
  ImportanceDistribution p;
  p.kind_ = Kind::MixtureMIS;
  p.dim_ = spec.dim();
  p.kernel_time_ = kernel_time;
  p.spec_ = spec;
  // An estimator with unit ratios over the centres is exactly the equal-weight kernel mixture.
  p.mixture_ = std::make_shared<const ScoreEstimator>(spec, centers, Vector::Zero(centers.rows()),
                                                      false, 0);
  p.centers_ = std::move(centers);
  return p;
}

double ImportanceDistribution::log_density(const Eigen::Ref<const Vector>& x) const {
  require(x.size() == dim_, "point dimension must match the importance distribution");
  if (kind_ == Kind::EnsembleGaussian) return gaussian_log_density(x, mean_, chol_);
  return mixture_->log_p_hat(kernel_time_, x);
}

SampleSet ImportanceDistribution::sample(Rng& rng, Eigen::Index n) const {
  SampleSet out(n, dim_);
  if (kind_ == Kind::EnsembleGaussian) {
    for (Eigen::Index i = 0; i < n; ++i)
      out.row(i) = (mean_ + chol_ * standard_normal(rng, dim_)).transpose();
    return out;
  }
  require(n == centers_.rows(), "mixture sampling draws exactly one point per component");
  const double root_c = std::sqrt(spec_->variance_scale(kernel_time_));
  for (Eigen::Index i = 0; i < n; ++i) {
    const Vector mean = spec_->kernel_mean(kernel_time_, centers_.row(i).transpose());
    out.row(i) = (mean + root_c * (spec_->scale_matrix() * standard_normal(rng, dim_))).transpose();
  }
  return out;
}

ImportanceDistribution build_gaussian_is(const SampleSet& ensemble) {
  EnsembleMoments m = ensemble_moments(ensemble);
  return ImportanceDistribution::gaussian(std::move(m.mean), m.cov);
}

ScoreEstimator::ScoreEstimator(ForwardSpec spec, SampleSet nodes, Vector log_ratios, bool antithetic,
                               std::size_t p0_evaluations)
    : spec_(std::move(spec)),
      nodes_(std::move(nodes)),
      log_ratios_(std::move(log_ratios)),
      antithetic_(antithetic),
      p0_evaluations_(p0_evaluations) {
  require(nodes_.rows() >= 1, "estimator needs at least one node");
  require(nodes_.cols() == spec_.dim(), "node dimension must match the forward spec");
  require(log_ratios_.size() == nodes_.rows(), "one log-ratio per node");
  if (spec_.kind() == ForwardKind::ZeroDrift) {
    whitened_nodes_ = nodes_;
    whitened_mu_ = spec_.mu();
  } else {
    const auto lower = spec_.scale_matrix().triangularView<Eigen::Lower>();
    whitened_nodes_ = lower.solve(nodes_.transpose()).transpose();
    whitened_mu_ = lower.solve(spec_.mu());
  }
}

Vector ScoreEstimator::whiten(const Eigen::Ref<const Vector>& x) const {
  require(x.size() == spec_.dim(), "point dimension must match the estimator");
  if (spec_.kind() == ForwardKind::ZeroDrift) return x;
  return spec_.scale_matrix().triangularView<Eigen::Lower>().solve(x);
}

ScoreEstimator::TimeContext ScoreEstimator::context(double t) const {
  check_open_time(t);
  TimeContext ctx;
  ctx.t = t;
  const double a = spec_.shrink(t);
  ctx.c = spec_.variance_scale(t);
  const double d = static_cast<double>(spec_.dim());
  ctx.log_norm = -0.5 * d * (kLog2Pi + std::log(ctx.c)) - spec_.log_det_scale();
  ctx.means = a * whitened_nodes_;
  if (a != 1.0) ctx.means.rowwise() += (1.0 - a) * whitened_mu_.transpose();
  return ctx;
}

double ScoreEstimator::evaluate(const TimeContext& ctx, const Vector& u, Vector* weights,
                                Vector* mean_out) const {
  const Eigen::Index n = ctx.means.rows();
  Eigen::ArrayXd logits = Eigen::ArrayXd::Zero(n);
  for (Eigen::Index k = 0; k < ctx.means.cols(); ++k)
    logits += (ctx.means.col(k).array() - u[k]).square();
  logits = logits * (-0.5 / ctx.c) + log_ratios_.array() + ctx.log_norm;

  const double peak = logits.maxCoeff();
  const double log_n = std::log(static_cast<double>(n));
  if (peak == kNegInf) {
    if (weights) *weights = Vector::Zero(n);
    if (mean_out) *mean_out = Vector::Zero(u.size());
    return kNegInf;
  }
  // terms below e^-700 are dropped so no subnormals reach the arithmetic
  const Eigen::ArrayXd gap = (logits - peak).max(-700.0);
  const Eigen::ArrayXd shifted = (gap > -700.0).select(gap.exp(), 0.0);
  const double total = shifted.sum();
  const double lse = peak + std::log(total);
  if (mean_out) *mean_out = ctx.means.transpose() * (shifted / total).matrix();
  if (weights) *weights = (shifted / total).matrix();
  return lse - log_n;
}

Vector ScoreEstimator::score_from(const TimeContext& ctx, const Vector& u) const {
  Vector mean;
  evaluate(ctx, u, nullptr, &mean);
  Vector s = (mean - u) / ctx.c;
  if (spec_.kind() != ForwardKind::ZeroDrift)
    spec_.scale_matrix().transpose().triangularView<Eigen::Upper>().solveInPlace(s);
  return s;
}

double ScoreEstimator::log_p_hat(double t, const Eigen::Ref<const Vector>& x) const {
  const TimeContext ctx = context(t);
  return evaluate(ctx, whiten(x), nullptr, nullptr);
}

Vector ScoreEstimator::score(double t, const Eigen::Ref<const Vector>& x) const {
  const TimeContext ctx = context(t);
  return score_from(ctx, whiten(x));
}

Vector ScoreEstimator::score(const TimeContext& ctx, const Eigen::Ref<const Vector>& x) const {
  return score_from(ctx, whiten(x));
}

Vector ScoreEstimator::weights(double t, const Eigen::Ref<const Vector>& x) const {
  const TimeContext ctx = context(t);
  Vector w;
  evaluate(ctx, whiten(x), &w, nullptr);
  return w;
}

SampleSet ScoreEstimator::score_batch(double t, const SampleSet& xs, int threads) const {
  require(xs.cols() == spec_.dim(), "batch dimension must match the estimator");
  const TimeContext ctx = context(t);
  SampleSet out(xs.rows(), xs.cols());
  parallel_for(static_cast<std::size_t>(xs.rows()), threads, [&](std::size_t i) {
    const auto row = static_cast<Eigen::Index>(i);
    out.row(row) = score_from(ctx, whiten(xs.row(row).transpose())).transpose();
  });
  return out;
}

ScoreEstimator freeze_estimator(const TargetDensity& target, const ImportanceDistribution& p_is,
                                const ForwardSpec& spec, const SampleSet& ensemble, NodeMode mode,
                                bool antithetic, std::uint64_t seed, int threads) {
  require(target.dim == spec.dim() && p_is.dim() == spec.dim() && ensemble.cols() == spec.dim(),
          "target, proposal, ensemble and forward spec dimensions must agree");
  SampleSet base;
  if (mode == NodeMode::ReuseEnsemble) {
    base = ensemble;
  } else {
    Rng rng = derive_stream(seed, stream_domain::kNodeDraw);
    base = p_is.sample(rng, ensemble.rows());
  }

  const Eigen::Index n = base.rows();
  SampleSet nodes(antithetic ? 2 * n : n, base.cols());
  nodes.topRows(n) = base;
  if (antithetic) nodes.bottomRows(n) = -base;

  Vector log_ratios(nodes.rows());
  parallel_for(static_cast<std::size_t>(nodes.rows()), target.concurrency_safe ? threads : 1,
               [&](std::size_t i) {
                 const auto r = static_cast<Eigen::Index>(i);
                 const Vector x = nodes.row(r).transpose();
                 const double lr = target.log_density(x) - p_is.log_density(x);
                 log_ratios[r] = std::isnan(lr) ? kNegInf : lr;
               });

  if ((log_ratios.array() == kNegInf).all())
    throw EstimatorDegenerate("target density vanishes at every importance-sampling node");

  const auto evaluations = static_cast<std::size_t>(log_ratios.size());
  return ScoreEstimator(spec, std::move(nodes), std::move(log_ratios), antithetic, evaluations);
}

ScoreEstimator build_mis(const SampleSet& ensemble, double t, const ForwardSpec& spec,
                         const TargetDensity& target, bool antithetic, std::uint64_t seed, int threads) {
  const ImportanceDistribution p_is = ImportanceDistribution::mixture(spec, ensemble, t);
  return freeze_estimator(target, p_is, spec, ensemble, NodeMode::DrawFresh, antithetic, seed, threads);
}

}  // namespace enscore
