#include "enscore/diffusion.hpp"

#include "enscore/rng.hpp"

#include <Eigen/Cholesky>

#include <cmath>
#include <stdexcept>

namespace enscore {

NoiseSchedule::NoiseSchedule(double sigma_min, double sigma_max, double p)
    : sigma_min_(sigma_min), sigma_max_(sigma_max), p_(p) {
  if (!(p > 0.0)) throw ContractViolation("noise schedule exponent p must be positive");
  if (!(sigma_min >= 0.0) || !(sigma_max >= sigma_min))
    throw ContractViolation("noise schedule requires 0 <= sigma_min <= sigma_max");
  base_ = std::pow(sigma_min, 1.0 / p);
  slope_ = std::pow(sigma_max, 1.0 / p) - base_;
}

double NoiseSchedule::operator()(double t) const {
  if (t == 0.0) return sigma_min_;
  if (t == 1.0) return sigma_max_;
  return std::pow(base_ + t * slope_, p_);
}

double NoiseSchedule::integrated_variance(double t) const {
  const double q = 2.0 * p_ + 1.0;
  if (slope_ == 0.0) return std::pow(base_, 2.0 * p_) * t;
  if (base_ == 0.0) return std::pow(slope_ * t, q) / (slope_ * q);
  // ((a + b t)^q - a^q) / (b q), written to stay accurate when b t << a
  return std::pow(base_, q) * std::expm1(q * std::log1p(slope_ * t / base_)) / (slope_ * q);
}

ForwardSpec ForwardSpec::zero_drift(Eigen::Index dim, const NoiseSchedule& schedule) {
  require(dim >= 1, "dimension must be positive");
  ForwardSpec spec;
  spec.kind_ = ForwardKind::ZeroDrift;
  spec.mu_ = Vector::Zero(dim);
  spec.schedule_ = schedule;
  spec.scale_ = Matrix::Identity(dim, dim);
  spec.log_det_scale_ = 0.0;
  return spec;
}

ForwardSpec ForwardSpec::ornstein_uhlenbeck(double theta, const Vector& mu, const Matrix& prior_cov,
                                            double alpha) {
  require(alpha > 0.0, "alpha must be positive");
  require(prior_cov.rows() == prior_cov.cols() && prior_cov.rows() == mu.size(),
          "prior covariance must be square and match mu");
  Eigen::LLT<Matrix> llt(alpha * prior_cov);
  if (llt.info() != Eigen::Success)
    throw ContractViolation("alpha * prior covariance is not positive definite");
  ForwardSpec spec = ornstein_uhlenbeck_with_scale(theta, mu, llt.matrixL());
  spec.alpha_ = alpha;
  return spec;
}

ForwardSpec ForwardSpec::ornstein_uhlenbeck_with_scale(double theta, const Vector& mu,
                                                       const Matrix& scale_matrix) {
  require(theta > 0.0, "OU reversion rate theta must be positive");
  require(scale_matrix.rows() == scale_matrix.cols() && scale_matrix.rows() == mu.size(),
          "scale matrix must be square and match mu");
  for (Eigen::Index i = 0; i < scale_matrix.rows(); ++i) {
    require(scale_matrix(i, i) > 0.0, "scale matrix must have a strictly positive diagonal");
    for (Eigen::Index j = i + 1; j < scale_matrix.cols(); ++j)
      require(scale_matrix(i, j) == 0.0, "scale matrix must be lower-triangular");
  }
  ForwardSpec spec;
  spec.kind_ = ForwardKind::OrnsteinUhlenbeck;
  spec.theta_ = theta;
  spec.mu_ = mu;
  spec.scale_ = scale_matrix;
  spec.log_det_scale_ = scale_matrix.diagonal().array().log().sum();
  return spec;
}

double ForwardSpec::shrink(double t) const {
  return kind_ == ForwardKind::ZeroDrift ? 1.0 : std::exp(-theta_ * t);
}

double ForwardSpec::variance_scale(double t) const {
  if (kind_ == ForwardKind::ZeroDrift) return schedule_->integrated_variance(t);
  return -std::expm1(-2.0 * theta_ * t) / (2.0 * theta_);
}

Matrix ForwardSpec::diffusion_matrix(double t) const {
  if (kind_ == ForwardKind::ZeroDrift) return (*schedule_)(t)*Matrix::Identity(dim(), dim());
  return scale_;
}

Matrix ForwardSpec::diffusion_gram(double t) const {
  if (kind_ == ForwardKind::ZeroDrift) {
    const double g = (*schedule_)(t);
    return g * g * Matrix::Identity(dim(), dim());
  }
  return scale_ * scale_.transpose();
}

Vector ForwardSpec::kernel_mean(double t, const Eigen::Ref<const Vector>& x_prime) const {
  const double a = shrink(t);
  return a * x_prime + (1.0 - a) * mu_;
}

void check_time(double t) {
  if (!(t >= 0.0 && t <= 1.0)) throw std::domain_error("diffusion time must lie in [0, 1]");
}

KernelMoments kernel_moments(const ForwardSpec& spec, double t) {
  check_time(t);
  const auto d = spec.dim();
  const double a = spec.shrink(t);
  const double c = spec.variance_scale(t);
  KernelMoments m;
  m.mean_shrink = a * Matrix::Identity(d, d);
  m.mean_offset = (1.0 - a) * spec.mu();
  m.cov = c * spec.scale_matrix() * spec.scale_matrix().transpose();
  if (c > 0.0) m.cov_chol = std::sqrt(c) * spec.scale_matrix();
  return m;
}

namespace {

void check_drift_args(const ForwardSpec& spec, const Eigen::Ref<const Vector>& x,
                      const Eigen::Ref<const Vector>& s_hat) {
  require(x.size() == spec.dim() && s_hat.size() == spec.dim(),
          "state and score dimensions must match the forward spec");
}

Vector mean_reversion(const ForwardSpec& spec, const Eigen::Ref<const Vector>& x) {
  if (spec.kind() == ForwardKind::ZeroDrift) return Vector::Zero(x.size());
  return spec.theta() * (x - spec.mu());
}

Vector gram_times(const ForwardSpec& spec, double t, const Eigen::Ref<const Vector>& s) {
  if (spec.kind() == ForwardKind::ZeroDrift) {
    const double g = (*spec.schedule())(t);
    return g * g * s;
  }
  const auto& scale = spec.scale_matrix();
  return scale.triangularView<Eigen::Lower>() * (scale.transpose().triangularView<Eigen::Upper>() * s);
}

}  // namespace

Vector reverse_drift(const ForwardSpec& spec, double t, const Eigen::Ref<const Vector>& x,
                     const Eigen::Ref<const Vector>& s_hat) {
  check_drift_args(spec, x, s_hat);
  return -(mean_reversion(spec, x) + gram_times(spec, t, s_hat));
}

Vector probability_flow_drift(const ForwardSpec& spec, double t, const Eigen::Ref<const Vector>& x,
                              const Eigen::Ref<const Vector>& s_hat) {
  check_drift_args(spec, x, s_hat);
  return -(mean_reversion(spec, x) + 0.5 * gram_times(spec, t, s_hat));
}

std::vector<SampleSet> forward_simulate(const ForwardSpec& spec, const SampleSet& x0, int n_steps,
                                        std::uint64_t seed) {
  require(n_steps >= 1, "forward_simulate needs at least one step");
  require(x0.cols() == spec.dim(), "initial ensemble dimension must match the forward spec");
  const double h = 1.0 / n_steps;
  const double sqrt_h = std::sqrt(h);
  const auto d = spec.dim();

  std::vector<SampleSet> snapshots(static_cast<std::size_t>(n_steps) + 1, SampleSet(x0.rows(), d));
  snapshots[0] = x0;
  for (Eigen::Index i = 0; i < x0.rows(); ++i) {
    Rng rng = derive_stream(seed, stream_domain::kForwardSim, static_cast<std::uint64_t>(i));
    Vector x = x0.row(i).transpose();
    for (int k = 0; k < n_steps; ++k) {
      const double t = k * h;
      const Vector xi = standard_normal(rng, d);
      x += -mean_reversion(spec, x) * h + spec.diffusion_matrix(t) * xi * sqrt_h;
      snapshots[static_cast<std::size_t>(k) + 1].row(i) = x.transpose();
    }
  }
  return snapshots;
}

}  // namespace enscore
