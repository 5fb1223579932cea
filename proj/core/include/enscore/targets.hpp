#pragma once

#include "enscore/rng.hpp"
#include "enscore/types.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <utility>

namespace enscore {

/// Exact Gaussian description of a target, when one is known.
struct GaussianReference {
  Vector mean;
  Matrix cov;
};

/// Unnormalized log-density of the distribution to sample, plus whatever
/// side information a particular target can offer.
struct TargetDensity {
  using LogDensity = std::function<double(const Eigen::Ref<const Vector>&)>;
  using Gradient = std::function<Vector(const Eigen::Ref<const Vector>&)>;
  using Sampler = std::function<SampleSet(std::uint64_t seed, Eigen::Index n)>;

  std::string name;
  Eigen::Index dim = 0;
  LogDensity log_density;
  Gradient grad_log_density;    // empty when unavailable; baselines only
  Sampler reference_sampler;    // empty when direct sampling is unavailable
  std::optional<GaussianReference> analytic;
  std::optional<Matrix> prior_cov;  // feeds OU localization when present
  bool concurrency_safe = true;

  bool has_gradient() const { return static_cast<bool>(grad_log_density); }
  bool has_reference_sampler() const { return static_cast<bool>(reference_sampler); }
};

TargetDensity make_banana(double c = 1.0, double s = 0.5);
TargetDensity make_ridged(double a = 3.0, double k = 3.0);
TargetDensity make_mixture3();

/// Throws ContractViolation when cov is not SPD.
TargetDensity make_gaussian(const Vector& mean, const Matrix& cov);

/// Unit-diagonal covariance with entries rho^{|i-j|}.
Matrix ar1_covariance(Eigen::Index dim, double rho);

/// Ridged rejection sampler; `proposals` receives the number of envelope draws.
SampleSet sample_ridged(double a, double k, Rng& rng, Eigen::Index n, std::size_t* proposals = nullptr);

/// Uniform clamped B-spline basis evaluated on a uniform grid.
struct SplineBasis {
  int n_splines = 0;
  int degree = 3;
  double lo = -1.0;
  double hi = 1.0;
  Vector knots;
  Vector centers;          // Greville abscissae
  Vector sample_points;
  Matrix design_matrix;    // sample_points.size() x n_splines
};

SplineBasis make_spline_basis(int n_splines, int n_points, double lo = -1.0, double hi = 1.0,
                              int degree = 3);

/// Values of all basis functions at x.
Vector bspline_values(const Vector& knots, int degree, int n_splines, double x);

/// exp(-|c_i - c_j|^2 / (2 L^2)) + jitter * I
Matrix squared_exponential_cov(const Vector& centers, double length_scale, double jitter);

struct RegressionPosterior {
  Matrix G;
  Vector d;
  double sigma_d = 0.0;
  Matrix sigma_prior;
  Vector x_true;
  Vector x_hat;
  Matrix sigma_hat;
};

/// x_hat = (G^T G + s^2 P^{-1})^{-1} G^T d, Sigma_hat = s^2 (G^T G + s^2 P^{-1})^{-1}
RegressionPosterior regression_posterior(const Matrix& G, const Vector& d, double sigma_d,
                                         const Matrix& sigma_prior);

struct SplineRegressionOptions {
  int n_splines = 20;
  int n_points = 500;
  double length_scale = 0.5;
  double sigma_d = 2.0;
  double noise_length = 0.05;
  double prior_jitter = 1e-4;
};

/// Synthetic spline regression: x* ~ N(0, I), d = G x* + smoothed noise.
/// The returned target is the exact Gaussian posterior over coefficients.
std::pair<TargetDensity, RegressionPosterior> make_spline_regression(
    const SplineRegressionOptions& options, std::uint64_t seed, const std::string& name);

std::pair<TargetDensity, RegressionPosterior> make_blr20(std::uint64_t seed);

/// JSON object with x_hat, sigma_hat, G and d.
std::string regression_posterior_json(const RegressionPosterior& posterior);

/// log N(x; mean, L L^T) for a lower Cholesky factor L.
double gaussian_log_density(const Eigen::Ref<const Vector>& x, const Vector& mean, const Matrix& chol);

}  // namespace enscore
