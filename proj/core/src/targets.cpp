#include "enscore/targets.hpp"

#include <Eigen/Cholesky>
#include <Eigen/QR>
#include <json.hpp>

#include <cmath>
#include <numbers>
#include <random>
#include <span>
#include <algorithm>
#include <limits>

namespace enscore {

namespace {

constexpr double kLog2Pi = 1.8378770664093454835606594728112;

double log_sum_exp(std::span<const double> values) {
  double m = -std::numeric_limits<double>::infinity();
  for (double v : values) m = std::max(m, v);
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (double v : values) s += std::exp(v - m);
  return m + std::log(s);
}

}  // namespace

double gaussian_log_density(const Eigen::Ref<const Vector>& x, const Vector& mean, const Matrix& chol) {
  const Vector z = chol.triangularView<Eigen::Lower>().solve(x - mean);
  return -0.5 * z.squaredNorm() - chol.diagonal().array().log().sum() -
         0.5 * static_cast<double>(x.size()) * kLog2Pi;
}

TargetDensity make_banana(double c, double s) {
  TargetDensity t;
  t.name = "banana";
  t.dim = 2;
  t.log_density = [c, s](const Eigen::Ref<const Vector>& x) {
    const double r = x[1] - x[0] * x[0] - c;
    return -0.5 * x[0] * x[0] - r * r / (2.0 * s * s);
  };
  t.grad_log_density = [c, s](const Eigen::Ref<const Vector>& x) {
    const double r = x[1] - x[0] * x[0] - c;
    Vector g(2);
    g[0] = -x[0] + 2.0 * x[0] * r / (s * s);
    g[1] = -r / (s * s);
    return g;
  };
  t.reference_sampler = [c, s](std::uint64_t seed, Eigen::Index n) {
    Rng rng = derive_stream(seed, stream_domain::kReference);
    std::normal_distribution<double> normal;
    SampleSet out(n, 2);
    for (Eigen::Index i = 0; i < n; ++i) {
      const double x1 = normal(rng);
      out(i, 0) = x1;
      out(i, 1) = x1 * x1 + c + s * normal(rng);
    }
    return out;
  };
  return t;
}

SampleSet sample_ridged(double a, double k, Rng& rng, Eigen::Index n, std::size_t* proposals) {
  std::normal_distribution<double> envelope(0.0, 2.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  SampleSet out(n, 2);
  std::size_t tries = 0;
  for (Eigen::Index i = 0; i < n;) {
    const double x1 = envelope(rng);
    const double x2 = envelope(rng);
    ++tries;
    const double sn = std::sin(k * x1);
    if (unit(rng) < std::exp(-a * sn * sn)) {
      out(i, 0) = x1;
      out(i, 1) = x2;
      ++i;
    }
  }
  if (proposals) *proposals = tries;
  return out;
}

TargetDensity make_ridged(double a, double k) {
  TargetDensity t;
  t.name = "ridged";
  t.dim = 2;
  t.log_density = [a, k](const Eigen::Ref<const Vector>& x) {
    const double sn = std::sin(k * x[0]);
    return -(x[0] * x[0] + x[1] * x[1]) / 8.0 - a * sn * sn;
  };
  t.grad_log_density = [a, k](const Eigen::Ref<const Vector>& x) {
    Vector g(2);
    g[0] = -x[0] / 4.0 - a * k * std::sin(2.0 * k * x[0]);
    g[1] = -x[1] / 4.0;
    return g;
  };
  t.reference_sampler = [a, k](std::uint64_t seed, Eigen::Index n) {
    Rng rng = derive_stream(seed, stream_domain::kReference);
    return sample_ridged(a, k, rng, n);
  };
  return t;
}

TargetDensity make_mixture3() {
  static const double kMeans[3][2] = {{-2.5, -1.5}, {2.5, -1.5}, {0.0, 2.5}};
  constexpr double kStd = 0.3;
  constexpr double kVar = kStd * kStd;

  auto log_components = [](const Eigen::Ref<const Vector>& x, double out[3]) {
    for (int c = 0; c < 3; ++c) {
      const double d0 = x[0] - kMeans[c][0];
      const double d1 = x[1] - kMeans[c][1];
      out[c] = -(d0 * d0 + d1 * d1) / (2.0 * kVar) - std::log(2.0 * std::numbers::pi * kVar) -
               std::log(3.0);
    }
  };

  TargetDensity t;
  t.name = "mixture3";
  t.dim = 2;
  t.log_density = [log_components](const Eigen::Ref<const Vector>& x) {
    double lc[3];
    log_components(x, lc);
    return log_sum_exp(lc);
  };
  t.grad_log_density = [log_components](const Eigen::Ref<const Vector>& x) {
    double lc[3];
    log_components(x, lc);
    const double lse = log_sum_exp(lc);
    Vector g = Vector::Zero(2);
    for (int c = 0; c < 3; ++c) {
      const double r = std::exp(lc[c] - lse);
      g[0] += r * (kMeans[c][0] - x[0]) / kVar;
      g[1] += r * (kMeans[c][1] - x[1]) / kVar;
    }
    return g;
  };
  t.reference_sampler = [](std::uint64_t seed, Eigen::Index n) {
    Rng rng = derive_stream(seed, stream_domain::kReference);
    std::uniform_int_distribution<int> pick(0, 2);
    std::normal_distribution<double> normal;
    SampleSet out(n, 2);
    for (Eigen::Index i = 0; i < n; ++i) {
      const int c = pick(rng);
      out(i, 0) = kMeans[c][0] + kStd * normal(rng);
      out(i, 1) = kMeans[c][1] + kStd * normal(rng);
    }
    return out;
  };
  return t;
}

TargetDensity make_gaussian(const Vector& mean, const Matrix& cov) {
  require(cov.rows() == cov.cols() && cov.rows() == mean.size(),
          "gaussian covariance must be square and match the mean");
  Eigen::LLT<Matrix> llt(cov);
  if (llt.info() != Eigen::Success || !cov.isApprox(cov.transpose()))
    throw ContractViolation("gaussian covariance must be symmetric positive definite");
  const Matrix chol = llt.matrixL();
  const Matrix precision = llt.solve(Matrix::Identity(cov.rows(), cov.cols()));

  TargetDensity t;
  t.name = "gaussian";
  t.dim = mean.size();
  t.log_density = [mean, chol](const Eigen::Ref<const Vector>& x) {
    return gaussian_log_density(x, mean, chol);
  };
  t.grad_log_density = [mean, precision](const Eigen::Ref<const Vector>& x) -> Vector {
    return precision * (mean - x);
  };
  t.reference_sampler = [mean, chol](std::uint64_t seed, Eigen::Index n) {
    Rng rng = derive_stream(seed, stream_domain::kReference);
    SampleSet out(n, mean.size());
    for (Eigen::Index i = 0; i < n; ++i)
      out.row(i) = (mean + chol * standard_normal(rng, mean.size())).transpose();
    return out;
  };
  t.analytic = GaussianReference{mean, cov};
  return t;
}

Matrix ar1_covariance(Eigen::Index dim, double rho) {
  Matrix cov(dim, dim);
  for (Eigen::Index i = 0; i < dim; ++i)
    for (Eigen::Index j = 0; j < dim; ++j)
      cov(i, j) = std::pow(rho, static_cast<double>(std::abs(i - j)));
  return cov;
}

Vector bspline_values(const Vector& knots, int degree, int n_splines, double x) {
  const double lo = knots[degree];
  const double hi = knots[n_splines];
  Vector out = Vector::Zero(n_splines);
  if (x < lo || x > hi) return out;

  // knot span with knots[span] <= x < knots[span + 1]; the right end folds
  // into the last non-empty span
  int span = degree;
  while (span < n_splines - 1 && x >= knots[span + 1]) ++span;

  // de Boor triangle: N[j] holds N_{span-degree+j, q}(x)
  Vector N = Vector::Zero(degree + 1);
  N[degree] = 1.0;
  for (int q = 1; q <= degree; ++q) {
    for (int j = degree - q; j <= degree; ++j) {
      const int i = span - degree + j;
      double value = 0.0;
      const double left_den = knots[i + q] - knots[i];
      if (left_den > 0.0) value += (x - knots[i]) / left_den * N[j];
      if (j < degree) {
        const double right_den = knots[i + q + 1] - knots[i + 1];
        if (right_den > 0.0) value += (knots[i + q + 1] - x) / right_den * N[j + 1];
      }
      N[j] = value;
    }
  }
  for (int j = 0; j <= degree; ++j) out[span - degree + j] = N[j];
  return out;
}

SplineBasis make_spline_basis(int n_splines, int n_points, double lo, double hi, int degree) {
  require(n_splines > degree, "need more splines than the spline degree");
  require(n_points >= 2 && hi > lo, "invalid spline sampling grid");
  SplineBasis basis;
  basis.n_splines = n_splines;
  basis.degree = degree;
  basis.lo = lo;
  basis.hi = hi;

  const int n_knots = n_splines + degree + 1;
  const int n_intervals = n_splines - degree;
  basis.knots.resize(n_knots);
  for (int i = 0; i < n_knots; ++i) {
    const int j = std::clamp(i - degree, 0, n_intervals);
    basis.knots[i] = lo + (hi - lo) * j / n_intervals;
  }
  basis.centers.resize(n_splines);
  for (int i = 0; i < n_splines; ++i)
    basis.centers[i] = basis.knots.segment(i + 1, degree).mean();

  basis.sample_points = Vector::LinSpaced(n_points, lo, hi);
  basis.design_matrix.resize(n_points, n_splines);
  for (int r = 0; r < n_points; ++r)
    basis.design_matrix.row(r) =
        bspline_values(basis.knots, degree, n_splines, basis.sample_points[r]).transpose();
  return basis;
}

Matrix squared_exponential_cov(const Vector& centers, double length_scale, double jitter) {
  const auto n = centers.size();
  Matrix k(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) {
      const double dist = centers[i] - centers[j];
      k(i, j) = std::exp(-dist * dist / (2.0 * length_scale * length_scale));
    }
  k.diagonal().array() += jitter;
  return k;
}

RegressionPosterior regression_posterior(const Matrix& G, const Vector& d, double sigma_d,
                                         const Matrix& sigma_prior) {
  require(G.rows() == d.size(), "data length must match the design matrix");
  require(sigma_prior.rows() == G.cols() && sigma_prior.cols() == G.cols(),
          "prior covariance must match the coefficient dimension");
  const auto n = G.cols();
  const double s2 = sigma_d * sigma_d;
  Eigen::LLT<Matrix> prior(sigma_prior);
  if (prior.info() != Eigen::Success) throw ContractViolation("prior covariance is not SPD");
  const Matrix prior_inv = prior.solve(Matrix::Identity(n, n));

  Matrix normal = G.transpose() * G + s2 * prior_inv;
  normal = 0.5 * (normal + normal.transpose());
  Eigen::LLT<Matrix> llt(normal);
  if (llt.info() != Eigen::Success) throw ContractViolation("regression normal matrix is not SPD");

  RegressionPosterior post;
  post.G = G;
  post.d = d;
  post.sigma_d = sigma_d;
  post.sigma_prior = sigma_prior;
  post.x_hat = llt.solve(G.transpose() * d);
  post.sigma_hat = s2 * llt.solve(Matrix::Identity(n, n));
  post.sigma_hat = 0.5 * (post.sigma_hat + post.sigma_hat.transpose());
  return post;
}

std::pair<TargetDensity, RegressionPosterior> make_spline_regression(
    const SplineRegressionOptions& options, std::uint64_t seed, const std::string& name) {
  const SplineBasis basis = make_spline_basis(options.n_splines, options.n_points);
  const Matrix& G = basis.design_matrix;
  const Matrix prior = squared_exponential_cov(basis.centers, options.length_scale, options.prior_jitter);

  Rng rng = derive_stream(seed, stream_domain::kTargetData);
  const Vector x_true = standard_normal(rng, options.n_splines);
  const Vector white = standard_normal(rng, options.n_points);

  // white noise smoothed by a Gaussian filter, then rescaled to std sigma_d
  const Vector& s = basis.sample_points;
  Vector noise = Vector::Zero(options.n_points);
  for (int i = 0; i < options.n_points; ++i)
    for (int j = 0; j < options.n_points; ++j) {
      const double dist = s[i] - s[j];
      noise[i] += std::exp(-dist * dist / (2.0 * options.noise_length * options.noise_length)) * white[j];
    }
  const double centered_sd =
      std::sqrt((noise.array() - noise.mean()).square().sum() / static_cast<double>(noise.size()));
  noise *= options.sigma_d / centered_sd;

  const Vector d = G * x_true + noise;
  RegressionPosterior post = regression_posterior(G, d, options.sigma_d, prior);
  post.x_true = x_true;

  TargetDensity t = make_gaussian(post.x_hat, post.sigma_hat);
  t.name = name;
  t.prior_cov = prior;
  return {std::move(t), std::move(post)};
}

std::pair<TargetDensity, RegressionPosterior> make_blr20(std::uint64_t seed) {
  return make_spline_regression(SplineRegressionOptions{}, seed, "blr20");
}

std::string regression_posterior_json(const RegressionPosterior& posterior) {
  auto vec = [](const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); };
  auto mat = [&](const Matrix& m) {
    nlohmann::json rows = nlohmann::json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) rows.push_back(vec(m.row(i).transpose()));
    return rows;
  };
  nlohmann::json j;
  j["sigma_d"] = posterior.sigma_d;
  j["x_hat"] = vec(posterior.x_hat);
  j["sigma_hat"] = mat(posterior.sigma_hat);
  j["G"] = mat(posterior.G);
  j["d"] = vec(posterior.d);
  return j.dump();
}

}  // namespace enscore
