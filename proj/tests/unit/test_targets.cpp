#include "doctest.h"
#include "test_util.hpp"

#include "enscore/targets.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/QR>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <json.hpp>

#include <cmath>
#include <numbers>
#include <random>

using namespace enscore;
using enscore::testing::rel_frobenius;
using enscore::testing::sample_cov;

namespace {

// Cox-de Boor recursion, straight from the definition
double cox_de_boor(const Vector& knots, int i, int q, double x, bool last_span) {
  if (q == 0) {
    if (knots[i] <= x && x < knots[i + 1]) return 1.0;
    return last_span && x == knots[i + 1] && knots[i] < knots[i + 1] ? 1.0 : 0.0;
  }
  double v = 0.0;
  const double l = knots[i + q] - knots[i];
  const double r = knots[i + q + 1] - knots[i + 1];
  if (l > 0.0) v += (x - knots[i]) / l * cox_de_boor(knots, i, q - 1, x, last_span);
  if (r > 0.0) v += (knots[i + q + 1] - x) / r * cox_de_boor(knots, i + 1, q - 1, x, last_span);
  return v;
}

void check_gradient(const TargetDensity& t, std::uint64_t seed, double spread) {
  REQUIRE(t.has_gradient());
  Rng rng(seed);
  for (int k = 0; k < 50; ++k) {
    const Vector x = spread * standard_normal(rng, t.dim);
    const Vector g = t.grad_log_density(x);
    Vector fd(t.dim);
    for (Eigen::Index j = 0; j < t.dim; ++j) {
      const double h = 1e-6 * std::max(1.0, std::abs(x[j]));
      Vector xp = x, xm = x;
      xp[j] += h;
      xm[j] -= h;
      fd[j] = (t.log_density(xp) - t.log_density(xm)) / (2.0 * h);
    }
    CHECK((g - fd).norm() <= 1e-5 * std::max(1.0, g.norm()));
  }
}

void check_mean_rate(const TargetDensity& t, const Vector& mean, const Vector& sd) {
  for (Eigen::Index n : {1000, 100000}) {
    const SampleSet s = t.reference_sampler(21, n);
    const Vector m = s.colwise().mean().transpose();
    for (Eigen::Index j = 0; j < t.dim; ++j)
      CHECK(std::abs(m[j] - mean[j]) < 4.0 * sd[j] / std::sqrt(static_cast<double>(n)));
  }
  CHECK(enscore::testing::bit_equal(t.reference_sampler(3, 100), t.reference_sampler(3, 100)));
  CHECK_FALSE(enscore::testing::bit_equal(t.reference_sampler(3, 100), t.reference_sampler(4, 100)));
}

Vector v2(double a, double b) { return (Vector(2) << a, b).finished(); }

}  // namespace

TEST_CASE("banana") {
  const auto t = make_banana();
  CHECK(t.dim == 2);
  CHECK(t.log_density(v2(0.0, 1.0)) - t.log_density(v2(0.0, 1.5)) == doctest::Approx(0.5).epsilon(1e-14));
  for (double x1 : {-1.3, 0.0, 0.7, 2.0}) {
    const double ridge = x1 * x1 + 1.0;
    CHECK(t.grad_log_density(v2(x1, ridge))[1] == doctest::Approx(0.0));
    CHECK(t.log_density(v2(x1, ridge)) > t.log_density(v2(x1, ridge + 1e-3)));
    CHECK(t.log_density(v2(x1, ridge)) > t.log_density(v2(x1, ridge - 1e-3)));
  }
  const SampleSet s = t.reference_sampler(1, 100000);
  CHECK(std::abs(s.col(0).mean()) < 3.0 / std::sqrt(1e5));
  CHECK(std::abs(s.col(1).mean() - 2.0) < 3.0 * 1.5 / std::sqrt(1e5));
  check_gradient(t, 1, 1.5);
  check_mean_rate(t, v2(0.0, 2.0), v2(1.0, 1.5));
}

TEST_CASE("ridged") {
  const double a = 3.0, k = 3.0;
  const auto t = make_ridged(a, k);
  for (int j = -3; j <= 3; ++j) {
    const double x1 = j * std::numbers::pi / k;
    CHECK(t.log_density(v2(x1, 0.4)) == doctest::Approx(-(x1 * x1 + 0.16) / 8.0).epsilon(1e-12));
    const double mid = x1 + 0.5 * std::numbers::pi / k;
    CHECK(t.log_density(v2(mid, 0.4)) == doctest::Approx(-(mid * mid + 0.16) / 8.0 - a).epsilon(1e-12));
  }
  Rng rng(4);
  for (int i = 0; i < 1000; ++i) {
    const Vector x = 3.0 * standard_normal(rng, 2);
    CHECK(t.log_density(x) <= -x.squaredNorm() / 8.0);
  }

  auto integrand = [&](double x) {
    const double sn = std::sin(k * x);
    return std::exp(-a * sn * sn) * std::exp(-x * x / 8.0) / (2.0 * std::sqrt(2.0 * std::numbers::pi));
  };
  const double rate = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(integrand, -40.0, 40.0, 20, 1e-13);
  std::size_t proposals = 0;
  Rng sampler_rng(8);
  sample_ridged(a, k, sampler_rng, 100000, &proposals);
  CHECK(100000.0 / proposals == doctest::Approx(rate).epsilon(0.01));

  check_gradient(t, 2, 2.0);
  // the N(0, 4 I) envelope bounds the marginal spread
  check_mean_rate(t, Vector::Zero(2), v2(2.0, 2.0));
}

TEST_CASE("mixture3") {
  const auto t = make_mixture3();
  const Vector m1 = v2(-2.5, -1.5), m2 = v2(2.5, -1.5), m3 = v2(0.0, 2.5);
  CHECK(std::abs(t.log_density(m1) - t.log_density(m2)) < 1e-9);
  CHECK(std::abs(t.log_density(m1) - t.log_density(m3)) < 1e-9);
  CHECK(t.grad_log_density(m1).norm() < 1e-9);

  const SampleSet s = t.reference_sampler(5, 30000);
  int counts[3] = {0, 0, 0};
  for (Eigen::Index i = 0; i < s.rows(); ++i) {
    const Vector x = s.row(i).transpose();
    const double d[3] = {(x - m1).norm(), (x - m2).norm(), (x - m3).norm()};
    counts[std::min_element(d, d + 3) - d]++;
  }
  const double se = std::sqrt(30000.0 * (1.0 / 3.0) * (2.0 / 3.0));
  for (int c : counts) CHECK(std::abs(c - 10000.0) < 3.0 * se);

  check_gradient(t, 3, 2.0);
  // component means average to (0, -1/6); spread is dominated by the mode separation
  check_mean_rate(t, v2(0.0, -1.0 / 6.0), v2(2.1, 1.9));
}

TEST_CASE("gaussian") {
  Matrix diag = Vector::LinSpaced(3, 0.5, 2.0).asDiagonal();
  const Vector mean = (Vector(3) << 1.0, -1.0, 0.5).finished();
  const auto t = make_gaussian(mean, diag);
  CHECK(t.grad_log_density(mean).norm() == 0.0);
  Vector shifted = mean;
  shifted[0] += std::sqrt(diag(0, 0));
  CHECK(t.log_density(mean) - t.log_density(shifted) == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(t.analytic.has_value());

  const Matrix ar1 = ar1_covariance(5, 0.5);
  CHECK(ar1(0, 3) == doctest::Approx(0.125));
  const auto five = make_gaussian(Vector::Zero(5), ar1);
  CHECK(rel_frobenius(sample_cov(five.reference_sampler(2, 100000)), ar1) < 0.03);
  check_gradient(five, 4, 1.0);
  check_mean_rate(five, Vector::Zero(5), Vector::Ones(5));

  Matrix bad(2, 2);
  bad << 1.0, 2.0, 2.0, 1.0;
  CHECK_THROWS_AS(make_gaussian(Vector::Zero(2), bad), ContractViolation);
  CHECK_THROWS_AS(make_gaussian(Vector::Zero(3), Matrix::Identity(2, 2)), ContractViolation);
}

TEST_CASE("cubic B-spline basis") {
  const auto basis = make_spline_basis(20, 500);
  const Matrix& G = basis.design_matrix;
  CHECK(G.rows() == 500);
  CHECK(G.cols() == 20);
  CHECK(G.minCoeff() >= 0.0);
  for (Eigen::Index r = 0; r < G.rows(); ++r) CHECK(G.row(r).sum() == doctest::Approx(1.0).epsilon(1e-12));
  for (Eigen::Index c = 0; c < G.cols(); ++c) {
    CHECK(G.col(c).maxCoeff() > 0.0);
    // support of a cubic spline spans at most four knot intervals
    const double width = 2.0 / 17.0 * 4.0;
    int nonzero = 0;
    for (Eigen::Index r = 0; r < G.rows(); ++r) nonzero += G(r, c) > 0.0;
    CHECK(nonzero <= static_cast<int>(width / (2.0 / 499.0)) + 2);
  }
  CHECK(basis.centers[0] == doctest::Approx(-1.0));
  CHECK(basis.centers[19] == doctest::Approx(1.0));

  Rng rng(1);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int k = 0; k < 200; ++k) {
    const double x = k == 0 ? 1.0 : (k == 1 ? -1.0 : u(rng));
    const Vector v = bspline_values(basis.knots, 3, 20, x);
    for (int i = 0; i < 20; ++i) CHECK(v[i] == doctest::Approx(cox_de_boor(basis.knots, i, 3, x, x == 1.0)).epsilon(1e-12));
  }
  CHECK(bspline_values(basis.knots, 3, 20, 1.5).isZero(0.0));
}

TEST_CASE("squared exponential prior") {
  const Vector c = Vector::LinSpaced(4, 0.0, 1.5);
  const Matrix k = squared_exponential_cov(c, 0.5, 1e-4);
  CHECK(k(0, 1) == doctest::Approx(std::exp(-0.25 / 0.5)));
  CHECK(k(2, 2) == doctest::Approx(1.0001));
  CHECK(k.isApprox(k.transpose()));
}

TEST_CASE("regression posterior on the identity toy") {
  const Vector d = (Vector(3) << 2.0, -1.0, 0.4).finished();
  const auto post = regression_posterior(Matrix::Identity(3, 3), d, 1.0, Matrix::Identity(3, 3));
  CHECK(post.x_hat.isApprox(d / 2.0, 1e-15));
  CHECK(post.sigma_hat.isApprox(0.5 * Matrix::Identity(3, 3), 1e-15));
}

TEST_CASE("blr20 posterior") {
  const auto [t, post] = make_blr20(7);
  CHECK(t.dim == 20);
  CHECK(t.name == "blr20");
  REQUIRE(t.prior_cov.has_value());
  CHECK(post.G.rows() == 500);

  Eigen::SelfAdjointEigenSolver<Matrix> es(post.sigma_hat);
  CHECK(es.eigenvalues().minCoeff() > 0.0);
  CHECK(std::isfinite(es.eigenvalues().maxCoeff() / es.eigenvalues().minCoeff()));

  // independent path: QR of the stacked whitened system [G / s; L^{-1}] x = [d / s; 0]
  const Matrix linv = t.prior_cov->llt().matrixL().solve(Matrix::Identity(20, 20));
  Matrix a(520, 20);
  a << post.G / post.sigma_d, linv;
  Vector rhs = Vector::Zero(520);
  rhs.head(500) = post.d / post.sigma_d;
  Eigen::HouseholderQR<Matrix> qr(a);
  const Vector x_qr = qr.solve(rhs);
  const Matrix r = qr.matrixQR().topRows(20).triangularView<Eigen::Upper>();
  const Matrix rinv = r.triangularView<Eigen::Upper>().solve(Matrix::Identity(20, 20));
  const Matrix cov_qr = rinv * rinv.transpose();
  CHECK((post.x_hat - x_qr).norm() <= 1e-10 * x_qr.norm());
  CHECK((post.sigma_hat - cov_qr).norm() <= 1e-10 * cov_qr.norm());

  Rng rng(3);
  Eigen::LLT<Matrix> prior_llt(*t.prior_cov);
  const double best = (post.G * post.x_hat - post.d).norm();
  for (int k = 0; k < 100; ++k) {
    const Vector x0 = prior_llt.matrixL() * standard_normal(rng, 20);
    CHECK(best <= (post.G * x0 - post.d).norm());
  }

  const SampleSet draws = t.reference_sampler(9, 100000);
  const Vector m = draws.colwise().mean().transpose();
  for (Eigen::Index j = 0; j < 20; ++j)
    CHECK(std::abs(m[j] - post.x_hat[j]) < 3.0 * std::sqrt(post.sigma_hat(j, j) / 1e5));

  check_gradient(t, 5, 1.0);

  const auto again = make_blr20(7);
  CHECK(enscore::testing::bit_equal(again.second.d, post.d));
  CHECK_FALSE(enscore::testing::bit_equal(make_blr20(8).second.d, post.d));

  const auto j = nlohmann::json::parse(regression_posterior_json(post));
  CHECK(j.at("x_hat").size() == 20);
  CHECK(j.at("sigma_hat").size() == 20);
  CHECK(j.at("G").size() == 500);
  CHECK(j.at("d").size() == 500);
}

TEST_CASE("spline regression noise has the requested scale") {
  SplineRegressionOptions opts;
  const auto [t, post] = make_spline_regression(opts, 3, "check");
  const Vector noise = post.d - post.G * post.x_true;
  const double sd = std::sqrt((noise.array() - noise.mean()).square().mean());
  CHECK(sd == doctest::Approx(2.0).epsilon(1e-12));
  // smoothing makes neighbouring residuals strongly correlated
  const Vector a = noise.head(499).array() - noise.mean();
  const Vector b = noise.tail(499).array() - noise.mean();
  CHECK(a.dot(b) / std::sqrt(a.squaredNorm() * b.squaredNorm()) > 0.9);
}
