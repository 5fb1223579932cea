#include "doctest.h"
#include "test_util.hpp"

#include "enscore/diffusion.hpp"

#include <Eigen/Eigenvalues>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/numeric/odeint.hpp>

#include <array>
#include <cmath>
#include <stdexcept>

using namespace enscore;
using enscore::testing::rel_frobenius;
using enscore::testing::sample_cov;

namespace {

double quad_g_squared(const NoiseSchedule& g, double t) {
  auto f = [&](double s) { return g(s) * g(s); };
  return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, 0.0, t, 15, 1e-15);
}

}  // namespace

TEST_CASE("noise schedule endpoints and monotonicity") {
  NoiseSchedule g(0.01, 1.0);
  CHECK(g(0.0) == 0.01);
  CHECK(g(1.0) == 1.0);
  double prev = g(0.0);
  for (int k = 1; k <= 100; ++k) {
    const double cur = g(k / 100.0);
    CHECK(cur > prev);
    prev = cur;
  }
  CHECK_THROWS_AS(NoiseSchedule(1.0, 0.5), ContractViolation);
  CHECK_THROWS_AS(NoiseSchedule(0.1, 1.0, 0.0), ContractViolation);
}

TEST_CASE("kernel moments at t = 0 are a delta") {
  NoiseSchedule g(0.01, 1.0);
  const auto zd = ForwardSpec::zero_drift(3, g);
  const Vector mu = Vector::LinSpaced(3, -1.0, 1.0);
  const auto ou = ForwardSpec::ornstein_uhlenbeck(0.3, mu, Matrix::Identity(3, 3), 2.0);
  for (const auto* spec : {&zd, &ou}) {
    const auto m = kernel_moments(*spec, 0.0);
    CHECK(m.mean_shrink.isIdentity(0.0));
    CHECK(m.mean_offset.isZero(0.0));
    CHECK(m.cov.isZero(0.0));
    CHECK_FALSE(m.cov_chol.has_value());
  }
}

TEST_CASE("constant schedule gives linear variance") {
  const double sigma = 1.7;
  const auto spec = ForwardSpec::zero_drift(2, NoiseSchedule(sigma, sigma));
  for (double t : {0.1, 0.37, 1.0}) {
    const auto m = kernel_moments(spec, t);
    CHECK(m.cov.isApprox(sigma * sigma * t * Matrix::Identity(2, 2), 1e-14));
  }
}

TEST_CASE("closed-form v(t) matches quadrature") {
  for (auto [lo, hi] : std::array<std::pair<double, double>, 4>{{{0.01, 1.0}, {0.005, 1.0}, {0.1, 10.0}, {0.0, 2.0}}}) {
    NoiseSchedule g(lo, hi);
    CHECK(g.integrated_variance(1.0) == doctest::Approx(quad_g_squared(g, 1.0)).epsilon(1e-10));
    for (int k = 1; k <= 50; ++k) {
      const double t = k / 50.0;
      const double exact = quad_g_squared(g, t);
      CHECK(std::abs(g.integrated_variance(t) - exact) <= 1e-10 * exact);
    }
  }
}

TEST_CASE("OU moments match the moment ODEs") {
  using State = std::array<double, 2>;
  const double theta = 0.1;
  auto rhs = [&](const State& y, State& dy, double) {
    dy[0] = -theta * y[0];
    dy[1] = -2.0 * theta * y[1] + 1.0;
  };
  State y{1.0, 0.0};
  boost::numeric::odeint::integrate_adaptive(
      boost::numeric::odeint::make_controlled<boost::numeric::odeint::runge_kutta_dopri5<State>>(1e-14, 1e-14),
      rhs, y, 0.0, 1.0, 1e-3);

  const auto spec = ForwardSpec::ornstein_uhlenbeck(theta, Vector::Zero(4), Matrix::Identity(4, 4), 1.0);
  const auto m = kernel_moments(spec, 1.0);
  CHECK(m.mean_shrink(0, 0) == doctest::Approx(y[0]).epsilon(1e-12));
  CHECK(m.mean_shrink(0, 0) == doctest::Approx(std::exp(-0.1)).epsilon(1e-15));
  CHECK(m.cov(2, 2) == doctest::Approx(y[1]).epsilon(1e-12));
  CHECK(m.cov.isApprox((1.0 - std::exp(-0.2)) / 0.2 * Matrix::Identity(4, 4), 1e-14));
}

TEST_CASE("OU covariance uses the scale matrix and offset uses mu") {
  Matrix prior(2, 2);
  prior << 2.0, 0.5, 0.5, 1.0;
  const Vector mu = (Vector(2) << 1.0, -3.0).finished();
  const auto spec = ForwardSpec::ornstein_uhlenbeck(0.4, mu, prior, 9.0);
  const Matrix& s = spec.scale_matrix();
  CHECK((s * s.transpose()).isApprox(9.0 * prior, 1e-13));
  CHECK(s(0, 1) == 0.0);
  const double t = 0.6;
  const auto m = kernel_moments(spec, t);
  CHECK(m.mean_offset.isApprox((1.0 - std::exp(-0.4 * t)) * mu, 1e-14));
  CHECK(m.cov.isApprox(-std::expm1(-0.8 * t) / 0.8 * 9.0 * prior, 1e-13));
  CHECK((*m.cov_chol * m.cov_chol->transpose()).isApprox(m.cov, 1e-13));
}

TEST_CASE("zero-drift covariance grows in Loewner order") {
  const auto spec = ForwardSpec::zero_drift(3, NoiseSchedule(0.01, 1.0));
  for (int k = 0; k < 20; ++k) {
    const double t1 = k / 20.0;
    const double t2 = (k + 1) / 20.0;
    const Matrix diff = kernel_moments(spec, t2).cov - kernel_moments(spec, t1).cov;
    Eigen::SelfAdjointEigenSolver<Matrix> es(diff);
    CHECK(es.eigenvalues().minCoeff() > 0.0);
  }
}

TEST_CASE("time outside [0, 1] is a domain error") {
  const auto spec = ForwardSpec::zero_drift(2, NoiseSchedule(0.01, 1.0));
  CHECK_THROWS_AS(kernel_moments(spec, -1e-9), std::domain_error);
  CHECK_THROWS_AS(kernel_moments(spec, 1.0 + 1e-9), std::domain_error);
  CHECK_THROWS_AS(kernel_moments(spec, std::nan("")), std::domain_error);
}

TEST_CASE("forward spec validation") {
  CHECK_THROWS_AS(ForwardSpec::ornstein_uhlenbeck(0.0, Vector::Zero(2), Matrix::Identity(2, 2), 1.0),
                  ContractViolation);
  CHECK_THROWS_AS(ForwardSpec::ornstein_uhlenbeck(0.1, Vector::Zero(3), Matrix::Identity(2, 2), 1.0),
                  ContractViolation);
  Matrix upper = Matrix::Identity(2, 2);
  upper(0, 1) = 0.3;
  CHECK_THROWS_AS(ForwardSpec::ornstein_uhlenbeck_with_scale(0.1, Vector::Zero(2), upper), ContractViolation);
  Matrix indefinite(2, 2);
  indefinite << 1.0, 2.0, 2.0, 1.0;
  CHECK_THROWS_AS(ForwardSpec::ornstein_uhlenbeck(0.1, Vector::Zero(2), indefinite, 1.0), ContractViolation);
}

TEST_CASE("drift evaluations") {
  const Vector x = (Vector(3) << 0.3, -1.2, 2.0).finished();
  const Vector u = (Vector(3) << 1.0, 0.5, -0.25).finished();
  const auto zd = ForwardSpec::zero_drift(3, NoiseSchedule(0.01, 1.0));
  CHECK(reverse_drift(zd, 0.4, x, Vector::Zero(3)).isZero(0.0));
  CHECK(probability_flow_drift(zd, 0.4, x, Vector::Zero(3)).isZero(0.0));

  const auto two = ForwardSpec::zero_drift(3, NoiseSchedule(2.0, 2.0));
  CHECK(reverse_drift(two, 0.4, x, u).isApprox(-4.0 * u, 1e-15));
  CHECK(probability_flow_drift(two, 0.4, x, u).isApprox(-2.0 * u, 1e-15));

  const auto ou1 = ForwardSpec::ornstein_uhlenbeck(1.0, Vector::Zero(3), Matrix::Identity(3, 3), 1.0);
  CHECK(reverse_drift(ou1, 0.5, x, Vector::Zero(3)).isApprox(-x, 1e-15));

  Matrix prior(3, 3);
  prior << 1.0, 0.3, 0.1, 0.3, 2.0, 0.2, 0.1, 0.2, 0.5;
  const auto ou = ForwardSpec::ornstein_uhlenbeck(0.2, u, prior, 4.0);
  const Vector diff = reverse_drift(ou, 0.5, x, u) - probability_flow_drift(ou, 0.5, x, u);
  const Vector expected = -0.5 * (4.0 * prior) * u;
  for (Eigen::Index k = 0; k < 3; ++k) CHECK(diff[k] == doctest::Approx(expected[k]).epsilon(1e-12));

  CHECK_THROWS_AS(reverse_drift(ou, 0.5, Vector::Zero(2), u), ContractViolation);
}

TEST_CASE("forward simulation without noise keeps the ensemble fixed") {
  const auto spec = ForwardSpec::zero_drift(2, NoiseSchedule(0.0, 0.0));
  const SampleSet x0 = SampleSet::Random(50, 2);
  const auto snaps = forward_simulate(spec, x0, 20, 3);
  REQUIRE(snaps.size() == 21);
  for (const auto& s : snaps) CHECK(s == x0);
}

TEST_CASE("fast OU forward simulation reaches the kernel moments") {
  const double theta = 10.0;
  const auto spec = ForwardSpec::ornstein_uhlenbeck(theta, Vector::Zero(2), Matrix::Identity(2, 2), 1.0);
  const SampleSet x0 = enscore::testing::gaussian_draws(11, 10000, Vector::Constant(2, 1.0), 0.5 * Matrix::Identity(2, 2));
  const auto snaps = forward_simulate(spec, x0, 200, 17);
  const SampleSet& x1 = snaps.back();
  const auto m = kernel_moments(spec, 1.0);
  const double a = m.mean_shrink(0, 0);
  const Matrix expected = a * a * sample_cov(x0) + m.cov;
  const Vector mean = x1.colwise().mean().transpose();
  const Vector expected_mean = a * x0.colwise().mean().transpose();
  const double se = std::sqrt(expected(0, 0) / 10000.0);
  CHECK((mean - expected_mean).cwiseAbs().maxCoeff() < 3.0 * se);
  // Euler-Maruyama with theta h = 0.05 is biased by about theta h / 2 in the variance
  CHECK(rel_frobenius(sample_cov(x1), expected) < 0.10);
}

TEST_CASE("Brownian forward simulation of the Figure 5 ensemble") {
  Matrix cov0(2, 2);
  cov0 << 0.4, -0.39, -0.39, 0.4;
  const Vector mu0 = Vector::Constant(2, 0.8);
  Eigen::LLT<Matrix> llt(cov0);
  const SampleSet x0 = enscore::testing::gaussian_draws(5, 10000, mu0, llt.matrixL());
  const auto spec = ForwardSpec::zero_drift(2, NoiseSchedule(1.5, 1.5));
  const auto snaps = forward_simulate(spec, x0, 200, 8);
  const Matrix expected = cov0 + 2.25 * Matrix::Identity(2, 2);
  CHECK(rel_frobenius(sample_cov(snaps.back()), expected) < 0.10);

  // intermediate snapshots follow the same kernel moments
  const auto m = kernel_moments(spec, 0.5);
  CHECK(rel_frobenius(sample_cov(snaps[100]), cov0 + m.cov) < 0.10);
}

TEST_CASE("forward simulation is seeded") {
  const auto spec = ForwardSpec::zero_drift(2, NoiseSchedule(0.01, 1.0));
  const SampleSet x0 = SampleSet::Zero(20, 2);
  const auto a = forward_simulate(spec, x0, 10, 42);
  const auto b = forward_simulate(spec, x0, 10, 42);
  const auto c = forward_simulate(spec, x0, 10, 43);
  CHECK(enscore::testing::bit_equal(a.back(), b.back()));
  CHECK_FALSE(enscore::testing::bit_equal(a.back(), c.back()));
}
