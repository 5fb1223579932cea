#pragma once

// Reference computations written independently of the library internals.

#include "enscore/diffusion.hpp"
#include "enscore/targets.hpp"

#include <Eigen/Cholesky>
#include <Eigen/LU>

#include <cmath>
#include <numbers>

namespace enscore::testing {

/// Gaussian density through a full-pivot LU solve and determinant.
inline long double gaussian_pdf(const Vector& x, const Vector& mean, const Matrix& cov) {
  Eigen::FullPivLU<Matrix> lu(cov);
  const Vector r = x - mean;
  const long double quad = r.dot(lu.solve(r));
  const long double norm =
      std::pow(2.0L * std::numbers::pi_v<long double>, static_cast<long double>(x.size()) / 2.0L) *
      std::sqrt(static_cast<long double>(lu.determinant()));
  return std::exp(-0.5L * quad) / norm;
}

/// kappa_t(x | x') from the moment formulas, evaluated with gaussian_pdf.
inline long double kernel_pdf(const ForwardSpec& spec, double t, const Vector& x, const Vector& x_prime) {
  const KernelMoments m = kernel_moments(spec, t);
  return gaussian_pdf(x, m.mean_shrink * x_prime + m.mean_offset, m.cov);
}

/// Multiple-importance-sampling estimate with N_i = 1 and balance-heuristic
/// weights, written as the literal double sum
///   sum_i sum_j kappa(x | x'_ij) w_i(x'_ij) p0(x'_ij) / p_is,i(x'_ij).
inline long double mis_literal(const ForwardSpec& spec, double t, const TargetDensity& target,
                               const SampleSet& members, const SampleSet& draws, const Vector& x) {
  const Eigen::Index n = members.rows();
  long double total = 0.0L;
  for (Eigen::Index i = 0; i < n; ++i) {
    const Vector xp = draws.row(i).transpose();
    long double own = 0.0L;
    long double balance_den = 0.0L;
    for (Eigen::Index j = 0; j < n; ++j) {
      const long double k = kernel_pdf(spec, t, xp, members.row(j).transpose());
      balance_den += 1.0L * k;  // N_j = 1
      if (j == i) own = k;
    }
    const long double w = 1.0L * own / balance_den;
    const long double p0 = std::exp(static_cast<long double>(target.log_density(xp)));
    total += kernel_pdf(spec, t, x, xp) * w * p0 / own;  // 1/N_i = 1
  }
  return total;
}

}  // namespace enscore::testing
