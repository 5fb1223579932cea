#pragma once

#include "enscore/types.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace enscore {

struct EnergyResult {
  std::vector<double> values;  // one estimate per permutation repeat
  double p_norm = 1.0;
  int n_repeats = 0;

  double mean() const;
  double median() const;
};

/// Mean p-norm distance over every (a, b) pair.
double mean_pairwise_distance(const SampleSet& a, const SampleSet& b, double p_norm);

/// All-pairs V-statistic 2 E|X - Y| - E|X - X'| - E|Y - Y'|.
double energy_distance_all_pairs(const SampleSet& x, const SampleSet& y, double p_norm = 1.0);

/// Permutation estimator: each repeat pairs randomly permuted X and Y rows
/// for the cross term and uses fixed-point-free self-permutations for the
/// self terms. p_norm must be 1, 1.5 or 2.
EnergyResult energy_distance(const SampleSet& x, const SampleSet& y, double p_norm = 1.0,
                             int n_repeats = 200, std::uint64_t seed = 0, int threads = 1);

/// Linear-interpolation percentile, q in [0, 100].
double percentile(std::vector<double> values, double q);

struct Summary {
  Eigen::Index count = 0;
  Vector mean;
  Vector std;  // population standard deviation
  Vector p05;
  Vector p50;
  Vector p95;
  Matrix cov;  // population covariance
  std::size_t non_finite = 0;
};

Summary summarize(const SampleSet& samples);

std::string to_json(const Summary& summary);
std::string to_json(const EnergyResult& result);

}  // namespace enscore
