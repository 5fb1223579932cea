#include "enscore/eval.hpp"

#include "enscore/parallel.hpp"
#include "enscore/rng.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace enscore {

namespace {

// Points stored one per column, so each point is contiguous.
using PointMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::ColMajor>;

double distance(const double* a, const double* b, Eigen::Index dim, double p_norm) {
  double acc = 0.0;
  if (p_norm == 1.0) {
    for (Eigen::Index k = 0; k < dim; ++k) acc += std::abs(a[k] - b[k]);
    return acc;
  }
  if (p_norm == 2.0) {
    for (Eigen::Index k = 0; k < dim; ++k) acc += (a[k] - b[k]) * (a[k] - b[k]);
    return std::sqrt(acc);
  }
  for (Eigen::Index k = 0; k < dim; ++k) acc += std::pow(std::abs(a[k] - b[k]), p_norm);
  return std::pow(acc, 1.0 / p_norm);
}

std::vector<Eigen::Index> shuffled(Eigen::Index n, Rng& rng) {
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(n));
  std::iota(idx.begin(), idx.end(), Eigen::Index{0});
  std::shuffle(idx.begin(), idx.end(), rng);
  return idx;
}

// Sattolo's algorithm: a uniformly random single cycle, hence no fixed points
std::vector<Eigen::Index> derangement(Eigen::Index n, Rng& rng) {
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(n));
  std::iota(idx.begin(), idx.end(), Eigen::Index{0});
  for (Eigen::Index i = n - 1; i > 0; --i) {
    std::uniform_int_distribution<Eigen::Index> pick(0, i - 1);
    std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(pick(rng))]);
  }
  return idx;
}

double self_term(const PointMatrix& s, double p_norm, Rng& rng) {
  if (s.cols() < 2) return 0.0;
  const auto perm = derangement(s.cols(), rng);
  double total = 0.0;
  for (Eigen::Index i = 0; i < s.cols(); ++i)
    total += distance(s.col(i).data(), s.col(perm[static_cast<std::size_t>(i)]).data(), s.rows(), p_norm);
  return total / static_cast<double>(s.cols());
}

nlohmann::json to_list(const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

}  // namespace

double EnergyResult::mean() const {
  if (values.empty()) return 0.0;
  return std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
}

double EnergyResult::median() const { return percentile(values, 50.0); }

double mean_pairwise_distance(const SampleSet& a, const SampleSet& b, double p_norm) {
  require(a.rows() > 0 && b.rows() > 0, "pairwise distance needs nonempty sets");
  require(a.cols() == b.cols(), "sample sets must share a dimension");
  const PointMatrix pa = a.transpose();
  const PointMatrix pb = b.transpose();
  const Eigen::Index dim = a.cols();
  double total = 0.0;
  for (Eigen::Index i = 0; i < pa.cols(); ++i) {
    double row_total = 0.0;
    for (Eigen::Index j = 0; j < pb.cols(); ++j) row_total += distance(pa.col(i).data(), pb.col(j).data(), dim, p_norm);
    total += row_total;
  }
  return total / (static_cast<double>(a.rows()) * static_cast<double>(b.rows()));
}

double energy_distance_all_pairs(const SampleSet& x, const SampleSet& y, double p_norm) {
  return 2.0 * mean_pairwise_distance(x, y, p_norm) - mean_pairwise_distance(x, x, p_norm) -
         mean_pairwise_distance(y, y, p_norm);
}

EnergyResult energy_distance(const SampleSet& x, const SampleSet& y, double p_norm, int n_repeats,
                             std::uint64_t seed, int threads) {
  require(x.rows() > 0 && y.rows() > 0, "energy distance needs nonempty sample sets");
  require(x.cols() == y.cols(), "sample sets must share a dimension");
  require(p_norm == 1.0 || p_norm == 1.5 || p_norm == 2.0, "p_norm must be 1, 1.5 or 2");
  require(n_repeats >= 1, "n_repeats must be positive");

  EnergyResult result;
  result.p_norm = p_norm;
  result.n_repeats = n_repeats;
  result.values.assign(static_cast<std::size_t>(n_repeats), 0.0);
  const Eigen::Index n_pairs = std::min(x.rows(), y.rows());
  const PointMatrix px_all = x.transpose();
  const PointMatrix py_all = y.transpose();

  parallel_for(static_cast<std::size_t>(n_repeats), threads, [&](std::size_t r) {
    Rng rng = derive_stream(seed, stream_domain::kPermutation, r);
    const auto px = shuffled(x.rows(), rng);
    const auto py = shuffled(y.rows(), rng);
    double cross = 0.0;
    for (Eigen::Index i = 0; i < n_pairs; ++i)
      cross += distance(px_all.col(px[static_cast<std::size_t>(i)]).data(),
                        py_all.col(py[static_cast<std::size_t>(i)]).data(), x.cols(), p_norm);
    cross /= static_cast<double>(n_pairs);
    const double sx = self_term(px_all, p_norm, rng);
    const double sy = self_term(py_all, p_norm, rng);
    result.values[r] = 2.0 * cross - sx - sy;
  });
  return result;
}

double percentile(std::vector<double> values, double q) {
  require(!values.empty(), "percentile of an empty set");
  std::sort(values.begin(), values.end());
  const double pos = q / 100.0 * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return values[lo] + frac * (values[hi] - values[lo]);
}

Summary summarize(const SampleSet& samples) {
  require(samples.rows() > 0, "summary of an empty sample set");
  Summary s;
  s.count = samples.rows();
  const auto d = samples.cols();
  for (Eigen::Index i = 0; i < samples.rows(); ++i)
    for (Eigen::Index k = 0; k < d; ++k)
      if (!std::isfinite(samples(i, k))) ++s.non_finite;

  const double n = static_cast<double>(samples.rows());
  s.mean = samples.colwise().mean().transpose();
  const Matrix centered = samples.rowwise() - s.mean.transpose();
  s.cov = centered.transpose() * centered / n;
  s.std = s.cov.diagonal().cwiseSqrt();
  s.p05.resize(d);
  s.p50.resize(d);
  s.p95.resize(d);
  for (Eigen::Index k = 0; k < d; ++k) {
    std::vector<double> column(samples.col(k).data(), samples.col(k).data() + samples.rows());
    s.p05[k] = percentile(column, 5.0);
    s.p50[k] = percentile(column, 50.0);
    s.p95[k] = percentile(std::move(column), 95.0);
  }
  return s;
}

std::string to_json(const Summary& summary) {
  nlohmann::json j;
  j["count"] = summary.count;
  j["mean"] = to_list(summary.mean);
  j["std"] = to_list(summary.std);
  j["p05"] = to_list(summary.p05);
  j["p50"] = to_list(summary.p50);
  j["p95"] = to_list(summary.p95);
  nlohmann::json cov = nlohmann::json::array();
  for (Eigen::Index i = 0; i < summary.cov.rows(); ++i) cov.push_back(to_list(summary.cov.row(i).transpose()));
  j["cov"] = cov;
  j["non_finite"] = summary.non_finite;
  return j.dump(2);
}

std::string to_json(const EnergyResult& result) {
  nlohmann::json j;
  j["p_norm"] = result.p_norm;
  j["n_repeats"] = result.n_repeats;
  j["mean"] = result.mean();
  j["median"] = result.median();
  j["values"] = result.values;
  return j.dump(2);
}

}  // namespace enscore
