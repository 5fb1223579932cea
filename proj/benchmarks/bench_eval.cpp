#include "enscore/eval.hpp"
#include "enscore/targets.hpp"

#include <benchmark/benchmark.h>

using namespace enscore;

namespace {

void BM_EnergyPermutation(benchmark::State& state) {
  const Eigen::Index n = state.range(0);
  const auto t = make_gaussian(Vector::Zero(5), ar1_covariance(5, 0.5));
  const SampleSet x = t.reference_sampler(1, n);
  const SampleSet y = t.reference_sampler(2, n);
  for (auto _ : state) benchmark::DoNotOptimize(energy_distance(x, y, 1.0, 200, 3).median());
}
BENCHMARK(BM_EnergyPermutation)->Arg(1000)->Arg(4096)->Unit(benchmark::kMillisecond);

void BM_EnergyAllPairs(benchmark::State& state) {
  const Eigen::Index n = state.range(0);
  const auto t = make_gaussian(Vector::Zero(5), ar1_covariance(5, 0.5));
  const SampleSet x = t.reference_sampler(1, n);
  const SampleSet y = t.reference_sampler(2, n);
  for (auto _ : state) benchmark::DoNotOptimize(energy_distance_all_pairs(x, y, static_cast<double>(state.range(1)) / 2.0));
  state.SetItemsProcessed(state.iterations() * 3 * n * n);
}
BENCHMARK(BM_EnergyAllPairs)->ArgsProduct({{500, 2000}, {2, 3, 4}})->Unit(benchmark::kMillisecond);

}  // namespace
