#include "enscore/sampler.hpp"
#include "enscore/score_estimator.hpp"

#include <benchmark/benchmark.h>

using namespace enscore;

namespace {

// Score evaluation cost grows linearly in the node count.
void BM_Score(benchmark::State& state) {
  const Eigen::Index n = state.range(0);
  const Eigen::Index d = state.range(1);
  const auto target = make_gaussian(Vector::Zero(d), ar1_covariance(d, 0.5));
  const auto spec = ForwardSpec::zero_drift(d, NoiseSchedule(0.01, 1.0));
  const SampleSet nodes = target.reference_sampler(1, n);
  const auto est = freeze_estimator(target, build_gaussian_is(nodes), spec, nodes, NodeMode::ReuseEnsemble, false, 0);
  const Vector x = Vector::Constant(d, 0.3);
  for (auto _ : state) benchmark::DoNotOptimize(est.score(0.5, x));
  state.SetItemsProcessed(state.iterations() * n);
}
BENCHMARK(BM_Score)->ArgsProduct({{100, 1000, 10000}, {2, 20}});

void BM_ScoreWithContext(benchmark::State& state) {
  const Eigen::Index n = state.range(0);
  const Eigen::Index d = 20;
  const auto target = make_gaussian(Vector::Zero(d), ar1_covariance(d, 0.5));
  const auto spec = ForwardSpec::zero_drift(d, NoiseSchedule(0.01, 1.0));
  const SampleSet nodes = target.reference_sampler(1, n);
  const auto est = freeze_estimator(target, build_gaussian_is(nodes), spec, nodes, NodeMode::ReuseEnsemble, false, 0);
  const auto ctx = est.context(0.5);
  const Vector x = Vector::Constant(d, 0.3);
  for (auto _ : state) benchmark::DoNotOptimize(est.score(ctx, x));
  state.SetItemsProcessed(state.iterations() * n);
}
BENCHMARK(BM_ScoreWithContext)->Arg(1000)->Arg(10000);

void BM_MisBuild(benchmark::State& state) {
  const Eigen::Index n = state.range(0);
  const auto target = make_banana();
  const auto spec = ForwardSpec::zero_drift(2, NoiseSchedule(0.01, 1.0));
  const SampleSet ens = target.reference_sampler(2, n);
  for (auto _ : state) benchmark::DoNotOptimize(build_mis(ens, 0.5, spec, target, false, 3));
}
BENCHMARK(BM_MisBuild)->Arg(100)->Arg(1000)->Unit(benchmark::kMillisecond);

void BM_SamplerRun(benchmark::State& state) {
  const auto target = make_banana();
  const auto spec = ForwardSpec::zero_drift(2, NoiseSchedule(0.01, 1.0));
  SamplerConfig cfg;
  cfg.n_ens = static_cast<int>(state.range(0));
  cfg.n_resample = 10;
  cfg.dt_init = 0.01;
  for (auto _ : state) benchmark::DoNotOptimize(run(spec, target, cfg).final_ensemble);
}
BENCHMARK(BM_SamplerRun)->Arg(100)->Arg(400)->Unit(benchmark::kMillisecond);

}  // namespace
