#include "enscore_cli/experiment.hpp"

#include "enscore_cli/config.hpp"
#include "enscore_cli/registry.hpp"

#include "enscore/baselines.hpp"
#include "enscore/eval.hpp"
#include "enscore/rng.hpp"
#include "enscore/sampler.hpp"

#include <json.hpp>

#include <charconv>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <ostream>

#ifndef ENSCORE_VERSION
#define ENSCORE_VERSION "unknown"
#endif

namespace enscore::cli {

const char* version() { return ENSCORE_VERSION; }

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

// Seeds for the evaluation streams, kept apart from the sampler's own domains.
constexpr std::uint64_t kReferenceSalt = 0x7265666572656e63ULL;
constexpr std::uint64_t kCalibrationSalt = 0x63616c6962726174ULL;
constexpr std::uint64_t kEnergySalt = 0x656e65726779ULL;

std::uint64_t sub_seed(std::uint64_t seed, std::uint64_t salt) { return mix64(seed ^ mix64(salt)); }

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) throw IoError("cannot write " + path.string());
}

std::string samples_csv(const SampleSet& samples) {
  std::string text;
  for (Eigen::Index k = 0; k < samples.cols(); ++k) text += (k ? ",x" : "x") + std::to_string(k);
  text += '\n';
  char buf[32];
  for (Eigen::Index i = 0; i < samples.rows(); ++i) {
    for (Eigen::Index k = 0; k < samples.cols(); ++k) {
      if (k) text += ',';
      // shortest representation that round-trips exactly
      const auto res = std::to_chars(buf, buf + sizeof buf, samples(i, k));
      text.append(buf, res.ptr);
    }
    text += '\n';
  }
  return text;
}

ForwardSpec make_forward(const ForwardBlock& f, const TargetDensity& target) {
  if (f.kind == ForwardKind::ZeroDrift)
    return ForwardSpec::zero_drift(target.dim, NoiseSchedule(f.sigma_min, f.sigma_max, f.p));
  const Matrix prior =
      f.prior == "target" ? *target.prior_cov : Matrix::Identity(target.dim, target.dim).eval();
  return ForwardSpec::ornstein_uhlenbeck(f.theta, Vector::Constant(target.dim, f.mu), prior, f.alpha);
}

json abort_json(const std::string& kind, const std::string& message) {
  return {{"status", "aborted"}, {"error", kind}, {"message", message}};
}

int abort_run(const fs::path& dir, const json& diag, std::ostream& err) {
  err << diag.dump() << "\n";
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (!ec) {
    std::ofstream out(dir / "error.json");
    out << diag.dump(2) << "\n";
  }
  return kExitRuntimeAbort;
}

}  // namespace

int run_experiment(const std::string& config_path, const RunOptions& options, std::ostream& err) {
  ExperimentConfig config;
  try {
    config = load_config(config_path);
  } catch (const ConfigError& e) {
    err << e.what() << "\n";
    return kExitInvalidConfig;
  }
  if (options.seed) config.seed = *options.seed;
  if (options.output) config.output = *options.output;
  const int threads = std::max(1, options.threads);
  const fs::path dir(config.output);

  const auto start = std::chrono::steady_clock::now();
  json meta;
  meta["version"] = version();
  meta["config"] = to_json(config);
  meta["threads"] = threads;

  try {
    fs::create_directories(dir);
    const TargetDensity target = build_target(config.target.name, config.target.params);
    const ForwardSpec spec = make_forward(config.forward, target);

    SamplerConfig cfg;
    cfg.n_ens = config.sampler.n_ens;
    cfg.n_resample = config.sampler.n_resample;
    cfg.dt_init = config.sampler.dt_init;
    cfg.integrator = config.sampler.integrator;
    cfg.estimator_kind = config.sampler.estimator_kind;
    cfg.antithetic = config.sampler.antithetic;
    cfg.node_mode = config.sampler.node_mode;
    cfg.seed = config.seed;
    cfg.threads = threads;

    const RunRecord record = run(spec, target, cfg);
    meta["p0_eval_count"] = record.p0_eval_count;
    meta["resample_times"] = record.resample_times;

    std::optional<ChainResult> chains;
    if (config.baseline) {
      ChainConfig cc;
      cc.n_chains = config.baseline->n_chains;
      cc.n_steps = config.baseline->n_steps;
      cc.burn_in = config.baseline->burn_in;
      cc.step_size = config.baseline->step_size;
      cc.n_samples = config.baseline->n_samples;
      cc.seed = config.seed;
      cc.threads = threads;
      chains = config.baseline->method == "mala" ? mala(target, cc) : rwmh(target, cc);
      meta["baseline"] = {{"method", config.baseline->method},
                          {"acceptance_rate", chains->acceptance_rate},
                          {"target_eval_count", static_cast<std::size_t>(cc.n_chains) * cc.n_steps},
                          {"samples", chains->samples.rows()}};
    }

    write_file(dir / "samples.csv", samples_csv(record.final_ensemble));
    if (chains) write_file(dir / "baseline_samples.csv", samples_csv(chains->samples));

    json summary;
    summary["ens"] = json::parse(to_json(summarize(record.final_ensemble)));
    if (chains) summary["baseline"] = json::parse(to_json(summarize(chains->samples)));
    if (target.analytic) {
      const auto& a = *target.analytic;
      summary["analytic"] = {{"mean", std::vector<double>(a.mean.data(), a.mean.data() + a.mean.size())},
                             {"std", [&] {
                                const Vector sd = a.cov.diagonal().cwiseSqrt();
                                return std::vector<double>(sd.data(), sd.data() + sd.size());
                              }()}};
    }
    write_file(dir / "summary.json", summary.dump(2) + "\n");

    if (config.eval.enabled && target.has_reference_sampler()) {
      const Eigen::Index n_ref = config.eval.n_reference > 0 ? config.eval.n_reference : config.sampler.n_ens;
      const SampleSet ref = target.reference_sampler(sub_seed(config.seed, kReferenceSalt), n_ref);
      const SampleSet calib = target.reference_sampler(sub_seed(config.seed, kCalibrationSalt), n_ref);
      const double p = config.eval.p_norm;
      const int reps = config.eval.n_repeats;
      const std::uint64_t eseed = sub_seed(config.seed, kEnergySalt);

      const EnergyResult self = energy_distance(calib, ref, p, reps, eseed, threads);
      json energy;
      energy["reference"] = target.analytic ? "analytic" : "direct";
      energy["n_reference"] = n_ref;
      energy["p_norm"] = p;
      energy["n_repeats"] = reps;
      energy["self_threshold"] = percentile(self.values, 95.0);
      energy["self"] = json::parse(to_json(self));
      energy["ens"] = json::parse(to_json(energy_distance(record.final_ensemble, ref, p, reps, eseed + 1, threads)));
      if (chains)
        energy["baseline"] = json::parse(to_json(energy_distance(chains->samples, ref, p, reps, eseed + 2, threads)));
      write_file(dir / "energy.json", energy.dump(2) + "\n");
    }
  } catch (const EstimatorDegenerate& e) {
    return abort_run(dir, abort_json("EstimatorDegenerate", e.what()), err);
  } catch (const NonFiniteState& e) {
    json diag = abort_json("NonFiniteState", e.what());
    diag["member"] = e.member();
    diag["time"] = e.time();
    return abort_run(dir, diag, err);
  } catch (const ContractViolation& e) {
    return abort_run(dir, abort_json("ContractViolation", e.what()), err);
  } catch (const IoError& e) {
    return abort_run(dir, abort_json("IoError", e.what()), err);
  } catch (const fs::filesystem_error& e) {
    return abort_run(dir, abort_json("IoError", e.what()), err);
  }

  meta["wall_time_s"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  try {
    write_file(dir / "run_meta.json", meta.dump(2) + "\n");
  } catch (const IoError& e) {
    return abort_run(dir, abort_json("IoError", e.what()), err);
  }
  return kExitOk;
}

}  // namespace enscore::cli
