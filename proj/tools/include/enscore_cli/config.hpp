#pragma once

#include "enscore/diffusion.hpp"
#include "enscore/sampler.hpp"

#include <json.hpp>

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>

namespace enscore::cli {

/// Invalid configuration, anchored to a 1-based line of the source text.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& source, int line, const std::string& message);

  int line() const { return line_; }
  const std::string& message() const { return message_; }

 private:
  int line_;
  std::string message_;
};

struct TargetBlock {
  std::string name;
  std::map<std::string, double> params;  // every schema key, defaults filled in

  bool operator==(const TargetBlock&) const = default;
};

struct ForwardBlock {
  ForwardKind kind = ForwardKind::ZeroDrift;
  // ZeroDrift
  double sigma_min = 0.01;
  double sigma_max = 1.0;
  double p = 5.0;
  // OrnsteinUhlenbeck
  double theta = 0.1;
  double alpha = 1.0;
  double mu = 0.0;              // broadcast to every coordinate
  std::string prior = "target";  // "target" or "identity"

  bool operator==(const ForwardBlock&) const = default;
};

struct SamplerBlock {
  int n_ens = 1000;
  int n_resample = 10;
  double dt_init = 0.005;
  Integrator integrator = Integrator::ReverseSDE_EulerMaruyama;
  EstimatorKind estimator_kind = EstimatorKind::Gaussian;
  bool antithetic = false;
  NodeMode node_mode = NodeMode::ReuseEnsemble;

  bool operator==(const SamplerBlock&) const = default;
};

struct BaselineBlock {
  std::string method = "mala";  // "mala" or "rwmh"
  int n_chains = 10;
  int n_steps = 1000;
  int burn_in = 500;
  double step_size = 0.1;
  int n_samples = 0;

  bool operator==(const BaselineBlock&) const = default;
};

struct EvalBlock {
  bool enabled = true;
  double p_norm = 1.0;
  int n_repeats = 200;
  int n_reference = 0;  // 0 means n_ens

  bool operator==(const EvalBlock&) const = default;
};

struct ExperimentConfig {
  std::uint64_t seed = 0;
  std::string output = "out";
  TargetBlock target;
  ForwardBlock forward;
  SamplerBlock sampler;
  std::optional<BaselineBlock> baseline;
  EvalBlock eval;

  bool operator==(const ExperimentConfig&) const = default;
};

/// Parses YAML (or JSON) config text. `source` names the text in error messages.
ExperimentConfig parse_config(const std::string& text, const std::string& source = "<config>");

/// Reads and parses a config file; a missing file is a ConfigError at line 0.
ExperimentConfig load_config(const std::string& path);

/// Canonical echo; parse_config(to_json(c).dump()) == c.
nlohmann::json to_json(const ExperimentConfig& config);

}  // namespace enscore::cli
