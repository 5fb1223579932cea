#include "enscore_cli/config.hpp"

#include "enscore_cli/registry.hpp"

#include "enscore/baselines.hpp"

#include <yaml-cpp/yaml.h>

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace enscore::cli {

ConfigError::ConfigError(const std::string& source, int line, const std::string& message)
    : std::runtime_error(source + ":" + std::to_string(line) + ": " + message),
      line_(line),
      message_(message) {}

namespace {

int line_of(const YAML::Node& node, int fallback) {
  const YAML::Mark mark = node.Mark();
  return mark.is_null() ? fallback : mark.line + 1;
}

std::string_view to_string(ForwardKind kind) {
  return kind == ForwardKind::ZeroDrift ? "ZeroDrift" : "OrnsteinUhlenbeck";
}

// A mapping whose keys must all be consumed; leftovers are reported as unknown.
class Section {
 public:
  Section(const YAML::Node& node, std::string path, const std::string& source, int line)
      : node_(node), path_(std::move(path)), source_(source), line_(line) {
    if (!node.IsMap()) fail(line_, "'" + path_ + "' must be a mapping");
  }

  int line() const { return line_; }
  const std::string& source() const { return source_; }

  std::string key_path(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  bool has(const std::string& key) const { return static_cast<bool>(node_[key]); }

  YAML::Node raw(const std::string& key) {
    seen_.insert(key);
    return node_[key];
  }

  int line_of_key(const std::string& key) const {
    for (auto it = node_.begin(); it != node_.end(); ++it)
      if (it->first.as<std::string>() == key) return line_of(it->first, line_);
    return line_;
  }

  Section section(const std::string& key) {
    const int line = line_of_key(key);
    return Section(raw(key), key_path(key), source_, line);
  }

  template <class T>
  void read(const std::string& key, T& out) {
    if (!has(key)) {
      seen_.insert(key);
      return;
    }
    out = value<T>(key);
  }

  template <class T>
  T require(const std::string& key) {
    if (!has(key)) fail(line_, "missing required key '" + key_path(key) + "'");
    return value<T>(key);
  }

  template <class E>
  void read_enum(const std::string& key, E& out, std::initializer_list<E> options) {
    if (!has(key)) {
      seen_.insert(key);
      return;
    }
    const std::string name = value<std::string>(key);
    std::string allowed;
    for (E option : options) {
      if (name == to_string(option)) {
        out = option;
        return;
      }
      allowed += (allowed.empty() ? "" : ", ") + std::string(to_string(option));
    }
    fail(line_of_key(key), "unknown value '" + name + "' for '" + key_path(key) + "' (expected " + allowed + ")");
  }

  void finish() const {
    for (auto it = node_.begin(); it != node_.end(); ++it) {
      const std::string key = it->first.as<std::string>();
      if (!seen_.count(key)) fail(line_of(it->first, line_), "unknown key '" + key_path(key) + "'");
    }
  }

  [[noreturn]] void fail(int line, const std::string& message) const { throw ConfigError(source_, line, message); }

 private:
  template <class T>
  T value(const std::string& key) {
    const YAML::Node v = raw(key);
    const int line = line_of(v, line_of_key(key));
    if (!v.IsScalar()) fail(line, "'" + key_path(key) + "' must be a scalar");
    try {
      if constexpr (std::is_same_v<T, std::uint64_t> || std::is_same_v<T, int>) {
        if constexpr (std::is_unsigned_v<T>) {
          if (!v.Scalar().empty() && v.Scalar()[0] == '-')
            fail(line, "'" + key_path(key) + "' must be a non-negative integer");
        }
      }
      return v.as<T>();
    } catch (const YAML::BadConversion&) {
      const char* kind = std::is_same_v<T, bool>            ? "a boolean"
                         : std::is_same_v<T, std::string>   ? "a string"
                         : std::is_floating_point_v<T>      ? "a number"
                                                            : "an integer";
      fail(line, "'" + key_path(key) + "' must be " + kind + ", got '" + v.Scalar() + "'");
    }
  }

  YAML::Node node_;
  std::string path_;
  const std::string& source_;
  int line_;
  std::set<std::string> seen_;
};

TargetBlock parse_target(Section& root) {
  if (!root.has("target")) root.fail(root.line(), "missing required key 'target'");
  Section s = root.section("target");
  TargetBlock block;
  block.name = s.require<std::string>("name");
  const TargetEntry* entry = find_target(block.name);
  if (!entry)
    s.fail(s.line_of_key("name"), "unknown target '" + block.name + "' for 'target.name' (run `enscore list`)");
  block.params = entry->defaults;
  if (s.has("params")) {
    Section p = s.section("params");
    for (auto& [key, value] : block.params) p.read(key, value);
    p.finish();
    if (entry->integer_params)
      for (const auto& [key, value] : block.params)
        if (value != std::floor(value) || value < 0)
          p.fail(p.line_of_key(key), "'target.params." + key + "' must be a non-negative integer");
  }
  s.finish();
  try {
    (void)build_target(block.name, block.params);
  } catch (const ContractViolation& e) {
    s.fail(s.line(), std::string("invalid parameters for target '") + block.name + "': " + e.what());
  }
  return block;
}

ForwardBlock parse_forward(Section& root, const TargetBlock& target) {
  ForwardBlock block;
  if (!root.has("forward")) {
    root.raw("forward");
    return block;
  }
  Section s = root.section("forward");
  s.read_enum("kind", block.kind, {ForwardKind::ZeroDrift, ForwardKind::OrnsteinUhlenbeck});
  if (block.kind == ForwardKind::ZeroDrift) {
    s.read("sigma_min", block.sigma_min);
    s.read("sigma_max", block.sigma_max);
    s.read("p", block.p);
    try {
      (void)NoiseSchedule(block.sigma_min, block.sigma_max, block.p);
    } catch (const ContractViolation& e) {
      s.fail(s.line(), std::string("invalid noise schedule: ") + e.what());
    }
  } else {
    s.read("theta", block.theta);
    s.read("alpha", block.alpha);
    s.read("mu", block.mu);
    s.read("prior", block.prior);
    if (!(block.theta > 0.0)) s.fail(s.line_of_key("theta"), "'forward.theta' must be positive");
    if (!(block.alpha > 0.0)) s.fail(s.line_of_key("alpha"), "'forward.alpha' must be positive");
    if (!std::isfinite(block.mu)) s.fail(s.line_of_key("mu"), "'forward.mu' must be finite");
    if (block.prior != "target" && block.prior != "identity")
      s.fail(s.line_of_key("prior"), "'forward.prior' must be 'target' or 'identity'");
    if (block.prior == "target" && !find_target(target.name)->has_prior)
      s.fail(s.line_of_key("prior"),
             "target '" + target.name + "' has no prior covariance; set 'forward.prior: identity'");
  }
  s.finish();
  return block;
}

SamplerBlock parse_sampler(Section& root) {
  SamplerBlock block;
  if (!root.has("sampler")) {
    root.raw("sampler");
    return block;
  }
  Section s = root.section("sampler");
  s.read("n_ens", block.n_ens);
  s.read("n_resample", block.n_resample);
  s.read("dt_init", block.dt_init);
  s.read_enum("integrator", block.integrator,
              {Integrator::ReverseSDE_EulerMaruyama, Integrator::ProbabilityFlow_Heun});
  s.read_enum("estimator", block.estimator_kind, {EstimatorKind::Gaussian, EstimatorKind::MIS});
  s.read("antithetic", block.antithetic);
  s.read_enum("node_mode", block.node_mode, {NodeMode::ReuseEnsemble, NodeMode::DrawFresh});
  s.finish();
  SamplerConfig cfg;
  cfg.n_ens = block.n_ens;
  cfg.n_resample = block.n_resample;
  cfg.dt_init = block.dt_init;
  try {
    validate(cfg);
  } catch (const ContractViolation& e) {
    s.fail(s.line(), std::string("invalid sampler block: ") + e.what());
  }
  return block;
}

std::optional<BaselineBlock> parse_baseline(Section& root) {
  if (!root.has("baseline")) {
    root.raw("baseline");
    return std::nullopt;
  }
  Section s = root.section("baseline");
  BaselineBlock block;
  s.read("method", block.method);
  if (block.method != "mala" && block.method != "rwmh")
    s.fail(s.line_of_key("method"), "'baseline.method' must be 'mala' or 'rwmh'");
  s.read("n_chains", block.n_chains);
  s.read("n_steps", block.n_steps);
  s.read("burn_in", block.burn_in);
  s.read("step_size", block.step_size);
  s.read("n_samples", block.n_samples);
  s.finish();
  ChainConfig cfg;
  cfg.n_chains = block.n_chains;
  cfg.n_steps = block.n_steps;
  cfg.burn_in = block.burn_in;
  cfg.step_size = block.step_size;
  cfg.n_samples = block.n_samples;
  try {
    validate(cfg);
  } catch (const ContractViolation& e) {
    s.fail(s.line(), std::string("invalid baseline block: ") + e.what());
  }
  return block;
}

EvalBlock parse_eval(Section& root) {
  EvalBlock block;
  if (!root.has("eval")) {
    root.raw("eval");
    return block;
  }
  Section s = root.section("eval");
  s.read("enabled", block.enabled);
  s.read("p_norm", block.p_norm);
  s.read("n_repeats", block.n_repeats);
  s.read("n_reference", block.n_reference);
  s.finish();
  if (block.p_norm != 1.0 && block.p_norm != 1.5 && block.p_norm != 2.0)
    s.fail(s.line_of_key("p_norm"), "'eval.p_norm' must be 1, 1.5 or 2");
  if (block.n_repeats < 1) s.fail(s.line_of_key("n_repeats"), "'eval.n_repeats' must be at least 1");
  if (block.n_reference < 0 || block.n_reference == 1)
    s.fail(s.line_of_key("n_reference"), "'eval.n_reference' must be 0 or at least 2");
  return block;
}

}  // namespace

ExperimentConfig parse_config(const std::string& text, const std::string& source) {
  YAML::Node doc;
  try {
    doc = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    throw ConfigError(source, e.mark.line + 1, e.msg);
  }
  if (!doc || doc.IsNull()) throw ConfigError(source, 1, "empty config");

  Section root(doc, "", source, 1);
  ExperimentConfig config;
  config.seed = root.require<std::uint64_t>("seed");
  root.read("output", config.output);
  if (config.output.empty()) root.fail(root.line_of_key("output"), "'output' must not be empty");
  config.target = parse_target(root);
  config.forward = parse_forward(root, config.target);
  config.sampler = parse_sampler(root);
  config.baseline = parse_baseline(root);
  config.eval = parse_eval(root);
  root.finish();
  return config;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path, 0, "cannot open config file");
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config(text.str(), path);
}

nlohmann::json to_json(const ExperimentConfig& c) {
  nlohmann::json j;
  j["seed"] = c.seed;
  j["output"] = c.output;
  j["target"] = {{"name", c.target.name}, {"params", c.target.params}};

  nlohmann::json fwd = {{"kind", std::string(to_string(c.forward.kind))}};
  if (c.forward.kind == ForwardKind::ZeroDrift) {
    fwd["sigma_min"] = c.forward.sigma_min;
    fwd["sigma_max"] = c.forward.sigma_max;
    fwd["p"] = c.forward.p;
  } else {
    fwd["theta"] = c.forward.theta;
    fwd["alpha"] = c.forward.alpha;
    fwd["mu"] = c.forward.mu;
    fwd["prior"] = c.forward.prior;
  }
  j["forward"] = fwd;

  j["sampler"] = {{"n_ens", c.sampler.n_ens},
                  {"n_resample", c.sampler.n_resample},
                  {"dt_init", c.sampler.dt_init},
                  {"integrator", std::string(to_string(c.sampler.integrator))},
                  {"estimator", std::string(to_string(c.sampler.estimator_kind))},
                  {"antithetic", c.sampler.antithetic},
                  {"node_mode", std::string(to_string(c.sampler.node_mode))}};

  if (c.baseline)
    j["baseline"] = {{"method", c.baseline->method},       {"n_chains", c.baseline->n_chains},
                     {"n_steps", c.baseline->n_steps},     {"burn_in", c.baseline->burn_in},
                     {"step_size", c.baseline->step_size}, {"n_samples", c.baseline->n_samples}};

  j["eval"] = {{"enabled", c.eval.enabled},
               {"p_norm", c.eval.p_norm},
               {"n_repeats", c.eval.n_repeats},
               {"n_reference", c.eval.n_reference}};
  return j;
}

}  // namespace enscore::cli
