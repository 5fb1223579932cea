#include "enscore_cli/registry.hpp"

#include "enscore/sampler.hpp"

#include <algorithm>
#include <sstream>

namespace enscore::cli {

const std::vector<TargetEntry>& target_registry() {
  static const std::vector<TargetEntry> entries = [] {
    std::vector<TargetEntry> e = {
        {"banana", "2-d banana, x1 ~ N(0,1), x2 | x1 ~ N(x1^2 + c, s^2)", {{"c", 1.0}, {"s", 0.5}}, false, false},
        {"blr100",
         "100-d synthetic B-spline regression posterior; a Gaussian-prior surrogate standing in for the "
         "100-d Darcy-flow problem, which is not implemented",
         {{"data_seed", 7.0}},
         true,
         true},
        {"blr20", "20-d B-spline regression posterior (500 points, SE prior L = 0.5, sigma_d = 2)",
         {{"data_seed", 7.0}}, true, true},
        {"gaussian", "N(mean * 1, scale * AR(1) covariance with correlation rho)",
         {{"dim", 5.0}, {"mean", 0.0}, {"rho", 0.5}, {"scale", 1.0}}, false, false},
        {"mixture3", "2-d equal-weight mixture of three well-separated Gaussians", {}, false, false},
        {"ridged", "2-d N(0, 4I) envelope modulated by exp(-a sin^2(k x1))", {{"a", 3.0}, {"k", 3.0}}, false,
         false},
    };
    std::sort(e.begin(), e.end(), [](const auto& a, const auto& b) { return a.name < b.name; });
    return e;
  }();
  return entries;
}

const TargetEntry* find_target(const std::string& name) {
  for (const auto& e : target_registry())
    if (e.name == name) return &e;
  return nullptr;
}

TargetDensity build_target(const std::string& name, const std::map<std::string, double>& params) {
  auto get = [&](const char* key) { return params.at(key); };
  if (name == "banana") return make_banana(get("c"), get("s"));
  if (name == "ridged") return make_ridged(get("a"), get("k"));
  if (name == "mixture3") return make_mixture3();
  if (name == "gaussian") {
    const double dim = get("dim");
    require(dim >= 1.0 && dim == static_cast<double>(static_cast<Eigen::Index>(dim)), "dim must be a positive integer");
    const double rho = get("rho");
    require(rho > -1.0 && rho < 1.0, "rho must lie in (-1, 1)");
    require(get("scale") > 0.0, "scale must be positive");
    const auto d = static_cast<Eigen::Index>(dim);
    return make_gaussian(Vector::Constant(d, get("mean")), get("scale") * ar1_covariance(d, rho));
  }
  const auto data_seed = static_cast<std::uint64_t>(get("data_seed"));
  if (name == "blr20") return make_blr20(data_seed).first;
  if (name == "blr100") {
    SplineRegressionOptions options;
    options.n_splines = 100;
    return make_spline_regression(options, data_seed, "blr100").first;
  }
  throw ContractViolation("unknown target '" + name + "'");
}

std::string list_registry() {
  std::ostringstream out;
  auto params = [](const std::map<std::string, double>& p) {
    std::ostringstream s;
    bool first = true;
    for (const auto& [k, v] : p) {
      s << (first ? "" : ", ") << k << " = " << v;
      first = false;
    }
    return p.empty() ? std::string("(no parameters)") : s.str();
  };

  out << "targets:\n";
  for (const auto& e : target_registry()) {
    out << "  " << e.name << "  [" << params(e.defaults) << "]" << (e.has_prior ? "  prior: yes" : "") << "\n";
    out << "      " << e.description << "\n";
  }
  out << "forward kinds:\n"
      << "  OrnsteinUhlenbeck  [alpha = 1, mu = 0, prior = target|identity, theta = 0.1]\n"
      << "  ZeroDrift  [p = 5, sigma_max = 1, sigma_min = 0.01]\n";
  out << "estimator kinds:\n";
  for (auto k : {EstimatorKind::Gaussian, EstimatorKind::MIS}) out << "  " << to_string(k) << "\n";
  out << "integrators:\n";
  for (auto i : {Integrator::ProbabilityFlow_Heun, Integrator::ReverseSDE_EulerMaruyama})
    out << "  " << to_string(i) << "\n";
  out << "node modes:\n";
  for (auto m : {NodeMode::DrawFresh, NodeMode::ReuseEnsemble}) out << "  " << to_string(m) << "\n";
  out << "baselines:\n"
      << "  mala  [burn_in = 500, n_chains = 10, n_samples = 0, n_steps = 1000, step_size = 0.1]\n"
      << "  rwmh  [burn_in = 500, n_chains = 10, n_samples = 0, n_steps = 1000, step_size = 0.1]\n";
  return out.str();
}

}  // namespace enscore::cli
