#pragma once

#include "enscore/targets.hpp"

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace enscore::cli {

struct TargetEntry {
  std::string name;
  std::string description;
  std::map<std::string, double> defaults;  // parameter schema
  bool has_prior = false;                  // can drive OU localization
  bool integer_params = false;             // all parameters are whole numbers
};

/// Registered targets, sorted by name.
const std::vector<TargetEntry>& target_registry();

/// nullptr when the name is unknown.
const TargetEntry* find_target(const std::string& name);

/// Builds a target from resolved parameters.
TargetDensity build_target(const std::string& name, const std::map<std::string, double>& params);

/// Sorted, human-readable listing of targets, forward kinds, estimator kinds,
/// integrators, node modes and baselines with their parameters.
std::string list_registry();

}  // namespace enscore::cli
