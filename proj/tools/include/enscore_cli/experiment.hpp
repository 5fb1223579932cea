#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>

namespace enscore::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInvalidConfig = 2;
inline constexpr int kExitRuntimeAbort = 3;

struct RunOptions {
  std::optional<std::uint64_t> seed;
  std::optional<std::string> output;
  int threads = 1;
};

/// Loads, validates and runs one experiment, writing samples.csv,
/// summary.json, energy.json (when a reference exists) and run_meta.json.
/// Returns 0, kExitInvalidConfig or kExitRuntimeAbort; messages go to `err`.
int run_experiment(const std::string& config_path, const RunOptions& options, std::ostream& err);

const char* version();

}  // namespace enscore::cli
