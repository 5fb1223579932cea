#include "enscore_cli/experiment.hpp"
#include "enscore_cli/registry.hpp"

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv) {
  CLI::App app{"Ensemble score-based reverse-diffusion sampler"};
  app.set_version_flag("--version", enscore::cli::version());
  app.require_subcommand(1);

  std::string config_path;
  std::uint64_t seed = 0;
  std::string output;
  int threads = 1;

  auto* run = app.add_subcommand("run", "Run one experiment described by a config file");
  run->add_option("config", config_path, "YAML config file")->required();
  auto* seed_opt = run->add_option("--seed", seed, "Override the config seed");
  auto* output_opt = run->add_option("--output", output, "Override the output directory");
  run->add_option("--threads", threads, "Worker threads")->check(CLI::PositiveNumber);

  app.add_subcommand("list", "List registered targets, estimators and integrators");

  CLI11_PARSE(app, argc, argv);

  if (app.got_subcommand("list")) {
    std::cout << enscore::cli::list_registry();
    return 0;
  }

  enscore::cli::RunOptions options;
  if (*seed_opt) options.seed = seed;
  if (*output_opt) options.output = output;
  options.threads = threads;
  return enscore::cli::run_experiment(config_path, options, std::cerr);
}
