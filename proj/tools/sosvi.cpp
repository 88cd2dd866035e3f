#include <iostream>

#include <CLI11.hpp>

#include "sosvi/harness/checks.hpp"
#include "sosvi/harness/experiment.hpp"

int main(int argc, char** argv) {
  using namespace sosvi::harness;

  CLI::App app{"Second-order stochastic variational inference experiments"};
  app.require_subcommand(1);

  auto* run = app.add_subcommand("run", "Run the experiment described by a config file");
  std::string config;
  std::string scheme;
  std::uint64_t seed = 0;
  std::size_t samples = 0;
  std::size_t max_iters = 0;
  std::string out_dir;
  run->add_option("--config", config, "Experiment config (JSON)")->required();
  auto* scheme_opt = run->add_option("--scheme", scheme, "Run only this scheme");
  auto* seed_opt = run->add_option("--seed", seed, "Run only this seed");
  auto* samples_opt = run->add_option("--samples", samples, "Set T and S for every scheme");
  auto* iters_opt = run->add_option("--max-iters", max_iters, "Iteration cap for every scheme");
  auto* out_opt = run->add_option("--out-dir", out_dir, "Output directory");

  auto* check = app.add_subcommand("check", "Run the oracle and invariant checks");
  bool verbose = false;
  check->add_flag("-v,--verbose", verbose, "Print numeric margins for every check");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? exit_ok : exit_config_error;
  }

  if (*run) {
    Overrides o;
    if (*scheme_opt) o.scheme = scheme;
    if (*seed_opt) o.seed = seed;
    if (*samples_opt) o.samples = samples;
    if (*iters_opt) o.max_iterations = max_iters;
    if (*out_opt) o.output_dir = out_dir;
    return run_experiment_file(config, o, std::cerr);
  }
  return run_check_command(std::cout, verbose);
}
