#include "pcbf/cli.hpp"

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv) {
  CLI::App app{"Parametric control barrier function experiments"};
  app.require_subcommand(1);

  pcbf::RunRequest req;
  std::uint64_t seed = 0;
  std::size_t trials = 0;
  std::string config, out, styles;

  auto* run = app.add_subcommand("run", "Run an experiment and write its outputs");
  run->add_option("experiment", req.experiment, "predict | sweep | adaptive | invariance")
      ->required();
  auto* o_config = run->add_option("--config", config, "Configuration file");
  auto* o_seed = run->add_option("--seed", seed, "Random seed");
  auto* o_trials = run->add_option("--trials", trials, "Number of trials (predict, invariance)")
                       ->check(CLI::PositiveNumber);
  auto* o_out = run->add_option("--out", out, std::string("Output directory (default $") +
                                                  pcbf::kOutDirEnv + "/<experiment>)");
  auto* o_styles = run->add_option("--styles", styles, "Style list file (sweep only)");

  std::string validate_path;
  auto* validate = app.add_subcommand("validate", "Check a configuration file rule by rule");
  validate->add_option("config", validate_path, "Configuration file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : pcbf::exit_code::kUsage;
  }

  if (*validate) return pcbf::cmd_validate(validate_path, std::cout, std::cerr);

  if (*o_config) req.config = config;
  if (*o_seed) req.seed = seed;
  if (*o_trials) req.trials = trials;
  if (*o_out) req.out_dir = out;
  if (*o_styles) req.styles = styles;
  return pcbf::cmd_run(req, std::cout, std::cerr);
}
