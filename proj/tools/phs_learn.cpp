#include <iostream>

#include <CLI11.hpp>

#include "phs/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Learn stability-preserving port-Hamiltonian models from trajectory data"};
  app.set_version_flag("--version", phs::kToolVersion);

  phs::CliOptions options;
  std::uint64_t seed = 0;
  app.add_option("command", options.command, "gen-data | train | eval | roa | check")
      ->required()
      ->check(CLI::IsMember({"gen-data", "train", "eval", "roa", "check"}));
  app.add_option("--config", options.config, "JSON configuration file")->required();
  app.add_option("--out", options.out, "output directory")->capture_default_str();
  auto* seed_opt = app.add_option("--seed", seed, "override the configured seed");
  app.add_flag("--baseline-penalty", options.baseline_penalty,
               "train the ungated penalty baseline instead of the gated model");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : phs::kExitUsage;
  }
  if (seed_opt->count() > 0) options.seed = seed;
  return phs::run_command(options, std::cout, std::cerr);
}
