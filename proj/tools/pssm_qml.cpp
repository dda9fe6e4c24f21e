#include "pssm/cli/reproduce.hpp"

#include <CLI11.hpp>

#include <iostream>

using namespace pssm::cli;

int main(int argc, char** argv) {
  CLI::App app{"Quasi-maximum-likelihood estimation for polynomial state space models"};
  app.set_version_flag("--version", version_string());
  app.require_subcommand(1);

  std::string config_path, out_dir, target;
  std::uint64_t seed = 0;
  bool full = false;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "experiment configuration (JSON)")->required();
    sub->add_option("--out", out_dir, "output directory (overrides output.dir)");
    sub->add_option("--seed", seed, "simulation seed (overrides data.simulate.seed)");
  };
  CLI::App* simulate = app.add_subcommand("simulate", "simulate a path and write obs.csv and manifest.json");
  CLI::App* estimate = app.add_subcommand("estimate", "QML estimate; writes estimate.json and path.csv");
  CLI::App* asymptotics = app.add_subcommand("asymptotics", "asymptotic covariance; writes covariance.json");
  CLI::App* test = app.add_subcommand("test", "Wald, LM and LR tests; writes test.json");
  for (auto* sub : {simulate, estimate, asymptotics, test}) add_common(sub);
  CLI::App* reproduce = app.add_subcommand("reproduce", "reproduce a published constant; writes report.md");
  reproduce->add_option("target", target, "heston-std | ou-std | test-sizes | heston-smallscale")
      ->required()
      ->check(CLI::IsMember({"heston-std", "ou-std", "test-sizes", "heston-smallscale"}));
  reproduce->add_option("--out", out_dir, "output directory");
  reproduce->add_option("--seed", seed, "base seed for replications");
  reproduce->add_flag("--full", full, "full-scale N and T (hours)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? exit_ok : exit_input;
  }

  return guarded([&] {
    RunOptions run;
    if (!out_dir.empty()) run.out_dir = out_dir;
    run.full = full;
    run.threads = threads_from_env();
    for (auto* sub : {simulate, estimate, asymptotics, test, reproduce})
      if (sub->count("--seed") > 0) run.seed = seed;
    if (reproduce->parsed()) return cmd_reproduce(target, run);
    const ExperimentConfig cfg = load_config(config_path);
    if (simulate->parsed()) return cmd_simulate(cfg, run);
    if (estimate->parsed()) return cmd_estimate(cfg, run);
    if (asymptotics->parsed()) return cmd_asymptotics(cfg, run);
    return cmd_test(cfg, run);
  });
}
