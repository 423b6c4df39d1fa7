#include <iostream>

#include <CLI11.hpp>

#include "pualign/commands.hpp"

int main(int argc, char** argv) {
  CLI::App app{"pualign: anchor-conditioned distribution-matching alignment on a synthetic task"};
  app.require_subcommand(1);

  pualign::CommandOptions opts;
  std::uint64_t seed = 0;
  std::string config, out;

  auto add_common = [&](CLI::App* sub, bool needs_config) {
    auto* c = sub->add_option("--config", config, "Experiment config file");
    if (needs_config) c->required()->check(CLI::ExistingFile);
    sub->add_option("--seed", seed, "Seed (overrides the task and training seeds)");
    sub->add_option("--out", out, "Output directory (PU_ALIGN_OUT takes precedence)");
  };

  auto* train = app.add_subcommand("train", "Run Stage I and Stage II and write run artifacts");
  add_common(train, true);
  auto* compare = app.add_subcommand("compare", "Train every configured method on every seed");
  add_common(compare, true);
  auto* sweep = app.add_subcommand("sweep", "Sweep one training parameter");
  add_common(sweep, true);
  auto* theorems = app.add_subcommand("check-theorems", "Randomized property checks on the label distribution");
  theorems->add_option("--seed", seed, "RNG seed");
  theorems->add_option("--trials", opts.trials, "Number of random trials")->check(CLI::PositiveNumber);
  auto* gradcheck = app.add_subcommand("gradcheck", "Finite-difference gradient checks");
  gradcheck->add_option("--seed", seed, "RNG seed");
  auto* report = app.add_subcommand("report", "Validate a finished run directory");
  report->add_option("--out", out, "Run directory");

  CLI11_PARSE(app, argc, argv);

  if (!config.empty()) opts.config_path = config;
  if (!out.empty()) opts.out_dir = out;
  for (auto* sub : {train, compare, sweep, theorems, gradcheck}) {
    if (sub->parsed() && sub->count("--seed") > 0) opts.seed = seed;
  }

  try {
    if (train->parsed()) return pualign::cmd_train(opts, std::cout, std::cerr);
    if (compare->parsed()) return pualign::cmd_compare(opts, std::cout, std::cerr);
    if (sweep->parsed()) return pualign::cmd_sweep(opts, std::cout, std::cerr);
    if (theorems->parsed()) return pualign::cmd_check_theorems(opts, std::cout, std::cerr);
    if (gradcheck->parsed()) return pualign::cmd_gradcheck(opts, std::cout, std::cerr);
    if (report->parsed()) return pualign::cmd_report(opts, std::cout, std::cerr);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return pualign::kExitFailure;
  }
  return pualign::kExitFailure;
}
