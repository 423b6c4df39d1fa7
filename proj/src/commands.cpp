#include "pualign/commands.hpp"

#include <cstdlib>
#include <filesystem>
#include <iomanip>
#include <ostream>

#include "pualign/artifacts.hpp"
#include "pualign/checkpoint.hpp"
#include "pualign/config.hpp"
#include "pualign/experiment.hpp"
#include "pualign/gradcheck.hpp"
#include "pualign/theorem_checks.hpp"

namespace pualign {

namespace fs = std::filesystem;

std::string resolve_output_dir(const std::optional<std::string>& cli_out, const std::string& config_dir) {
  if (const char* env = std::getenv("PU_ALIGN_OUT"); env != nullptr && *env != '\0') return env;
  if (cli_out) return *cli_out;
  return config_dir;
}

namespace {

void print_config_error(const ConfigError& e, std::ostream& err) {
  err << "config error";
  if (e.line() > 0) err << " at line " << e.line();
  if (!e.key().empty()) err << " (" << e.key() << ")";
  err << ": " << e.message() << '\n';
}

/// Loads and validates the config, applying --seed. Returns nullopt after
/// printing a diagnostic.
std::optional<ExperimentConfig> load_for_command(const CommandOptions& opts, std::ostream& err) {
  if (!opts.config_path) {
    err << "missing --config\n";
    return std::nullopt;
  }
  try {
    ExperimentConfig cfg = load_config(*opts.config_path);
    if (opts.seed) cfg = with_seed(cfg, *opts.seed);
    cfg.validate();
    return cfg;
  } catch (const ConfigError& e) {
    print_config_error(e, err);
  } catch (const std::exception& e) {
    err << "config error: " << e.what() << '\n';
  }
  return std::nullopt;
}

}  // namespace

int cmd_train(const CommandOptions& opts, std::ostream& out, std::ostream& err) {
  auto cfg = load_for_command(opts, err);
  if (!cfg) return kExitConfigError;
  const fs::path dir = resolve_output_dir(opts.out_dir, cfg->output.dir);
  fs::create_directories(dir);

  ExperimentOptions options;
  options.checkpoint_dir = dir;
  const ExperimentResult result = run_experiment(*cfg, options);
  const auto files = write_run_artifacts(dir, *cfg, result);

  out << "method\t" << to_string(cfg->train.method) << '\n'
      << "final_win_rate\t" << format_double(result.final_win_rate) << '\n'
      << "teacher_calls\t" << result.teacher_calls << '\n'
      << "output\t" << dir.string() << '\n';
  if (result.divergence) {
    err << "training diverged at " << *result.divergence << "; last good policy kept in "
        << (dir / "last_good.ckpt").string() << '\n';
    return kExitDiverged;
  }
  return kExitOk;
}

int cmd_compare(const CommandOptions& opts, std::ostream& out, std::ostream& err) {
  auto cfg = load_for_command(opts, err);
  if (!cfg) return kExitConfigError;
  if (cfg->campaign.methods.size() < 2) err << "warning: fewer than 2 methods configured\n";
  if (cfg->campaign.seeds.size() < 3) err << "warning: fewer than 3 seeds; medians are not robust\n";

  const auto runs = run_compare(*cfg);
  const std::string table = format_summary(summarize(runs), "method", false);
  const fs::path dir = resolve_output_dir(opts.out_dir, cfg->output.dir);
  fs::create_directories(dir);
  write_file_atomic(dir / "compare.tsv", table);
  write_file_atomic(dir / "compare_runs.tsv", format_campaign_runs(runs));
  out << table;
  for (const auto& r : runs) {
    if (r.diverged) err << "warning: " << r.label << " diverged on seed " << r.seed << '\n';
  }
  return kExitOk;
}

int cmd_sweep(const CommandOptions& opts, std::ostream& out, std::ostream& err) {
  auto cfg = load_for_command(opts, err);
  if (!cfg) return kExitConfigError;
  if (!cfg->sweep) {
    err << "config error (sweep.param): no sweep parameter configured\n";
    return kExitConfigError;
  }
  if (cfg->campaign.seeds.size() < 3) err << "warning: fewer than 3 seeds; medians are not robust\n";

  std::vector<CampaignRun> runs;
  try {
    runs = run_sweep(*cfg);
  } catch (const ConfigError& e) {
    print_config_error(e, err);
    return kExitConfigError;
  }
  std::string table = "parameter\tvalue\tmedian_win_rate\tmin_win_rate\tmax_win_rate\truns\n";
  for (const auto& row : summarize(runs)) {
    table += cfg->sweep->param + '\t' + format_double(row.value) + '\t' + format_double(row.median) + '\t' +
             format_double(row.min) + '\t' + format_double(row.max) + '\t' + std::to_string(row.runs) + '\n';
  }
  const fs::path dir = resolve_output_dir(opts.out_dir, cfg->output.dir);
  fs::create_directories(dir);
  write_file_atomic(dir / "sweep.tsv", table);
  write_file_atomic(dir / "sweep_runs.tsv", format_campaign_runs(runs));
  out << table;
  return kExitOk;
}

int cmd_check_theorems(const CommandOptions& opts, std::ostream& out, std::ostream& err) {
  if (opts.trials == 0) {
    err << "--trials must be at least 1\n";
    return kExitConfigError;
  }
  const TheoremReport report = run_theorem_checks(opts.trials, opts.seed.value_or(0));
  out << "property\tcases\tviolations\n";
  for (const auto& p : report.properties) out << p.name << '\t' << p.cases << '\t' << p.violations << '\n';
  return report.passed() ? kExitOk : kExitFailure;
}

int cmd_gradcheck(const CommandOptions& opts, std::ostream& out, std::ostream&) {
  const auto rows = run_gradcheck(opts.seed.value_or(0));
  bool ok = true;
  out << "operation\tinstances\tmax_relative_error\n";
  for (const auto& r : rows) {
    out << r.operation << '\t' << r.instances << '\t' << std::setprecision(3) << std::scientific
        << r.max_relative_error << std::defaultfloat << '\n';
    ok = ok && r.max_relative_error < kGradcheckTolerance;
  }
  return ok ? kExitOk : kExitFailure;
}

int cmd_report(const CommandOptions& opts, std::ostream& out, std::ostream& err) {
  const auto dir_text = resolve_output_dir(opts.out_dir, "");
  if (dir_text.empty()) {
    err << "missing --out\n";
    return kExitConfigError;
  }
  const fs::path dir = dir_text;
  bool ok = true;
  try {
    const auto rows = parse_metrics(read_text_file(dir / "metrics.tsv"));
    for (std::size_t i = 1; i < rows.size(); ++i) {
      if (rows[i].teacher_calls < rows[i - 1].teacher_calls) {
        err << "metrics.tsv: teacher_calls decreases at step " << rows[i].step << '\n';
        ok = false;
      }
    }
    out << "metrics_rows\t" << rows.size() << '\n';
  } catch (const std::exception& e) {
    err << "metrics.tsv: " << e.what() << '\n';
    ok = false;
  }
  if (fs::exists(dir / "run_log.jsonl")) {
    const RunLogCheck check = check_run_log(read_text_file(dir / "run_log.jsonl"));
    out << "run_log_records\t" << check.records << '\n' << "distributions_checked\t" << check.distributions << '\n';
    for (const auto& p : check.problems) err << "run_log.jsonl " << p << '\n';
    ok = ok && check.problems.empty();
  }
  for (const char* name : {"sft.ckpt", "final.ckpt", "last_good.ckpt"}) {
    if (!fs::exists(dir / name)) continue;
    try {
      const Checkpoint ckpt = read_checkpoint(dir / name);
      out << name << '\t' << ckpt.logits.rows() << 'x' << ckpt.logits.cols() << '\n';
    } catch (const std::exception& e) {
      err << name << ": " << e.what() << '\n';
      ok = false;
    }
  }
  out << "status\t" << (ok ? "ok" : "invalid") << '\n';
  return ok ? kExitOk : kExitFailure;
}

}  // namespace pualign
