#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "pualign/artifacts.hpp"
#include "pualign/checkpoint.hpp"
#include "pualign/commands.hpp"
#include "pualign/config.hpp"
#include "pualign/evaluation.hpp"
#include "pualign/experiment.hpp"
#include "pualign/gradcheck.hpp"

using namespace pualign;
namespace fs = std::filesystem;

namespace {

const char* kMinimal = R"(# tiny run
task.n = 8
task.v = 8
train.method = ldl_grpo
train.k = 4
train.batch_size = 4
train.stage1_steps = 200
train.stage2_steps = 300
train.learning_rate = 0.5
eval.interval = 100
eval.samples_per_prompt = 16
output.log_interval = 50
)";

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("pualign_harness_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

fs::path write_config(const fs::path& dir, const std::string& text) {
  const fs::path p = dir / "run.cfg";
  std::ofstream(p) << text;
  return p;
}

CommandOptions options_for(const fs::path& cfg, const fs::path& out) {
  CommandOptions o;
  o.config_path = cfg.string();
  o.out_dir = out.string();
  return o;
}

}  // namespace

TEST_CASE("config parsing") {
  const ExperimentConfig c = parse_config(kMinimal);
  CHECK(c.task.num_prompts == 8);
  CHECK(c.train.k == 4);
  CHECK(c.train.method == Method::ldl_grpo);
  CHECK(c.train.pu.tau == 1.2);
  CHECK(c.train.beta == 0.01);
  CHECK(c.eval.opponent == Opponent::frozen_sft);

  const ExperimentConfig d = parse_config("train.pu.tau = 0.75\ncampaign.seeds = 4, 9\ncampaign.methods = sft_only,ldl_grpo,anchor_grpo\n");
  CHECK(d.train.pu.tau == 0.75);
  CHECK(d.campaign.seeds == std::vector<std::uint64_t>{4, 9});
  CHECK(d.campaign.methods.size() == 3);
}

TEST_CASE("config errors carry line and key") {
  auto error_of = [](const std::string& text) -> ConfigError {
    try {
      parse_config(text);
    } catch (const ConfigError& e) {
      return e;
    }
    FAIL("expected a ConfigError");
    return ConfigError(0, "", "");
  };
  ConfigError e = error_of("task.n = 8\n\ntrain.bogus = 1\n");
  CHECK(e.line() == 3);
  CHECK(e.key() == "train.bogus");

  e = error_of("# comment\ntrain.k = four\n");
  CHECK(e.line() == 2);
  CHECK(e.key() == "train.k");

  e = error_of("train.pu.tau\n");
  CHECK(e.line() == 1);

  e = error_of("train.pu.tau = -1\n");
  CHECK(e.key().find("train") == 0);

  e = error_of("sweep.param = task.n\n");
  CHECK(e.key().find("sweep") == 0);

  CHECK_THROWS_AS(parse_config("train.method = ppo\n"), ConfigError);
}

TEST_CASE("canonical config text round trips") {
  ExperimentConfig c = parse_config(kMinimal);
  c.train.pu.tau = 0.1 + 0.2;
  const std::string text = canonical_config_text(c);
  CHECK(canonical_config_text(parse_config(text)) == text);
  CHECK(parse_config(text).train.pu.tau == 0.1 + 0.2);
  CHECK(config_hash(c) == config_hash(parse_config(text)));
  c.train.beta = 0.02;
  CHECK(config_hash(c) != config_hash(parse_config(text)));
}

TEST_CASE("sweepable keys and defaults") {
  CHECK(is_sweepable("train.pu.tau"));
  CHECK(is_sweepable("train.beta"));
  CHECK_FALSE(is_sweepable("task.n"));
  CHECK_FALSE(is_sweepable("train.nothing"));
  CHECK(default_sweep_values("train.pu.tau") == std::vector<double>{0.6, 0.9, 1.2, 1.5});
  CHECK(default_sweep_values("train.beta") == std::vector<double>{0.001, 0.01, 0.1, 1, 10});
}

TEST_CASE("metrics table round trips") {
  const std::vector<MetricsRow> rows{{9, 1, 2.5, 0.125, 0.0, 0.55, 8}, {19, 2, 0.1 + 0.2, 1e-300, -3.25, 1.0, 8}};
  const std::string text = format_metrics(rows);
  CHECK(text.rfind(std::string(kMetricsHeader) + "\n", 0) == 0);
  CHECK(parse_metrics(text) == rows);
  CHECK(format_metrics(parse_metrics(text)) == text);
  CHECK_THROWS_AS(parse_metrics("step\tloss\n"), std::runtime_error);
  CHECK_THROWS_AS(parse_metrics(std::string(kMetricsHeader) + "\n1\t1\tx\t0\t0\t0\t0\n"), std::runtime_error);
}

TEST_CASE("loss series carries the transition marker") {
  const std::vector<StepStats> h{{0, 1, 2.0, 0, 0, 1}, {1, 1, 1.5, 0, 0, 1}, {2, 2, 0.5, 0, 0, 1}};
  CHECK(format_loss_series(h, 2) == "step\tloss\n0\t2\n1\t1.5\n#transition\t2\n2\t0.5\n");
}

TEST_CASE("evaluation of identical policies is symmetric") {
  TaskSpec spec;
  const Task task = generate_task(spec);
  const Policy p(spec.num_prompts, spec.response_space_size);
  EvalConfig eval;
  const WinRateResult r = evaluate_against_policy(p, p, task.utility, eval, 1);
  CHECK(r.wins + r.losses + r.ties == eval.num_eval_prompts * eval.samples_per_prompt);
  CHECK(r.win_rate == doctest::Approx(0.5).epsilon(0.1));
  CHECK(evaluate_against_policy(p, p, task.utility, eval, 1).win_rate == r.win_rate);
}

TEST_CASE("train writes parseable artifacts and reruns byte-identically") {
  const fs::path dir = scratch("train");
  const fs::path cfg = write_config(dir, kMinimal);
  std::ostringstream out, err;
  REQUIRE(cmd_train(options_for(cfg, dir / "a"), out, err) == kExitOk);
  REQUIRE(cmd_train(options_for(cfg, dir / "b"), out, err) == kExitOk);

  for (const char* f : {"metrics.tsv", "run_log.jsonl", "final.ckpt", "manifest.json", "sft.ckpt", "loss_series.tsv"}) {
    CAPTURE(f);
    CHECK(fs::exists(dir / "a" / f));
    CHECK(read_text_file(dir / "a" / f) == read_text_file(dir / "b" / f));
  }

  const auto rows = parse_metrics(read_text_file(dir / "a" / "metrics.tsv"));
  REQUIRE(rows.size() == 5);
  CHECK(rows.front().stage == 1);
  CHECK(rows.back().stage == 2);
  CHECK(rows.back().step == 499);
  for (const auto& r : rows) CHECK(r.teacher_calls == 8);

  const RunLogCheck log = check_run_log(read_text_file(dir / "a" / "run_log.jsonl"));
  CHECK(log.problems.empty());
  CHECK(log.distributions == 6 * 4);

  const Checkpoint final_ckpt = read_checkpoint(dir / "a" / "final.ckpt");
  CHECK(final_ckpt.logits.rows() == 8);
  CHECK(read_text_file(dir / "a" / "manifest.json").find("\"config_hash\"") != std::string::npos);

  CommandOptions report;
  report.out_dir = (dir / "a").string();
  CHECK(cmd_report(report, out, err) == kExitOk);
}

TEST_CASE("sft_only emits only stage-one metrics") {
  const fs::path dir = scratch("sft_only");
  const fs::path cfg = write_config(dir, std::string(kMinimal) + "train.method = sft_only\n");
  std::ostringstream out, err;
  REQUIRE(cmd_train(options_for(cfg, dir / "run"), out, err) == kExitOk);
  const auto rows = parse_metrics(read_text_file(dir / "run" / "metrics.tsv"));
  REQUIRE(rows.size() == 2);
  for (const auto& r : rows) CHECK(r.stage == 1);
}

TEST_CASE("invalid config exits with a diagnostic") {
  const fs::path dir = scratch("bad");
  const fs::path cfg = write_config(dir, "task.n = 8\ntrain.k = -3\n");
  std::ostringstream out, err;
  CHECK(cmd_train(options_for(cfg, dir / "run"), out, err) == kExitConfigError);
  CHECK(err.str().find("line 2") != std::string::npos);
  CHECK(err.str().find("train.k") != std::string::npos);
  CHECK_FALSE(fs::exists(dir / "run" / "final.ckpt"));
}

TEST_CASE("divergence exits nonzero and keeps the last good checkpoint") {
  const fs::path dir = scratch("diverge");
  const fs::path cfg = write_config(dir, std::string(kMinimal) + "train.optimizer = sgd_momentum\ntrain.learning_rate = 1e308\n");
  std::ostringstream out, err;
  CHECK(cmd_train(options_for(cfg, dir / "run"), out, err) == kExitDiverged);
  CHECK(fs::exists(dir / "run" / "last_good.ckpt"));
  CHECK_FALSE(fs::exists(dir / "run" / "final.ckpt"));
  for (double z : read_checkpoint(dir / "run" / "last_good.ckpt").logits.data()) CHECK(std::isfinite(z));
  CHECK(read_text_file(dir / "run" / "manifest.json").find("\"diverged\"") != std::string::npos);
}

TEST_CASE("PU_ALIGN_OUT overrides --out") {
  CHECK(resolve_output_dir(std::string("cli"), "cfg") == (std::getenv("PU_ALIGN_OUT") ? std::getenv("PU_ALIGN_OUT") : "cli"));
  ::setenv("PU_ALIGN_OUT", "/tmp/from_env", 1);
  CHECK(resolve_output_dir(std::string("cli"), "cfg") == "/tmp/from_env");
  ::unsetenv("PU_ALIGN_OUT");
  CHECK(resolve_output_dir(std::nullopt, "cfg") == "cfg");
}

TEST_CASE("sweep emits one sorted row per value") {
  const fs::path dir = scratch("sweep");
  const fs::path cfg = write_config(dir, std::string(kMinimal) +
                                             "campaign.seeds = 1\nsweep.param = train.pu.tau\nsweep.values = 1.5, 0.6, 1.2, 0.9\n");
  std::ostringstream out, err;
  REQUIRE(cmd_sweep(options_for(cfg, dir / "out"), out, err) == kExitOk);
  CHECK(err.str().find("fewer than 3 seeds") != std::string::npos);
  std::istringstream table(read_text_file(dir / "out" / "sweep.tsv"));
  std::string line;
  std::getline(table, line);
  std::vector<double> values;
  while (std::getline(table, line)) {
    CHECK(line.rfind("train.pu.tau\t", 0) == 0);
    values.push_back(std::stod(line.substr(line.find('\t') + 1)));
  }
  CHECK(values == std::vector<double>{0.6, 0.9, 1.2, 1.5});
}

TEST_CASE("unknown sweep parameter is a config error") {
  const fs::path dir = scratch("sweep_bad");
  const fs::path cfg = write_config(dir, std::string(kMinimal) + "sweep.param = train.bogus\n");
  std::ostringstream out, err;
  CHECK(cmd_sweep(options_for(cfg, dir / "out"), out, err) == kExitConfigError);
}

TEST_CASE("compare reports one row per method with the anchor budget") {
  const fs::path dir = scratch("compare");
  const fs::path cfg = write_config(dir, std::string(kMinimal) + "campaign.seeds = 1, 2, 3\n");
  std::ostringstream out, err;
  REQUIRE(cmd_compare(options_for(cfg, dir / "out"), out, err) == kExitOk);
  std::istringstream table(read_text_file(dir / "out" / "compare.tsv"));
  std::string line;
  std::getline(table, line);
  CHECK(line == "method\tmedian_win_rate\tmin_win_rate\tmax_win_rate\truns\tteacher_calls");
  std::vector<std::string> rows;
  while (std::getline(table, line)) rows.push_back(line);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].rfind("sft_only\t", 0) == 0);
  CHECK(rows[1].rfind("ldl_grpo\t", 0) == 0);
  for (const auto& r : rows) CHECK(r.substr(r.rfind('\t') + 1) == "8");
}

TEST_CASE("sft_only against its own frozen copy wins about half the time") {
  ExperimentConfig c = parse_config("train.method = sft_only\ntrain.stage1_steps = 300\n");
  ExperimentOptions o;
  o.record_run_log = false;
  o.interval_metrics = false;
  for (std::uint64_t seed : {1, 2, 3}) {
    CHECK(run_experiment(with_seed(c, seed), o).final_win_rate == doctest::Approx(0.5).epsilon(0.1));
  }
}

TEST_CASE("theorem and gradient reports") {
  std::ostringstream a, b, err;
  CommandOptions o;
  o.trials = 1;
  CHECK(cmd_check_theorems(o, a, err) == kExitOk);
  std::size_t lines = 0;
  for (char ch : a.str()) lines += ch == '\n';
  CHECK(lines == 5);

  o.seed = 3;
  std::ostringstream g1, g2;
  CHECK(cmd_gradcheck(o, g1, err) == kExitOk);
  CHECK(cmd_gradcheck(o, g2, err) == kExitOk);
  CHECK(g1.str() == g2.str());
  const auto rows = run_gradcheck(3);
  CHECK(rows.size() == 5);
  for (const auto& r : rows) CHECK(r.max_relative_error < kGradcheckTolerance);
}
