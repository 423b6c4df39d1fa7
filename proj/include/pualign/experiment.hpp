#pragma once

// Runs one configured experiment end to end and the multi-run campaigns
// (method comparison, hyperparameter sweep) built on top of it.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "pualign/config.hpp"
#include "pualign/policy.hpp"
#include "pualign/trainer.hpp"

namespace pualign {

struct MetricsRow {
  std::size_t step = 0;
  int stage = 1;
  double loss = 0.0;
  double kl_to_ref = 0.0;
  double mean_margin = 0.0;
  double win_rate_vs_opponent = 0.0;
  std::uint64_t teacher_calls = 0;

  bool operator==(const MetricsRow&) const = default;
};

struct ExperimentOptions {
  /// Keep one JSON record per logged training event.
  bool record_run_log = true;
  /// Emit a metrics row (with a win-rate evaluation) every eval.interval steps.
  bool interval_metrics = true;
  /// Where intermediate checkpoints go when output.checkpoint_interval > 0.
  std::optional<std::filesystem::path> checkpoint_dir;
};

struct ExperimentResult {
  std::vector<MetricsRow> metrics;
  std::vector<StepStats> history;
  /// First Stage-II step, equal to stage1_steps.
  std::size_t stage_transition_step = 0;
  std::vector<std::string> run_log;
  Policy final_policy{1, 2};
  std::optional<PolicySnapshot> sft;
  double final_win_rate = 0.0;
  std::uint64_t teacher_calls = 0;
  /// Set when training stopped on a non-finite update; final_policy then holds
  /// the last good parameters.
  std::optional<std::string> divergence;
};

ExperimentResult run_experiment(const ExperimentConfig& cfg, const ExperimentOptions& options = {});

/// Copy of cfg with both the task seed and the training seed set to `seed`.
ExperimentConfig with_seed(const ExperimentConfig& cfg, std::uint64_t seed);

struct CampaignRun {
  std::string label;  // method name, or the swept value
  double value = 0.0;
  std::uint64_t seed = 0;
  double win_rate = 0.0;
  std::uint64_t teacher_calls = 0;
  bool diverged = false;
};

struct SummaryRow {
  std::string label;
  double value = 0.0;
  double median = 0.0;
  double min = 0.0;
  double max = 0.0;
  std::uint64_t teacher_calls = 0;
  std::size_t runs = 0;
};

/// Every campaign method on every campaign seed.
std::vector<CampaignRun> run_compare(const ExperimentConfig& cfg);
/// config.train.method at each sweep value on every campaign seed.
std::vector<CampaignRun> run_sweep(const ExperimentConfig& cfg);

/// Groups runs by label (first-seen order) and reports median/min/max.
std::vector<SummaryRow> summarize(const std::vector<CampaignRun>& runs);

double median(std::vector<double> values);

}  // namespace pualign
