#pragma once

// On-disk layout of one training run:
//   metrics.tsv      one row per metrics window
//   run_log.jsonl    one JSON record per logged training event
//   loss_series.tsv  per-step loss with a "#transition" marker row
//   sft.ckpt         frozen reference after Stage I
//   final.ckpt       final policy (last_good.ckpt instead after divergence)
//   manifest.json    config hash, seeds, file list and headline numbers

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "pualign/config.hpp"
#include "pualign/experiment.hpp"

namespace pualign {

inline constexpr std::string_view kMetricsHeader =
    "step\tstage\tloss\tkl_to_ref\tmean_margin\twin_rate_vs_opponent\tteacher_calls";

std::string format_metrics(const std::vector<MetricsRow>& rows);
/// Throws std::runtime_error on a malformed table.
std::vector<MetricsRow> parse_metrics(std::string_view text);

std::string format_loss_series(const std::vector<StepStats>& history, std::size_t transition_step);

std::string format_run_log(const std::vector<std::string>& records);

/// Hex FNV-1a of the canonical config text.
std::string config_hash(const ExperimentConfig& cfg);

std::string format_manifest(const ExperimentConfig& cfg, const ExperimentResult& result,
                            const std::vector<std::string>& files);

/// Writes every artifact into `dir` (created if needed) and returns the file names.
std::vector<std::string> write_run_artifacts(const std::filesystem::path& dir, const ExperimentConfig& cfg,
                                             const ExperimentResult& result);

std::string format_summary(const std::vector<SummaryRow>& rows, std::string_view label_header, bool with_value);
std::string format_campaign_runs(const std::vector<CampaignRun>& runs);

struct RunLogCheck {
  std::size_t records = 0;
  std::size_t distributions = 0;
  std::vector<std::string> problems;
};

/// Parses every record, checks each D_x and q_theta is a probability vector and
/// that re-serialising a record reproduces its bytes.
RunLogCheck check_run_log(std::string_view text);

std::string read_text_file(const std::filesystem::path& path);

}  // namespace pualign
