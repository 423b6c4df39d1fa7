#pragma once

// Experiment configuration: flat "key = value" text with dotted section keys.
// Blank lines and lines starting with '#' are ignored; unknown keys are errors.
//
//   task.n = 64
//   train.method = ldl_grpo
//   train.pu.tau = 1.2
//   campaign.methods = sft_only, ldl_grpo
//   sweep.param = train.beta
//   sweep.values = 0.001, 0.01, 0.1, 1, 10

#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "pualign/sim_env.hpp"
#include "pualign/trainer.hpp"

namespace pualign {

enum class Opponent { teacher, frozen_sft };

Opponent parse_opponent(std::string_view name);
std::string_view to_string(Opponent opponent);

struct EvalConfig {
  std::size_t num_eval_prompts = 64;
  std::size_t samples_per_prompt = 64;
  double tie_band = 0.1;
  Opponent opponent = Opponent::frozen_sft;
  /// Steps between metrics rows; 0 means one row at the end of each stage.
  std::size_t interval = 1000;
};

struct OutputConfig {
  std::string dir = "out";
  /// Steps between run-log records; 0 disables the per-event log.
  std::size_t log_interval = 100;
  /// Steps between intermediate checkpoints; 0 keeps only the final one.
  std::size_t checkpoint_interval = 0;
};

struct SweepSpec {
  std::string param;
  std::vector<double> values;
};

struct CampaignSpec {
  std::vector<Method> methods{Method::sft_only, Method::ldl_grpo};
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
};

struct ExperimentConfig {
  TaskSpec task;
  TrainConfig train;
  EvalConfig eval;
  OutputConfig output;
  CampaignSpec campaign;
  std::optional<SweepSpec> sweep;

  void validate() const;
};

class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::size_t line, const std::string& key, const std::string& message);
  std::size_t line() const { return line_; }
  const std::string& key() const { return key_; }
  const std::string& message() const { return message_; }

 private:
  std::size_t line_;
  std::string key_;
  std::string message_;
};

ExperimentConfig parse_config(std::string_view text);
ExperimentConfig load_config(const std::string& path);

/// Sets one dotted key from its textual value. Throws ConfigError (line 0) for
/// unknown keys or malformed values.
void set_config_value(ExperimentConfig& cfg, std::string_view key, std::string_view value);

/// Keys a sweep may vary: train.* scalars, including the train.pu.* block.
bool is_sweepable(std::string_view key);

/// Canonical "key = value" listing of every setting, in a fixed key order.
std::string canonical_config_text(const ExperimentConfig& cfg);

/// Default sweep grids: train.pu.tau over [0.6, 1.5], train.beta over
/// {0.001, 0.01, 0.1, 1, 10}.
std::vector<double> default_sweep_values(std::string_view param);

/// Shortest text that parses back to exactly `v`.
std::string format_double(double v);

}  // namespace pualign
