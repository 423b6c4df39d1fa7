#pragma once

// Subcommand bodies behind the pualign CLI. Each returns the process exit
// status and writes human-readable output to `out` and diagnostics to `err`.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>

namespace pualign {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitConfigError = 2;
inline constexpr int kExitDiverged = 3;

struct CommandOptions {
  std::optional<std::string> config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
  std::size_t trials = 10000;
};

/// PU_ALIGN_OUT, then --out, then output.dir from the config.
std::string resolve_output_dir(const std::optional<std::string>& cli_out, const std::string& config_dir);

int cmd_train(const CommandOptions& opts, std::ostream& out, std::ostream& err);
int cmd_compare(const CommandOptions& opts, std::ostream& out, std::ostream& err);
int cmd_sweep(const CommandOptions& opts, std::ostream& out, std::ostream& err);
int cmd_check_theorems(const CommandOptions& opts, std::ostream& out, std::ostream& err);
int cmd_gradcheck(const CommandOptions& opts, std::ostream& out, std::ostream& err);
/// Re-validates a finished run directory: metrics parse, run-log records
/// round-trip and carry valid distributions, checkpoints decode.
int cmd_report(const CommandOptions& opts, std::ostream& out, std::ostream& err);

}  // namespace pualign
