#pragma once

// Synthetic environment: prompt pool, hidden utility table, black-box teacher,
// in-simulation judge and the teacher-call ledger.

#include <cstddef>
#include <cstdint>
#include <map>
#include <random>
#include <span>
#include <vector>

namespace pualign {

using PromptId = std::size_t;
using ResponseId = std::size_t;

struct TaskSpec {
  std::size_t num_prompts = 64;
  std::size_t response_space_size = 32;
  std::uint64_t utility_seed = 1;
  /// Standard deviation of the i.i.d. normal utility draws.
  double utility_noise_scale = 1.0;
  /// Added to one randomly chosen "gold" response per prompt.
  double gold_bonus = 2.0;
  /// Fraction of responses per prompt that count as latent positives (z = 1).
  double positive_quantile = 0.25;
  /// 0 means the teacher answers with the utility argmax.
  double teacher_temperature = 0.0;

  void validate() const;
};

/// Hidden ground-truth quality u*(x, y), row-major N x V.
class LatentUtility {
 public:
  /// Builds a table directly. Rows whose entries are all equal are perturbed.
  LatentUtility(std::size_t num_prompts, std::size_t num_responses, std::vector<double> table,
                double positive_quantile = 0.25);

  std::size_t num_prompts() const { return num_prompts_; }
  std::size_t num_responses() const { return num_responses_; }
  double operator()(PromptId x, ResponseId y) const;
  std::span<const double> row(PromptId x) const;
  /// z(x, y): whether y is within the top positive_quantile of prompt x.
  bool is_latent_positive(PromptId x, ResponseId y) const;
  const std::vector<double>& table() const { return table_; }

 private:
  std::size_t num_prompts_;
  std::size_t num_responses_;
  std::vector<double> table_;
  std::vector<double> positive_threshold_;
};

struct Task {
  std::vector<PromptId> prompts;
  LatentUtility utility;
};

/// Deterministic in spec.utility_seed; throws on an invalid spec.
Task generate_task(const TaskSpec& spec);

class BudgetLedger {
 public:
  void record(PromptId x);
  std::uint64_t total_calls() const { return total_; }
  std::uint64_t calls_for(PromptId x) const;
  const std::map<PromptId, std::uint64_t>& per_prompt() const { return per_prompt_; }

 private:
  std::uint64_t total_ = 0;
  std::map<PromptId, std::uint64_t> per_prompt_;
};

/// Black-box teacher. Every query is charged to the ledger. Not thread-safe:
/// all calls are expected from the coordinating thread.
class TeacherOracle {
 public:
  TeacherOracle(const LatentUtility& utility, double temperature, BudgetLedger& ledger,
                std::uint64_t seed);

  /// T(x): argmax utility (smallest index on ties) at temperature 0, otherwise a
  /// sample from softmax(u*(x, .) / temperature).
  ResponseId respond(PromptId x);

  /// Teacher-as-judge scoring of one candidate. Also charged to the ledger.
  double judge_score(PromptId x, ResponseId y);

  const BudgetLedger& ledger() const { return ledger_; }

 private:
  void check_prompt(PromptId x) const;

  const LatentUtility& utility_;
  double temperature_;
  BudgetLedger& ledger_;
  std::mt19937_64 rng_;
};

enum class Verdict { a_wins, b_wins, tie };

/// A wins when u*(x, ya) - u*(x, yb) > tie_band, B wins when below -tie_band.
Verdict judge_compare(const LatentUtility& utility, PromptId x, ResponseId ya, ResponseId yb,
                      double tie_band);

/// (wins + 0.5 * ties) / total. Throws on an empty list.
double win_rate(std::span<const Verdict> verdicts);

/// SplitMix64 finalizer, used to derive independent stream seeds.
std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b);

}  // namespace pualign
