#include "pualign/sim_env.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "pualign/core.hpp"

namespace pualign {

std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
  std::uint64_t z = a + 0x9e3779b97f4a7c15ULL * (b + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

void TaskSpec::validate() const {
  if (num_prompts < 1) throw std::invalid_argument("task: num_prompts must be >= 1");
  if (response_space_size < 2) throw std::invalid_argument("task: response_space_size must be >= 2");
  if (!(utility_noise_scale >= 0.0)) throw std::invalid_argument("task: utility_noise_scale must be >= 0");
  if (!std::isfinite(gold_bonus)) throw std::invalid_argument("task: gold_bonus must be finite");
  if (!(positive_quantile > 0.0 && positive_quantile <= 1.0)) {
    throw std::invalid_argument("task: positive_quantile must be in (0, 1]");
  }
  if (!(teacher_temperature >= 0.0)) throw std::invalid_argument("task: teacher_temperature must be >= 0");
}

LatentUtility::LatentUtility(std::size_t num_prompts, std::size_t num_responses, std::vector<double> table,
                             double positive_quantile)
    : num_prompts_(num_prompts), num_responses_(num_responses), table_(std::move(table)) {
  if (num_prompts_ < 1 || num_responses_ < 2) throw std::invalid_argument("utility: degenerate shape");
  if (table_.size() != num_prompts_ * num_responses_) throw std::invalid_argument("utility: table size mismatch");
  for (double u : table_) {
    if (!std::isfinite(u)) throw std::invalid_argument("utility: non-finite entry");
  }
  const auto top = static_cast<std::size_t>(
      std::max(1.0, std::ceil(positive_quantile * static_cast<double>(num_responses_))));
  positive_threshold_.resize(num_prompts_);
  for (std::size_t x = 0; x < num_prompts_; ++x) {
    auto first = table_.begin() + static_cast<std::ptrdiff_t>(x * num_responses_);
    auto last = first + static_cast<std::ptrdiff_t>(num_responses_);
    auto [lo, hi] = std::minmax_element(first, last);
    if (*lo == *hi) {
      // Degenerate row: break the tie with a deterministic ramp.
      for (std::size_t y = 0; y < num_responses_; ++y) first[static_cast<std::ptrdiff_t>(y)] += 1e-3 * static_cast<double>(y);
    }
    std::vector<double> sorted(first, last);
    std::sort(sorted.begin(), sorted.end(), std::greater<>());
    positive_threshold_[x] = sorted[std::min(top, num_responses_) - 1];
  }
}

double LatentUtility::operator()(PromptId x, ResponseId y) const {
  if (x >= num_prompts_ || y >= num_responses_) throw std::out_of_range("utility: index out of range");
  return table_[x * num_responses_ + y];
}

std::span<const double> LatentUtility::row(PromptId x) const {
  if (x >= num_prompts_) throw std::out_of_range("utility: prompt out of range");
  return std::span<const double>(table_).subspan(x * num_responses_, num_responses_);
}

bool LatentUtility::is_latent_positive(PromptId x, ResponseId y) const {
  return (*this)(x, y) >= positive_threshold_[x];
}

Task generate_task(const TaskSpec& spec) {
  spec.validate();
  const std::size_t n = spec.num_prompts;
  const std::size_t v = spec.response_space_size;
  std::mt19937_64 rng(mix_seed(spec.utility_seed, 0x7574696c));
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> table(n * v);
  for (double& u : table) u = spec.utility_noise_scale * normal(rng);
  std::uniform_int_distribution<std::size_t> pick(0, v - 1);
  for (std::size_t x = 0; x < n; ++x) table[x * v + pick(rng)] += spec.gold_bonus;

  std::vector<PromptId> prompts(n);
  for (std::size_t x = 0; x < n; ++x) prompts[x] = x;
  return Task{std::move(prompts), LatentUtility(n, v, std::move(table), spec.positive_quantile)};
}

void BudgetLedger::record(PromptId x) {
  ++total_;
  ++per_prompt_[x];
}

std::uint64_t BudgetLedger::calls_for(PromptId x) const {
  auto it = per_prompt_.find(x);
  return it == per_prompt_.end() ? 0 : it->second;
}

TeacherOracle::TeacherOracle(const LatentUtility& utility, double temperature, BudgetLedger& ledger,
                             std::uint64_t seed)
    : utility_(utility), temperature_(temperature), ledger_(ledger), rng_(mix_seed(seed, 0x74656163)) {
  if (!(temperature_ >= 0.0)) throw std::invalid_argument("teacher temperature must be >= 0");
}

void TeacherOracle::check_prompt(PromptId x) const {
  if (x >= utility_.num_prompts()) throw std::out_of_range("unknown prompt " + std::to_string(x));
}

ResponseId TeacherOracle::respond(PromptId x) {
  check_prompt(x);
  ledger_.record(x);
  const auto row = utility_.row(x);
  if (temperature_ == 0.0) {
    // max_element returns the first maximum, i.e. the smallest index.
    return static_cast<ResponseId>(std::max_element(row.begin(), row.end()) - row.begin());
  }
  return sample_categorical(softmax(row, temperature_), rng_);
}

double TeacherOracle::judge_score(PromptId x, ResponseId y) {
  check_prompt(x);
  ledger_.record(x);
  return utility_(x, y);
}

Verdict judge_compare(const LatentUtility& utility, PromptId x, ResponseId ya, ResponseId yb, double tie_band) {
  const double diff = utility(x, ya) - utility(x, yb);
  if (diff > tie_band) return Verdict::a_wins;
  if (diff < -tie_band) return Verdict::b_wins;
  return Verdict::tie;
}

double win_rate(std::span<const Verdict> verdicts) {
  if (verdicts.empty()) throw std::invalid_argument("win_rate: empty verdict list");
  double score = 0.0;
  for (Verdict v : verdicts) {
    if (v == Verdict::a_wins) score += 1.0;
    else if (v == Verdict::tie) score += 0.5;
  }
  return score / static_cast<double>(verdicts.size());
}

}  // namespace pualign
