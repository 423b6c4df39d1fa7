#include "pualign/evaluation.hpp"

#include <algorithm>
#include <functional>
#include <random>
#include <vector>

namespace pualign {

namespace {

WinRateResult tally(const std::vector<Verdict>& verdicts) {
  WinRateResult r;
  r.win_rate = win_rate(verdicts);
  for (Verdict v : verdicts) {
    if (v == Verdict::a_wins) ++r.wins;
    else if (v == Verdict::b_wins) ++r.losses;
    else ++r.ties;
  }
  return r;
}

WinRateResult run_matches(const CategoricalTable& student, const LatentUtility& utility, const EvalConfig& eval,
                          std::uint64_t seed, const std::function<ResponseId(PromptId, std::mt19937_64&)>& opponent) {
  std::mt19937_64 rng(mix_seed(seed, 0x6576616c));
  const std::size_t prompts = std::min(eval.num_eval_prompts, utility.num_prompts());
  std::vector<Verdict> verdicts;
  verdicts.reserve(prompts * eval.samples_per_prompt);
  for (PromptId x = 0; x < prompts; ++x) {
    const ProbabilityVector p = student.distribution(x);
    for (std::size_t s = 0; s < eval.samples_per_prompt; ++s) {
      const ResponseId ya = sample_categorical(p, rng);
      const ResponseId yb = opponent(x, rng);
      verdicts.push_back(judge_compare(utility, x, ya, yb, eval.tie_band));
    }
  }
  return tally(verdicts);
}

}  // namespace

WinRateResult evaluate_against_policy(const CategoricalTable& student, const CategoricalTable& opponent,
                                      const LatentUtility& utility, const EvalConfig& eval, std::uint64_t seed) {
  std::vector<ProbabilityVector> rows;
  const std::size_t prompts = std::min(eval.num_eval_prompts, utility.num_prompts());
  rows.reserve(prompts);
  for (PromptId x = 0; x < prompts; ++x) rows.push_back(opponent.distribution(x));
  return run_matches(student, utility, eval, seed,
                     [&](PromptId x, std::mt19937_64& rng) { return sample_categorical(rows[x], rng); });
}

WinRateResult evaluate_against_teacher(const CategoricalTable& student, const LatentUtility& utility,
                                       double teacher_temperature, const EvalConfig& eval, std::uint64_t seed) {
  BudgetLedger eval_ledger;
  TeacherOracle teacher(utility, teacher_temperature, eval_ledger, mix_seed(seed, 0x6a756467));
  return run_matches(student, utility, eval, seed, [&](PromptId x, std::mt19937_64&) { return teacher.respond(x); });
}

}  // namespace pualign
