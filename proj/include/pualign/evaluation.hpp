#pragma once

#include <cstdint>

#include "pualign/config.hpp"
#include "pualign/policy.hpp"
#include "pualign/sim_env.hpp"

namespace pualign {

struct WinRateResult {
  double win_rate = 0.0;
  std::size_t wins = 0;
  std::size_t losses = 0;
  std::size_t ties = 0;
};

/// Head-to-head A/B judging of the student against a fixed opponent policy on
/// the first eval.num_eval_prompts prompts, eval.samples_per_prompt draws each.
/// Ties count as half wins. Deterministic in `seed`.
WinRateResult evaluate_against_policy(const CategoricalTable& student, const CategoricalTable& opponent,
                                      const LatentUtility& utility, const EvalConfig& eval, std::uint64_t seed);

/// Same protocol with the teacher's responses as the B side. Uses its own
/// ledger, so evaluation never touches the training budget.
WinRateResult evaluate_against_teacher(const CategoricalTable& student, const LatentUtility& utility,
                                       double teacher_temperature, const EvalConfig& eval, std::uint64_t seed);

}  // namespace pualign
