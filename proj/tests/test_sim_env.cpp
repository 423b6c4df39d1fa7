#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <stdexcept>
#include <vector>

#include "pualign/sim_env.hpp"

using namespace pualign;

namespace {

LatentUtility small_utility() {
  // 2 prompts x 4 responses
  return LatentUtility(2, 4, {0.1, 0.9, 0.3, 0.9, -1.0, -2.0, 5.0, 0.0}, 0.25);
}

}  // namespace

TEST_CASE("generate_task is deterministic in its seed") {
  TaskSpec spec;
  spec.num_prompts = 8;
  spec.response_space_size = 6;
  const Task a = generate_task(spec);
  const Task b = generate_task(spec);
  CHECK(a.utility.table() == b.utility.table());
  CHECK(a.prompts.size() == 8);

  spec.utility_seed = 2;
  CHECK(generate_task(spec).utility.table() != a.utility.table());
}

TEST_CASE("generate_task rejects bad specs") {
  TaskSpec spec;
  spec.num_prompts = 0;
  CHECK_THROWS_AS(generate_task(spec), std::invalid_argument);
  spec = TaskSpec{};
  spec.response_space_size = 1;
  CHECK_THROWS_AS(generate_task(spec), std::invalid_argument);
  spec = TaskSpec{};
  spec.positive_quantile = 0.0;
  CHECK_THROWS_AS(generate_task(spec), std::invalid_argument);
}

TEST_CASE("latent positives are the top quantile") {
  const LatentUtility u = small_utility();
  CHECK(u.is_latent_positive(1, 2));
  CHECK_FALSE(u.is_latent_positive(1, 0));
  CHECK_FALSE(u.is_latent_positive(1, 1));
}

TEST_CASE("flat utility rows are perturbed so the argmax is unique") {
  const LatentUtility u(1, 3, {1.0, 1.0, 1.0});
  const auto row = u.row(0);
  CHECK(row[0] != row[1]);
  CHECK(row[1] != row[2]);
}

TEST_CASE("teacher at temperature zero returns the first argmax and charges the ledger") {
  const LatentUtility u = small_utility();
  BudgetLedger ledger;
  TeacherOracle teacher(u, 0.0, ledger, 7);
  CHECK(teacher.respond(0) == 1);
  CHECK(teacher.respond(1) == 2);
  CHECK(teacher.respond(1) == 2);
  CHECK(ledger.total_calls() == 3);
  CHECK(ledger.calls_for(1) == 2);
  CHECK(ledger.calls_for(5) == 0);

  CHECK(teacher.judge_score(0, 3) == doctest::Approx(0.9));
  CHECK(ledger.total_calls() == 4);

  CHECK_THROWS_AS(teacher.respond(2), std::out_of_range);
  CHECK(ledger.total_calls() == 4);
}

TEST_CASE("teacher at positive temperature samples from the softmax") {
  const LatentUtility u(1, 2, {0.0, 1.0});
  BudgetLedger ledger;
  TeacherOracle teacher(u, 1.0, ledger, 3);
  int ones = 0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) ones += teacher.respond(0) == 1;
  // softmax([0, 1])[1] = 1 / (1 + e^-1)
  CHECK(ones / double(n) == doctest::Approx(0.731058578630005).epsilon(0.02));
  CHECK(ledger.total_calls() == static_cast<std::uint64_t>(n));
}

TEST_CASE("judge_compare and win_rate") {
  const LatentUtility u = small_utility();
  CHECK(judge_compare(u, 1, 2, 0, 0.1) == Verdict::a_wins);
  CHECK(judge_compare(u, 1, 0, 2, 0.1) == Verdict::b_wins);
  CHECK(judge_compare(u, 0, 1, 3, 0.1) == Verdict::tie);
  CHECK(judge_compare(u, 1, 3, 0, 1.5) == Verdict::tie);

  const std::vector<Verdict> v{Verdict::a_wins, Verdict::tie, Verdict::b_wins, Verdict::a_wins};
  CHECK(win_rate(v) == doctest::Approx(2.5 / 4));
  CHECK_THROWS_AS(win_rate(std::vector<Verdict>{}), std::invalid_argument);
}

TEST_CASE("mix_seed decorrelates neighbouring inputs") {
  CHECK(mix_seed(1, 2) != mix_seed(2, 1));
  CHECK(mix_seed(0, 0) == mix_seed(0, 0));
  std::vector<std::uint64_t> seen;
  for (std::uint64_t i = 0; i < 100; ++i) seen.push_back(mix_seed(42, i));
  std::sort(seen.begin(), seen.end());
  CHECK(std::adjacent_find(seen.begin(), seen.end()) == seen.end());
}
