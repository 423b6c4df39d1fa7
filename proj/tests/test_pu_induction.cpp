#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>
#include <vector>

#include "pualign/pu_induction.hpp"
#include "pualign/theorem_checks.hpp"

using namespace pualign;

TEST_CASE("label distribution matches reference values") {
  const std::vector<double> margins{1.0, 0.0, -1.0};
  const ProbabilityVector d = induce_distribution(margins, PUConfig{1.0, 1.0});
  CHECK(d[0] == doctest::Approx(0.768406546476885).epsilon(1e-12));
  CHECK(d[1] == doctest::Approx(0.193336744259356).epsilon(1e-12));
  CHECK(d[2] == doctest::Approx(0.0382567092637589).epsilon(1e-12));

  const OptimalityGap gap = near_optimality_gap(margins, d, 1.0);
  CHECK(gap.gap == doctest::Approx(0.269850162786873).epsilon(1e-12));
  CHECK(gap.bound == doctest::Approx(1.09861228866811).epsilon(1e-12));
}

TEST_CASE("equal margins give a uniform distribution") {
  const std::vector<double> margins(5, -0.7);
  const ProbabilityVector d = induce_distribution(margins, PUConfig{});
  for (double p : d) CHECK(p == doctest::Approx(0.2));
}

TEST_CASE("extreme margins stay on the simplex") {
  const std::vector<double> margins{800.0, -800.0, 0.0};
  const ProbabilityVector d = induce_distribution(margins, PUConfig{10.0, 0.1});
  CHECK(d[0] == doctest::Approx(1.0));
  CHECK(d[1] >= 0.0);
  CHECK(positivity_confidence(800.0, PUConfig{}) < 1.0);
  CHECK(positivity_confidence(-800.0, PUConfig{}) > 0.0);
}

TEST_CASE("invalid inputs are rejected") {
  CHECK_THROWS_AS(induce_distribution(std::vector<double>{}, PUConfig{}), std::invalid_argument);
  CHECK_THROWS_AS(induce_distribution(std::vector<double>{0.0, NAN}, PUConfig{}), std::invalid_argument);
  CHECK_THROWS_AS(induce_distribution(std::vector<double>{0.0}, PUConfig{0.0, 1.0}), std::invalid_argument);
  CHECK_THROWS_AS(induce_distribution(std::vector<double>{0.0}, PUConfig{1.0, -1.0}), std::invalid_argument);
  CHECK_THROWS_AS(parse_scorer_kind("oracle"), std::invalid_argument);
  CHECK(parse_scorer_kind("utility_proxy") == ScorerKind::utility_proxy);
}

TEST_CASE("anchor log-likelihood scorer") {
  const Policy ref(1, 4);
  const Scorer s = Scorer::anchor_loglik(1.0);
  CHECK(anchor_self_score(s, ref, 0, 2) == doctest::Approx(-0.386294361119891).epsilon(1e-12));
  CHECK(s.score(ref, 0, 2, 1) == doctest::Approx(-1.38629436111989).epsilon(1e-12));

  const CandidateGroup g = build_candidate_group(s, ref, 0, 2, {0, 2, 3}, PUConfig{1.0, 1.0});
  CHECK(g.margins[0] == doctest::Approx(-1.0));
  CHECK(g.margins[1] == 0.0);
  CHECK(g.confidences[1] == 0.5);
  CHECK(g.distribution[1] > g.distribution[0]);
  CHECK(g.distribution[0] == doctest::Approx(g.distribution[2]));
  CHECK_NOTHROW(validate_candidate_group(g, PUConfig{1.0, 1.0}));
}

TEST_CASE("validate_candidate_group catches tampering") {
  const Policy ref(1, 4);
  CandidateGroup g = build_candidate_group(Scorer::anchor_loglik(), ref, 0, 1, {0, 1, 2}, PUConfig{});
  CandidateGroup bad = g;
  bad.margins[0] += 0.1;
  CHECK_THROWS_AS(validate_candidate_group(bad, PUConfig{}), std::logic_error);
  bad = g;
  bad.confidences[2] = 1.0;
  CHECK_THROWS_AS(validate_candidate_group(bad, PUConfig{}), std::logic_error);
  bad = g;
  bad.scores.pop_back();
  CHECK_THROWS_AS(validate_candidate_group(bad, PUConfig{}), std::logic_error);
}

TEST_CASE("utility proxy is pure in its arguments") {
  const LatentUtility u(2, 3, {0.0, 1.0, 2.0, 3.0, 4.0, 5.0});
  const Policy ref(2, 3);
  const Scorer clean = Scorer::utility_proxy(u, 0.0, 1);
  CHECK(clean.score(ref, 1, 0, 2) == 5.0);

  const Scorer noisy = Scorer::utility_proxy(u, 0.5, 1);
  CHECK(noisy.score(ref, 1, 0, 2, 7) == noisy.score(ref, 1, 0, 2, 7));
  CHECK(noisy.score(ref, 1, 0, 2, 7) != noisy.score(ref, 1, 0, 2, 8));
}

TEST_CASE("custom scorers that return non-finite values are rejected") {
  const Policy ref(1, 2);
  const Scorer s = Scorer::custom([](const CategoricalTable&, PromptId, ResponseId, ResponseId y, std::uint64_t) {
    return y == 0 ? 0.0 : std::log(0.0);
  });
  CHECK_THROWS_AS(build_candidate_group(s, ref, 0, 0, {0, 1}, PUConfig{}), std::domain_error);
}

TEST_CASE("random margins satisfy order, gap and dominance") {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> r(-5.0, 5.0), lg(std::log(0.2), std::log(5.0));
  for (int t = 0; t < 300; ++t) {
    const PUConfig cfg{std::exp(lg(rng)), std::exp(lg(rng))};
    std::vector<double> m(2 + t % 20);
    for (auto& v : m) v = r(rng);
    const ProbabilityVector d = induce_distribution(m, cfg);
    for (std::size_t i = 0; i < m.size(); ++i) {
      for (std::size_t j = 0; j < m.size(); ++j) {
        if (m[i] > m[j]) CHECK(d[i] > d[j]);
      }
    }
    const OptimalityGap gap = near_optimality_gap(m, d, cfg.tau);
    CHECK(gap.gap <= gap.bound + 1e-12);

    const ProbabilityVector plain = softmax(m, cfg.tau);
    double ed = 0.0, ep = 0.0;
    for (std::size_t i = 0; i < m.size(); ++i) {
      ed += d[i] * m[i];
      ep += plain[i] * m[i];
    }
    CHECK(ed >= ep - 1e-12);
  }
}

TEST_CASE("theorem suite report shape") {
  const TheoremReport one = run_theorem_checks(1, 0, false);
  REQUIRE(one.properties.size() == 4);
  CHECK(one.properties[0].name == "order_consistency");
  CHECK(one.properties[1].name == "near_optimality");
  CHECK(one.properties[2].name == "reweighting_dominance");
  CHECK(one.properties[3].name == "monotone_score_map");
  CHECK(one.passed());
  CHECK_THROWS_AS(run_theorem_checks(0, 0), std::invalid_argument);
}

TEST_CASE("theorem suite on the parameter-box corners") {
  const TheoremReport grid = run_theorem_checks(1, 5, true);
  for (const auto& p : grid.properties) {
    CHECK(p.cases > 1);
    CHECK(p.violations == 0);
  }
}
