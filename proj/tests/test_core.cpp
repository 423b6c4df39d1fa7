#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>
#include <vector>

#include "pualign/core.hpp"

using namespace pualign;

TEST_CASE("softmax matches reference values") {
  const std::vector<double> logits{2.0, 0.0, -2.0};
  const ProbabilityVector p = softmax(logits);
  CHECK(p[0] == doctest::Approx(0.866813332197335).epsilon(1e-12));
  CHECK(p[1] == doctest::Approx(0.117310427826198).epsilon(1e-12));
  CHECK(p[2] == doctest::Approx(0.0158762399764668).epsilon(1e-12));
}

TEST_CASE("softmax temperature scales logits") {
  const std::vector<double> logits{4.0, 0.0, -4.0};
  const ProbabilityVector hot = softmax(logits, 2.0);
  CHECK(hot[0] == doctest::Approx(0.866813332197335).epsilon(1e-12));
  CHECK_THROWS_AS(softmax(logits, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(softmax(logits, -1.0), std::invalid_argument);
}

TEST_CASE("softmax survives huge logits") {
  const std::vector<double> logits{1000.0, 999.0, -1000.0};
  const ProbabilityVector p = softmax(logits);
  CHECK(p[0] == doctest::Approx(1.0 / (1.0 + std::exp(-1.0))).epsilon(1e-12));
  CHECK(p[2] >= 0.0);
}

TEST_CASE("log_sum_exp") {
  const std::vector<double> two{0.0, 0.0};
  CHECK(log_sum_exp(two) == doctest::Approx(0.693147180559945).epsilon(1e-14));
  const std::vector<double> big{800.0, 800.0};
  CHECK(log_sum_exp(big) == doctest::Approx(800.0 + 0.693147180559945).epsilon(1e-14));
  const std::vector<double> lopsided{0.0, -1e6};
  CHECK(log_sum_exp(lopsided) >= 0.0);

  CHECK_THROWS_WITH_AS(log_sum_exp(std::vector<double>{}), "empty weight vector", std::invalid_argument);
  const std::vector<double> bad{0.0, std::numeric_limits<double>::quiet_NaN()};
  CHECK_THROWS_AS(log_sum_exp(bad), std::invalid_argument);
}

TEST_CASE("ProbabilityVector validation") {
  CHECK_NOTHROW(ProbabilityVector({0.25, 0.75}));
  CHECK_NOTHROW(ProbabilityVector({1.0}));
  CHECK_THROWS_AS(ProbabilityVector({}), std::invalid_argument);
  CHECK_THROWS_AS(ProbabilityVector({0.5, 0.6}), std::invalid_argument);
  CHECK_THROWS_AS(ProbabilityVector({-0.1, 1.1}), std::invalid_argument);
  CHECK_THROWS_AS(ProbabilityVector({std::nan(""), 1.0}), std::invalid_argument);
  CHECK(ProbabilityVector::is_valid(std::vector<double>{0.5, 0.5 + 1e-10}));
  CHECK_FALSE(ProbabilityVector::is_valid(std::vector<double>{0.5, 0.5 + 1e-8}));
}

TEST_CASE("LogWeightVector rejects empty and non-finite input") {
  CHECK_THROWS_WITH_AS(LogWeightVector({}), "empty weight vector", std::invalid_argument);
  CHECK_THROWS_AS(LogWeightVector({1.0, std::numeric_limits<double>::infinity()}), std::invalid_argument);
  const LogWeightVector w({-1.0, 3.0});
  CHECK(w.size() == 2);
  CHECK(normalize_log_weights(w)[1] == doctest::Approx(1.0 / (1.0 + std::exp(-4.0))));
}

TEST_CASE("kl_divergence") {
  const ProbabilityVector p({0.5, 0.5});
  CHECK(kl_divergence(p, p) == 0.0);

  const ProbabilityVector q({0.25, 0.75});
  // 0.5 ln(0.5/0.25) + 0.5 ln(0.5/0.75)
  CHECK(kl_divergence(p, q) == doctest::Approx(0.5 * std::log(2.0) + 0.5 * std::log(2.0 / 3.0)).epsilon(1e-14));

  const std::vector<double> logits{1.0, 0.0};
  CHECK(kl_divergence(softmax(logits), p) == doctest::Approx(0.110944071671727).epsilon(1e-12));

  const ProbabilityVector point({1.0, 0.0});
  CHECK(kl_divergence(point, p) == doctest::Approx(0.693147180559945).epsilon(1e-14));
  CHECK_THROWS_AS(kl_divergence(p, point), std::domain_error);

  CHECK_THROWS_AS(kl_divergence(p, ProbabilityVector({1.0 / 3, 1.0 / 3, 1.0 / 3})), std::invalid_argument);
}

TEST_CASE("kl_divergence is non-negative on random pairs") {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> n(0.0, 3.0);
  for (int t = 0; t < 500; ++t) {
    std::vector<double> a(7), b(7);
    for (auto& v : a) v = n(rng);
    for (auto& v : b) v = n(rng);
    CHECK(kl_divergence(softmax(a), softmax(b)) >= 0.0);
  }
}

TEST_CASE("sigmoid family at the extremes") {
  CHECK(sigmoid(0.0) == 0.5);
  CHECK(sigmoid(-700.0) == doctest::Approx(9.85967654375977e-305).epsilon(1e-10));
  CHECK(sigmoid(700.0) == 1.0);
  CHECK(softplus(0.0) == doctest::Approx(0.693147180559945).epsilon(1e-14));
  CHECK(softplus(1000.0) == doctest::Approx(1000.0));
  CHECK(softplus(-1000.0) >= 0.0);
  CHECK(log_sigmoid(-1000.0) == doctest::Approx(-1000.0));
  CHECK(log_sigmoid(-1e300) == -1e300);
  CHECK(log_sigmoid(50.0) <= 0.0);
}

TEST_CASE("sample_categorical follows the distribution") {
  const ProbabilityVector p({0.1, 0.6, 0.3});
  std::mt19937_64 rng(5);
  std::vector<int> counts(3);
  const int n = 60000;
  for (int i = 0; i < n; ++i) ++counts[sample_categorical(p, rng)];
  CHECK(counts[0] / double(n) == doctest::Approx(0.1).epsilon(0.05));
  CHECK(counts[1] / double(n) == doctest::Approx(0.6).epsilon(0.02));
  CHECK(counts[2] / double(n) == doctest::Approx(0.3).epsilon(0.03));

  const ProbabilityVector point({0.0, 1.0, 0.0});
  for (int i = 0; i < 100; ++i) CHECK(sample_categorical(point, rng) == 1);
}
