#include "pualign/theorem_checks.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <random>
#include <stdexcept>

#include "pualign/pu_induction.hpp"

namespace pualign {

namespace {

struct Instance {
  std::vector<double> margins;
  PUConfig cfg;
};

struct Tally {
  PropertyResult order{"order_consistency"};
  PropertyResult near_opt{"near_optimality"};
  PropertyResult dominance{"reweighting_dominance"};
  PropertyResult monotone{"monotone_score_map"};
};

// Absolute slack for inequalities that can hold with equality, scaled to the
// margin magnitudes so rounding in the expectations is not reported.
double rounding_slack(std::span<const double> r) {
  double m = 0.0;
  for (double v : r) m = std::max(m, std::abs(v));
  return 1e-12 * (1.0 + m);
}

void check_instance(const Instance& inst, Tally& t) {
  const auto& r = inst.margins;
  const auto d = induce_distribution(r, inst.cfg);
  const std::size_t k = r.size();

  bool order_ok = true;
  for (std::size_t i = 0; i < k && order_ok; ++i) {
    for (std::size_t j = 0; j < k; ++j) {
      if (r[i] > r[j] && !(d[i] > d[j])) order_ok = false;
      if (r[i] == r[j] && std::abs(d[i] - d[j]) > 1e-12) order_ok = false;
      if (!order_ok) break;
    }
  }
  ++t.order.cases;
  if (!order_ok) ++t.order.violations;

  const double slack = rounding_slack(r);
  const auto gap = near_optimality_gap(r, d, inst.cfg.tau);
  ++t.near_opt.cases;
  if (!(gap.gap <= gap.bound + slack)) ++t.near_opt.violations;

  const auto plain = softmax(r, inst.cfg.tau);
  double e_d = 0.0;
  double e_plain = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    e_d += d[i] * r[i];
    e_plain += plain[i] * r[i];
  }
  ++t.dominance.cases;
  if (!(e_d >= e_plain - slack)) ++t.dominance.violations;

  constexpr double eps = 1e-6;
  for (double v : r) {
    ++t.monotone.cases;
    if (!(pu_log_weight(v + eps, inst.cfg) > pu_log_weight(v, inst.cfg))) ++t.monotone.violations;
  }
}

double log_uniform(std::mt19937_64& rng, double lo, double hi) {
  std::uniform_real_distribution<double> u(std::log(lo), std::log(hi));
  return std::exp(u(rng));
}

}  // namespace

bool TheoremReport::passed() const {
  return std::all_of(properties.begin(), properties.end(), [](const auto& p) { return p.violations == 0; });
}

TheoremReport run_theorem_checks(std::size_t trials, std::uint64_t seed, bool include_grid) {
  if (trials < 1) throw std::invalid_argument("check-theorems: trials must be >= 1");
  std::mt19937_64 rng(mix_seed(seed, 0x7468656f));
  std::uniform_int_distribution<std::size_t> k_dist(2, 64);
  std::uniform_real_distribution<double> margin_dist(-10.0, 10.0);
  std::bernoulli_distribution duplicate(0.25);
  Tally tally;

  for (std::size_t t = 0; t < trials; ++t) {
    Instance inst;
    const std::size_t k = k_dist(rng);
    inst.margins.resize(k);
    for (double& m : inst.margins) m = margin_dist(rng);
    if (duplicate(rng)) {
      std::uniform_int_distribution<std::size_t> idx(0, k - 1);
      inst.margins[idx(rng)] = inst.margins[idx(rng)];
    }
    inst.cfg.gamma = log_uniform(rng, 0.1, 10.0);
    inst.cfg.tau = log_uniform(rng, 0.1, 10.0);
    check_instance(inst, tally);
  }

  if (include_grid) {
    for (double gamma : {0.1, 10.0}) {
      for (double tau : {0.1, 10.0}) {
        for (std::size_t k : {std::size_t{2}, std::size_t{64}}) {
          // Evenly spread, all-extreme and all-equal margin patterns.
          std::array<std::vector<double>, 3> patterns;
          for (std::size_t i = 0; i < k; ++i) {
            patterns[0].push_back(-10.0 + 20.0 * static_cast<double>(i) / static_cast<double>(k - 1));
            patterns[1].push_back(i % 2 == 0 ? 10.0 : -10.0);
            patterns[2].push_back(3.0);
          }
          for (auto& m : patterns) check_instance(Instance{m, PUConfig{gamma, tau}}, tally);
        }
      }
    }
  }

  return TheoremReport{{tally.order, tally.near_opt, tally.dominance, tally.monotone}};
}

}  // namespace pualign
