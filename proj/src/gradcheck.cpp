#include "pualign/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>

#include "pualign/objectives.hpp"
#include "pualign/policy.hpp"

namespace pualign {

double relative_error(std::span<const double> analytic, std::span<const double> numeric) {
  double diff = 0.0, na = 0.0, nn = 0.0;
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    diff += (analytic[i] - numeric[i]) * (analytic[i] - numeric[i]);
    na += analytic[i] * analytic[i];
    nn += numeric[i] * numeric[i];
  }
  const double denom = std::sqrt(std::max(na, nn));
  if (denom == 0.0) return std::sqrt(diff);
  return std::sqrt(diff) / denom;
}

namespace {

using LossFn = std::function<GradientRecord(const Policy&)>;

std::vector<double> central_difference(const Policy& at, const LossFn& fn, double h) {
  LogitTable logits = at.logits();
  std::vector<double> grad(logits.data().size());
  for (std::size_t i = 0; i < grad.size(); ++i) {
    const double orig = logits.data()[i];
    logits.data()[i] = orig + h;
    const double up = fn(Policy(logits)).loss_value;
    logits.data()[i] = orig - h;
    const double down = fn(Policy(logits)).loss_value;
    logits.data()[i] = orig;
    grad[i] = (up - down) / (2.0 * h);
  }
  return grad;
}

double check(const Policy& at, const LossFn& fn) {
  const GradientRecord analytic = fn(at);
  double worst = 0.0;
  for (double h : {1e-4, 1e-5}) {
    worst = std::max(worst, relative_error(analytic.d_logits.data(), central_difference(at, fn, h)));
  }
  return worst;
}

struct Instance {
  Policy policy;
  PolicySnapshot reference;
  PromptId x;
  std::vector<ResponseId> group;
};

Instance random_instance(std::mt19937_64& rng) {
  const std::size_t n = std::uniform_int_distribution<std::size_t>(1, 4)(rng);
  const std::size_t v = std::uniform_int_distribution<std::size_t>(2, 8)(rng);
  std::normal_distribution<double> logit(0.0, 1.5);
  LogitTable a(n, v), b(n, v);
  for (double& z : a.data()) z = logit(rng);
  for (double& z : b.data()) z = logit(rng);
  const PromptId x = std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
  const std::size_t k = std::uniform_int_distribution<std::size_t>(2, 6)(rng);
  std::vector<ResponseId> group(k);
  std::uniform_int_distribution<std::size_t> pick(0, v - 1);
  for (auto& y : group) y = pick(rng);
  return Instance{Policy(a), PolicySnapshot(b, 0), x, std::move(group)};
}

CandidateGroup random_group(const Instance& inst, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> gamma(0.1, 5.0), tau(0.3, 3.0), bonus(0.0, 2.0);
  const PUConfig cfg{gamma(rng), tau(rng)};
  const ResponseId anchor = std::uniform_int_distribution<std::size_t>(0, inst.policy.num_responses() - 1)(rng);
  return build_candidate_group(Scorer::anchor_loglik(bonus(rng)), inst.reference, inst.x, anchor, inst.group, cfg);
}

}  // namespace

std::vector<GradcheckRow> run_gradcheck(std::uint64_t seed, std::size_t instances) {
  std::mt19937_64 rng(mix_seed(seed, 0x67726164));
  std::vector<GradcheckRow> rows{{"sft_loss_grad"}, {"kl_to_reference_grad"}, {"ldl_grpo_loss_grad"},
                                 {"dpo_loss_grad"}, {"grpo_policy_grad"}};
  std::uniform_real_distribution<double> beta_dist(0.0, 2.0), dpo_beta(0.05, 2.0);
  auto record = [](GradcheckRow& row, double err) {
    row.max_relative_error = std::max(row.max_relative_error, err);
    ++row.instances;
  };

  for (std::size_t i = 0; i < instances; ++i) {
    const Instance inst = random_instance(rng);
    const CandidateGroup group = random_group(inst, rng);
    const double beta = beta_dist(rng);

    std::vector<SftExample> pairs;
    for (ResponseId y : inst.group) {
      pairs.push_back(SftExample{std::uniform_int_distribution<std::size_t>(0, inst.policy.num_prompts() - 1)(rng), y});
    }
    record(rows[0], check(inst.policy, [&](const Policy& p) { return sft_loss_grad(p, pairs); }));
    record(rows[1], check(inst.policy, [&](const Policy& p) { return kl_to_reference_grad(p, inst.reference, inst.x); }));
    const LdlGrpoConfig ldl{beta, PUConfig{}};
    record(rows[2],
           check(inst.policy, [&](const Policy& p) { return ldl_grpo_loss_grad(p, inst.reference, group, ldl); }));

    const ResponseId winner = inst.group[0];
    const ResponseId loser = (winner + 1) % inst.policy.num_responses();
    const DpoConfig dpo{dpo_beta(rng)};
    record(rows[3], check(inst.policy, [&](const Policy& p) {
             return dpo_loss_grad(p, inst.reference, PreferencePair{inst.x, winner, loser}, dpo);
           }));

    const AdvantageVector adv = grpo_scalar_advantages(group.scores);
    record(rows[4], check(inst.policy,
                          [&](const Policy& p) { return grpo_policy_grad(p, group, adv, inst.reference, beta); }));
  }
  return rows;
}

}  // namespace pualign
