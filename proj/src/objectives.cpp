#include "pualign/objectives.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace pualign {

void LdlGrpoConfig::validate() const {
  if (!(beta >= 0.0) || !std::isfinite(beta)) throw std::invalid_argument("beta must be >= 0");
  pu.validate();
}

void DpoConfig::validate() const {
  if (!(beta_dpo > 0.0) || !std::isfinite(beta_dpo)) throw std::invalid_argument("dpo beta must be > 0");
}

double accumulate_ldl_grpo(const CategoricalTable& policy, const CategoricalTable& reference,
                           const CandidateGroup& group, const LdlGrpoConfig& cfg, double scale,
                           GradientRecord& out, LdlGrpoBreakdown* breakdown) {
  if (group.distribution.size() != group.candidates.size()) {
    throw std::invalid_argument("ldl_grpo: distribution and candidates differ in length");
  }
  const PromptId x = group.prompt;
  const ProbabilityVector q = group_q(policy, x, group.candidates);
  const double group_kl = kl_divergence(group.distribution, q);

  // d/d logits of log q_k is onehot(y_k) - q-weighted onehots; the policy-row
  // terms of d log p(y_k|x) cancel because sum_k (q_k - D_k) = 0.
  auto g = out.d_logits.row(x);
  for (std::size_t k = 0; k < group.candidates.size(); ++k) {
    g[group.candidates[k]] += scale * (q[k] - group.distribution[k]);
  }

  double reference_kl = 0.0;
  if (cfg.beta > 0.0) {
    reference_kl = accumulate_kl_to_reference_grad(policy, reference, x, scale * cfg.beta, out);
  } else {
    reference_kl = kl_to_reference(policy, reference, x);
  }
  const double loss = group_kl + cfg.beta * reference_kl;
  out.loss_value += scale * loss;
  if (breakdown) {
    breakdown->group_kl = group_kl;
    breakdown->reference_kl = reference_kl;
    breakdown->q.assign(q.begin(), q.end());
  }
  return loss;
}

GradientRecord ldl_grpo_loss_grad(const CategoricalTable& policy, const CategoricalTable& reference,
                                  const CandidateGroup& group, const LdlGrpoConfig& cfg,
                                  LdlGrpoBreakdown* breakdown) {
  GradientRecord out = GradientRecord::zeros_like(policy);
  accumulate_ldl_grpo(policy, reference, group, cfg, 1.0, out, breakdown);
  return out;
}

double ldl_grpo_cross_entropy_form(const CategoricalTable& policy, const CandidateGroup& group) {
  const auto lp = policy.log_probs(group.prompt);
  std::vector<double> seq(group.candidates.size());
  double ce = 0.0;
  for (std::size_t k = 0; k < seq.size(); ++k) {
    seq[k] = lp[group.candidates[k]];
    ce -= group.distribution[k] * seq[k];
  }
  return ce + log_sum_exp(seq);
}

double accumulate_dpo(const CategoricalTable& policy, const CategoricalTable& reference, const PreferencePair& pair,
                      const DpoConfig& cfg, double scale, GradientRecord& out) {
  if (pair.winner == pair.loser) throw std::invalid_argument("preference pair: winner equals loser");
  const PromptId x = pair.prompt;
  const double delta_w = policy.log_prob(x, pair.winner) - reference.log_prob(x, pair.winner);
  const double delta_l = policy.log_prob(x, pair.loser) - reference.log_prob(x, pair.loser);
  const double z = cfg.beta_dpo * (delta_w - delta_l);
  const double loss = softplus(-z);
  // dL/dz = -sigmoid(-z); dz/dlogits = b (onehot(y+) - onehot(y-)).
  const double coef = -sigmoid(-z) * cfg.beta_dpo * scale;
  auto g = out.d_logits.row(x);
  g[pair.winner] += coef;
  g[pair.loser] -= coef;
  out.loss_value += scale * loss;
  return loss;
}

GradientRecord dpo_loss_grad(const CategoricalTable& policy, const CategoricalTable& reference,
                             const PreferencePair& pair, const DpoConfig& cfg) {
  cfg.validate();
  GradientRecord out = GradientRecord::zeros_like(policy);
  accumulate_dpo(policy, reference, pair, cfg, 1.0, out);
  return out;
}

std::vector<PreferencePair> rank_to_pairs(const CandidateGroup& group, std::size_t max_pairs) {
  const std::size_t k = group.candidates.size();
  if (k < 2) throw std::invalid_argument("rank_to_pairs: need at least two candidates");
  std::vector<std::size_t> order(k);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return group.margins[a] > group.margins[b]; });
  std::vector<PreferencePair> pairs;
  for (std::size_t i = 0; i + 1 < k && pairs.size() < max_pairs; ++i) {
    const std::size_t hi = order[i];
    const std::size_t lo = order[i + 1];
    if (!(group.margins[hi] > group.margins[lo])) continue;
    if (group.candidates[hi] == group.candidates[lo]) continue;
    pairs.push_back(PreferencePair{group.prompt, group.candidates[hi], group.candidates[lo]});
  }
  return pairs;
}

AdvantageVector grpo_scalar_advantages(std::span<const double> scores) {
  if (scores.size() < 2) throw std::invalid_argument("grpo advantages: need at least two scores");
  const double n = static_cast<double>(scores.size());
  const double mean = std::accumulate(scores.begin(), scores.end(), 0.0) / n;
  double var = 0.0;
  for (double s : scores) var += (s - mean) * (s - mean);
  const double sd = std::sqrt(var / n);
  AdvantageVector adv{std::vector<double>(scores.size(), 0.0)};
  if (sd < 1e-12) return adv;
  for (std::size_t k = 0; k < scores.size(); ++k) adv.values[k] = (scores[k] - mean) / sd;
  return adv;
}

double accumulate_grpo(const CategoricalTable& policy, const CandidateGroup& group, const AdvantageVector& advantages,
                       const CategoricalTable& reference, double beta, double scale, GradientRecord& out) {
  if (advantages.values.size() != group.candidates.size()) {
    throw std::invalid_argument("grpo: advantages and candidates differ in length");
  }
  const PromptId x = group.prompt;
  const double inv_k = 1.0 / static_cast<double>(group.candidates.size());
  const auto lp = policy.log_probs(x);
  double surrogate = 0.0;
  for (std::size_t k = 0; k < group.candidates.size(); ++k) {
    const double a = advantages.values[k];
    surrogate -= a * lp[group.candidates[k]] * inv_k;
    if (a != 0.0) accumulate_log_prob_grad(policy, x, group.candidates[k], -a * inv_k * scale, out);
  }
  double kl = 0.0;
  if (beta > 0.0) {
    kl = accumulate_kl_to_reference_grad(policy, reference, x, scale * beta, out);
  }
  const double loss = surrogate + beta * kl;
  out.loss_value += scale * loss;
  return loss;
}

GradientRecord grpo_policy_grad(const CategoricalTable& policy, const CandidateGroup& group,
                                const AdvantageVector& advantages, const CategoricalTable& reference, double beta) {
  GradientRecord out = GradientRecord::zeros_like(policy);
  accumulate_grpo(policy, group, advantages, reference, beta, 1.0, out);
  return out;
}

}  // namespace pualign
