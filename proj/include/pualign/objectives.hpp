#pragma once

// Stage-II losses with closed-form gradients: the distribution-matching
// objective (KL(D_x || q_theta) + beta KL(p_theta || p_sft)) and the baselines
// it is compared against (pairwise DPO, anchor-ranked DPO pairs, scalar
// group-relative advantages).

#include <cstddef>
#include <span>
#include <vector>

#include "pualign/policy.hpp"
#include "pualign/pu_induction.hpp"

namespace pualign {

struct LdlGrpoConfig {
  double beta = 0.01;
  PUConfig pu;

  void validate() const;
};

struct DpoConfig {
  double beta_dpo = 0.1;

  void validate() const;
};

struct PreferencePair {
  PromptId prompt;
  ResponseId winner;
  ResponseId loser;
};

struct AdvantageVector {
  std::vector<double> values;
};

struct LdlGrpoBreakdown {
  double group_kl = 0.0;      // KL(D_x || q_theta) over the sampled group
  double reference_kl = 0.0;  // KL(p_theta(.|x) || p_sft(.|x)) over the full response space
  std::vector<double> q;      // q_theta before the update
};

/// Adds scale * grad of [KL(D_x || q) + beta KL(p || p_sft)] into `out` and
/// returns the unscaled loss. The group term's gradient with respect to each
/// candidate log-likelihood is q_k - D_x(k); duplicates accumulate.
double accumulate_ldl_grpo(const CategoricalTable& policy, const CategoricalTable& reference,
                           const CandidateGroup& group, const LdlGrpoConfig& cfg, double scale,
                           GradientRecord& out, LdlGrpoBreakdown* breakdown = nullptr);

GradientRecord ldl_grpo_loss_grad(const CategoricalTable& policy, const CategoricalTable& reference,
                                  const CandidateGroup& group, const LdlGrpoConfig& cfg,
                                  LdlGrpoBreakdown* breakdown = nullptr);

/// Cross-entropy form of the group term:
///   -sum_k D_x(k) log p(y_k|x) + log sum_j p(y_j|x).
/// Differs from KL(D_x || q) by a constant that does not depend on the policy.
double ldl_grpo_cross_entropy_form(const CategoricalTable& policy, const CandidateGroup& group);

/// -log sigmoid(b [(log p(y+) - log ref(y+)) - (log p(y-) - log ref(y-))]).
double accumulate_dpo(const CategoricalTable& policy, const CategoricalTable& reference, const PreferencePair& pair,
                      const DpoConfig& cfg, double scale, GradientRecord& out);

GradientRecord dpo_loss_grad(const CategoricalTable& policy, const CategoricalTable& reference,
                             const PreferencePair& pair, const DpoConfig& cfg);

/// Sorts candidates by margin (descending, index breaks ties) and emits up to
/// max_pairs adjacent-rank pairs, skipping ranks with equal margins.
std::vector<PreferencePair> rank_to_pairs(const CandidateGroup& group, std::size_t max_pairs);

/// (s - mean) / std with the population std; all zeros when std < 1e-12.
AdvantageVector grpo_scalar_advantages(std::span<const double> scores);

/// Surrogate -sum_k A_k log p(y_k|x) / K + beta KL(p || p_sft).
double accumulate_grpo(const CategoricalTable& policy, const CandidateGroup& group, const AdvantageVector& advantages,
                       const CategoricalTable& reference, double beta, double scale, GradientRecord& out);

GradientRecord grpo_policy_grad(const CategoricalTable& policy, const CandidateGroup& group,
                                const AdvantageVector& advantages, const CategoricalTable& reference, double beta);

}  // namespace pualign
