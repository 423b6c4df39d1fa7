#pragma once

// Anchor-conditioned self-evaluation: candidate scores, anchor-referenced
// margins, sigmoid positivity confidences and the PU-aware soft label
// distribution D_x(k) ∝ sigmoid(gamma * r_k) * exp(r_k / tau).

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "pualign/core.hpp"
#include "pualign/policy.hpp"
#include "pualign/sim_env.hpp"

namespace pualign {

struct PUConfig {
  /// Sharpness of the positivity gate sigmoid(gamma * r).
  double gamma = 1.0;
  double tau = 1.2;

  void validate() const;
};

enum class ScorerKind { anchor_loglik, utility_proxy, custom };

ScorerKind parse_scorer_kind(std::string_view name);
std::string_view to_string(ScorerKind kind);

/// g(x, a, y). Scorers are pure: `salt` selects the noise realization of the
/// utility proxy, so equal arguments always give equal scores.
class Scorer {
 public:
  using Fn = std::function<double(const CategoricalTable& reference, PromptId x, ResponseId anchor,
                                  ResponseId candidate, std::uint64_t salt)>;

  /// log p_ref(y|x) + anchor_bonus * [y == a].
  static Scorer anchor_loglik(double anchor_bonus = 1.0);
  /// u*(x, y) + N(0, noise_scale^2). Reads the hidden utility, so it is only
  /// meant for tests and the noisy-evaluator comparison campaign.
  static Scorer utility_proxy(const LatentUtility& utility, double noise_scale, std::uint64_t noise_seed);
  static Scorer custom(Fn fn);

  ScorerKind kind() const { return kind_; }
  /// Throws std::domain_error if the score is not finite.
  double score(const CategoricalTable& reference, PromptId x, ResponseId anchor, ResponseId candidate,
               std::uint64_t salt = 0) const;

 private:
  Scorer(ScorerKind kind, Fn fn) : kind_(kind), fn_(std::move(fn)) {}

  ScorerKind kind_;
  Fn fn_;
};

std::vector<double> score_candidates(const Scorer& scorer, const CategoricalTable& reference, PromptId x,
                                     ResponseId anchor, std::span<const ResponseId> candidates,
                                     std::uint64_t salt = 0);

/// s* = g(x, a, a).
double anchor_self_score(const Scorer& scorer, const CategoricalTable& reference, PromptId x, ResponseId anchor,
                         std::uint64_t salt = 0);

/// u = sigmoid(gamma r), clamped into the open interval (0, 1).
double positivity_confidence(double margin, const PUConfig& cfg);

/// f(r) = log sigmoid(gamma r) + r / tau, the log of the unnormalized weight.
double pu_log_weight(double margin, const PUConfig& cfg);

ProbabilityVector induce_distribution(std::span<const double> margins, const PUConfig& cfg);

struct OptimalityGap {
  double gap;    // max(r) - E_D[r]
  double bound;  // tau * ln K
};

OptimalityGap near_optimality_gap(std::span<const double> margins, const ProbabilityVector& d, double tau);

struct CandidateGroup {
  PromptId prompt;
  ResponseId anchor;
  std::vector<ResponseId> candidates;
  std::vector<double> scores;
  double anchor_score;
  std::vector<double> margins;
  std::vector<double> confidences;
  ProbabilityVector distribution;

  std::size_t size() const { return candidates.size(); }
};

CandidateGroup build_candidate_group(const Scorer& scorer, const CategoricalTable& reference, PromptId x,
                                     ResponseId anchor, std::vector<ResponseId> candidates, const PUConfig& cfg,
                                     std::uint64_t salt = 0);

/// Re-derives margins, confidences and the distribution from the stored scores
/// and throws std::logic_error naming the first broken invariant.
void validate_candidate_group(const CandidateGroup& group, const PUConfig& cfg);

}  // namespace pualign
