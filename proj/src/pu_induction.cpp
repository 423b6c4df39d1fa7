#include "pualign/pu_induction.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

namespace pualign {

void PUConfig::validate() const {
  if (!(gamma > 0.0) || !std::isfinite(gamma)) throw std::invalid_argument("pu.gamma must be > 0");
  if (!(tau > 0.0) || !std::isfinite(tau)) throw std::invalid_argument("pu.tau must be > 0");
}

ScorerKind parse_scorer_kind(std::string_view name) {
  if (name == "anchor_loglik") return ScorerKind::anchor_loglik;
  if (name == "utility_proxy") return ScorerKind::utility_proxy;
  if (name == "custom") return ScorerKind::custom;
  throw std::invalid_argument("unknown scorer kind '" + std::string(name) + "'");
}

std::string_view to_string(ScorerKind kind) {
  switch (kind) {
    case ScorerKind::anchor_loglik: return "anchor_loglik";
    case ScorerKind::utility_proxy: return "utility_proxy";
    case ScorerKind::custom: return "custom";
  }
  return "unknown";
}

Scorer Scorer::anchor_loglik(double anchor_bonus) {
  if (!(anchor_bonus >= 0.0) || !std::isfinite(anchor_bonus)) {
    throw std::invalid_argument("anchor_loglik: anchor bonus must be >= 0");
  }
  return Scorer(ScorerKind::anchor_loglik,
                [anchor_bonus](const CategoricalTable& ref, PromptId x, ResponseId a, ResponseId y, std::uint64_t) {
                  return ref.log_prob(x, y) + (y == a ? anchor_bonus : 0.0);
                });
}

Scorer Scorer::utility_proxy(const LatentUtility& utility, double noise_scale, std::uint64_t noise_seed) {
  if (!(noise_scale >= 0.0)) throw std::invalid_argument("utility_proxy: noise scale must be >= 0");
  return Scorer(ScorerKind::utility_proxy, [&utility, noise_scale, noise_seed](const CategoricalTable&, PromptId x,
                                                                               ResponseId, ResponseId y,
                                                                               std::uint64_t salt) {
    double u = utility(x, y);
    if (noise_scale > 0.0) {
      std::mt19937_64 rng(mix_seed(mix_seed(noise_seed, salt), mix_seed(x, y)));
      u += noise_scale * std::normal_distribution<double>(0.0, 1.0)(rng);
    }
    return u;
  });
}

Scorer Scorer::custom(Fn fn) {
  if (!fn) throw std::invalid_argument("custom scorer: empty function");
  return Scorer(ScorerKind::custom, std::move(fn));
}

double Scorer::score(const CategoricalTable& reference, PromptId x, ResponseId anchor, ResponseId candidate,
                     std::uint64_t salt) const {
  const double s = fn_(reference, x, anchor, candidate, salt);
  if (!std::isfinite(s)) throw std::domain_error("scorer produced a non-finite score");
  return s;
}

std::vector<double> score_candidates(const Scorer& scorer, const CategoricalTable& reference, PromptId x,
                                     ResponseId anchor, std::span<const ResponseId> candidates, std::uint64_t salt) {
  if (candidates.empty()) throw std::invalid_argument("score_candidates: no candidates");
  std::vector<double> scores(candidates.size());
  for (std::size_t k = 0; k < candidates.size(); ++k) scores[k] = scorer.score(reference, x, anchor, candidates[k], salt);
  return scores;
}

double anchor_self_score(const Scorer& scorer, const CategoricalTable& reference, PromptId x, ResponseId anchor,
                         std::uint64_t salt) {
  return scorer.score(reference, x, anchor, anchor, salt);
}

double positivity_confidence(double margin, const PUConfig& cfg) {
  // Kept strictly inside (0, 1) even where the double sigmoid saturates.
  return std::clamp(sigmoid(cfg.gamma * margin), std::numeric_limits<double>::denorm_min(),
                    std::nextafter(1.0, 0.0));
}

double pu_log_weight(double margin, const PUConfig& cfg) {
  return log_sigmoid(cfg.gamma * margin) + margin / cfg.tau;
}

ProbabilityVector induce_distribution(std::span<const double> margins, const PUConfig& cfg) {
  cfg.validate();
  if (margins.empty()) throw std::invalid_argument("induce_distribution: no margins");
  std::vector<double> logw(margins.size());
  for (std::size_t k = 0; k < margins.size(); ++k) {
    if (!std::isfinite(margins[k])) throw std::invalid_argument("induce_distribution: non-finite margin");
    logw[k] = pu_log_weight(margins[k], cfg);
  }
  return normalize_log_weights(logw);
}

OptimalityGap near_optimality_gap(std::span<const double> margins, const ProbabilityVector& d, double tau) {
  if (margins.size() != d.size()) throw std::invalid_argument("near_optimality_gap: length mismatch");
  const double rmax = *std::max_element(margins.begin(), margins.end());
  double expected = 0.0;
  for (std::size_t k = 0; k < margins.size(); ++k) expected += d[k] * margins[k];
  return OptimalityGap{rmax - expected, tau * std::log(static_cast<double>(margins.size()))};
}

CandidateGroup build_candidate_group(const Scorer& scorer, const CategoricalTable& reference, PromptId x,
                                     ResponseId anchor, std::vector<ResponseId> candidates, const PUConfig& cfg,
                                     std::uint64_t salt) {
  auto scores = score_candidates(scorer, reference, x, anchor, candidates, salt);
  const double s_star = anchor_self_score(scorer, reference, x, anchor, salt);
  std::vector<double> margins(scores.size());
  std::vector<double> confidences(scores.size());
  for (std::size_t k = 0; k < scores.size(); ++k) {
    margins[k] = scores[k] - s_star;
    confidences[k] = positivity_confidence(margins[k], cfg);
  }
  auto distribution = induce_distribution(margins, cfg);
  return CandidateGroup{x,
                        anchor,
                        std::move(candidates),
                        std::move(scores),
                        s_star,
                        std::move(margins),
                        std::move(confidences),
                        std::move(distribution)};
}

void validate_candidate_group(const CandidateGroup& g, const PUConfig& cfg) {
  const std::size_t k = g.candidates.size();
  if (k == 0) throw std::logic_error("candidate group is empty");
  if (g.scores.size() != k || g.margins.size() != k || g.confidences.size() != k || g.distribution.size() != k) {
    throw std::logic_error("candidate group fields have mismatched lengths");
  }
  for (std::size_t i = 0; i < k; ++i) {
    if (g.margins[i] != g.scores[i] - g.anchor_score) throw std::logic_error("margin != score - anchor score");
    const double u = g.confidences[i];
    if (!(u > 0.0 && u < 1.0)) throw std::logic_error("confidence outside (0, 1)");
    if (std::abs(u - positivity_confidence(g.margins[i], cfg)) > 1e-12) throw std::logic_error("confidence != sigmoid(gamma r)");
  }
  if (!ProbabilityVector::is_valid(g.distribution.entries())) throw std::logic_error("distribution off the simplex");
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = 0; j < k; ++j) {
      if (g.margins[i] > g.margins[j] && !(g.distribution[i] > g.distribution[j])) {
        throw std::logic_error("distribution does not preserve margin order");
      }
    }
  }
}

}  // namespace pualign
