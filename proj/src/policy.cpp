#include "pualign/policy.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace pualign {

LogitTable::LogitTable(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

LogitTable::LogitTable(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows_ * cols_) throw std::invalid_argument("logit table: data size mismatch");
}

std::span<const double> LogitTable::row(std::size_t r) const {
  return std::span<const double>(data_).subspan(r * cols_, cols_);
}

std::span<double> LogitTable::row(std::size_t r) { return std::span<double>(data_).subspan(r * cols_, cols_); }

CategoricalTable::CategoricalTable(LogitTable logits) : logits_(std::move(logits)) {
  if (logits_.rows() < 1 || logits_.cols() < 1) throw std::invalid_argument("policy: empty logit table");
  for (double v : logits_.data()) {
    if (!std::isfinite(v)) throw std::invalid_argument("policy: non-finite logit");
  }
}

void CategoricalTable::check(PromptId x) const {
  if (x >= num_prompts()) throw std::out_of_range("policy: prompt " + std::to_string(x) + " out of range");
}

void CategoricalTable::check(PromptId x, ResponseId y) const {
  check(x);
  if (y >= num_responses()) throw std::out_of_range("policy: response " + std::to_string(y) + " out of range");
}

std::span<const double> CategoricalTable::logits(PromptId x) const {
  check(x);
  return logits_.row(x);
}

double CategoricalTable::log_prob(PromptId x, ResponseId y) const {
  check(x, y);
  const double lp = logits_.at(x, y) - log_sum_exp(logits_.row(x));
  return std::min(lp, 0.0);
}

std::vector<double> CategoricalTable::log_probs(PromptId x) const {
  const auto row = logits(x);
  const double lse = log_sum_exp(row);
  std::vector<double> out(row.size());
  for (std::size_t y = 0; y < row.size(); ++y) out[y] = std::min(row[y] - lse, 0.0);
  return out;
}

ProbabilityVector CategoricalTable::distribution(PromptId x) const { return normalize_log_weights(logits(x)); }

Policy::Policy(std::size_t num_prompts, std::size_t num_responses)
    : CategoricalTable(LogitTable(num_prompts, num_responses, 0.0)) {}

Policy::Policy(LogitTable logits, std::uint64_t version) : CategoricalTable(std::move(logits)), version_(version) {}

PolicySnapshot Policy::snapshot() const { return PolicySnapshot(logits_, version_); }

PolicySnapshot::PolicySnapshot(LogitTable logits, std::uint64_t taken_at_version)
    : CategoricalTable(std::move(logits)), taken_at_version_(taken_at_version) {}

GradientRecord GradientRecord::zeros_like(const CategoricalTable& table) {
  return GradientRecord{LogitTable(table.num_prompts(), table.num_responses(), 0.0), 0.0};
}

void GradientRecord::add_scaled(const GradientRecord& other, double scale) {
  if (!d_logits.same_shape(other.d_logits)) throw std::invalid_argument("gradient shape mismatch");
  auto& dst = d_logits.data();
  const auto& src = other.d_logits.data();
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += scale * src[i];
  loss_value += scale * other.loss_value;
}

bool GradientRecord::all_finite() const {
  if (!std::isfinite(loss_value)) return false;
  for (double g : d_logits.data()) {
    if (!std::isfinite(g)) return false;
  }
  return true;
}

std::vector<ResponseId> sample_group(const CategoricalTable& policy, PromptId x, std::size_t k,
                                     std::mt19937_64& rng) {
  const ProbabilityVector p = policy.distribution(x);
  std::vector<ResponseId> group(k);
  for (auto& y : group) y = sample_categorical(p, rng);
  return group;
}

ProbabilityVector group_q(const CategoricalTable& policy, PromptId x, std::span<const ResponseId> group) {
  if (group.empty()) throw std::invalid_argument("group_q: empty group");
  const auto lp = policy.log_probs(x);
  std::vector<double> seq(group.size());
  for (std::size_t k = 0; k < group.size(); ++k) {
    if (group[k] >= lp.size()) throw std::out_of_range("group_q: response out of range");
    seq[k] = lp[group[k]];
  }
  return normalize_log_weights(seq);
}

void accumulate_log_prob_grad(const CategoricalTable& policy, PromptId x, ResponseId y, double coef,
                              GradientRecord& out) {
  const ProbabilityVector p = policy.distribution(x);
  if (y >= p.size()) throw std::out_of_range("response out of range");
  auto g = out.d_logits.row(x);
  for (std::size_t j = 0; j < p.size(); ++j) g[j] -= coef * p[j];
  g[y] += coef;
}

GradientRecord sft_loss_grad(const CategoricalTable& policy, std::span<const SftExample> pairs) {
  if (pairs.empty()) throw std::invalid_argument("sft_loss_grad: no training pairs");
  GradientRecord out = GradientRecord::zeros_like(policy);
  const double w = 1.0 / static_cast<double>(pairs.size());
  for (const auto& [x, y] : pairs) {
    out.loss_value -= w * policy.log_prob(x, y);
    // d(-log p(y|x)) = p - onehot(y)
    accumulate_log_prob_grad(policy, x, y, -w, out);
  }
  return out;
}

double kl_to_reference(const CategoricalTable& policy, const CategoricalTable& reference, PromptId x) {
  return kl_divergence(policy.distribution(x), reference.distribution(x));
}

double accumulate_kl_to_reference_grad(const CategoricalTable& policy, const CategoricalTable& reference,
                                       PromptId x, double scale, GradientRecord& out) {
  if (!policy.logits().same_shape(reference.logits())) throw std::invalid_argument("reference shape mismatch");
  const auto lp = policy.log_probs(x);
  const auto lr = reference.log_probs(x);
  std::vector<double> p(lp.size());
  double kl = 0.0;
  for (std::size_t y = 0; y < lp.size(); ++y) {
    p[y] = std::exp(lp[y]);
    kl += p[y] * (lp[y] - lr[y]);
  }
  // d KL / d logit_j = p_j * (log p_j - log ref_j - KL)
  auto g = out.d_logits.row(x);
  for (std::size_t y = 0; y < lp.size(); ++y) g[y] += scale * p[y] * (lp[y] - lr[y] - kl);
  return kl;
}

GradientRecord kl_to_reference_grad(const CategoricalTable& policy, const CategoricalTable& reference,
                                    PromptId x) {
  GradientRecord out = GradientRecord::zeros_like(policy);
  out.loss_value = accumulate_kl_to_reference_grad(policy, reference, x, 1.0, out);
  return out;
}

}  // namespace pualign
