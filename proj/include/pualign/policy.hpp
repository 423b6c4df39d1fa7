#pragma once

// Tabular student: one categorical distribution over the response space per
// prompt, parameterized by unconstrained logits.

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "pualign/core.hpp"
#include "pualign/sim_env.hpp"

namespace pualign {

/// Dense row-major N x V matrix of doubles.
class LogitTable {
 public:
  LogitTable() = default;
  LogitTable(std::size_t rows, std::size_t cols, double fill = 0.0);
  LogitTable(std::size_t rows, std::size_t cols, std::vector<double> data);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::span<const double> row(std::size_t r) const;
  std::span<double> row(std::size_t r);
  double& at(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double at(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
  const std::vector<double>& data() const { return data_; }
  std::vector<double>& data() { return data_; }

  bool same_shape(const LogitTable& other) const { return rows_ == other.rows_ && cols_ == other.cols_; }
  bool operator==(const LogitTable&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// Read-only view shared by the live policy and frozen snapshots.
class CategoricalTable {
 public:
  std::size_t num_prompts() const { return logits_.rows(); }
  std::size_t num_responses() const { return logits_.cols(); }
  const LogitTable& logits() const { return logits_; }
  std::span<const double> logits(PromptId x) const;

  /// logits[x][y] - log_sum_exp(logits[x]); always <= 0.
  double log_prob(PromptId x, ResponseId y) const;
  std::vector<double> log_probs(PromptId x) const;
  ProbabilityVector distribution(PromptId x) const;

 protected:
  CategoricalTable() = default;
  explicit CategoricalTable(LogitTable logits);
  void check(PromptId x) const;
  void check(PromptId x, ResponseId y) const;

  LogitTable logits_;
};

class PolicySnapshot;

class Policy : public CategoricalTable {
 public:
  /// All-zero logits: the uniform base policy.
  Policy(std::size_t num_prompts, std::size_t num_responses);
  explicit Policy(LogitTable logits, std::uint64_t version = 0);

  std::uint64_t version() const { return version_; }
  PolicySnapshot snapshot() const;

  /// Mutable access for optimizers. Callers must keep entries finite.
  LogitTable& mutable_logits() { return logits_; }
  void bump_version() { ++version_; }

 private:
  std::uint64_t version_ = 0;
};

/// Frozen copy of a policy's logits. Has no mutators.
class PolicySnapshot : public CategoricalTable {
 public:
  PolicySnapshot(LogitTable logits, std::uint64_t taken_at_version);
  std::uint64_t taken_at_version() const { return taken_at_version_; }

 private:
  std::uint64_t taken_at_version_;
};

/// Loss value plus its gradient with respect to every logit.
struct GradientRecord {
  LogitTable d_logits;
  double loss_value = 0.0;

  static GradientRecord zeros_like(const CategoricalTable& table);
  void add_scaled(const GradientRecord& other, double scale);
  bool all_finite() const;
};

struct SftExample {
  PromptId prompt;
  ResponseId response;
};

/// K i.i.d. draws from the policy row at x.
std::vector<ResponseId> sample_group(const CategoricalTable& policy, PromptId x, std::size_t k,
                                     std::mt19937_64& rng);

/// Policy likelihoods renormalized over the sampled group. Duplicated responses
/// keep one entry each.
ProbabilityVector group_q(const CategoricalTable& policy, PromptId x, std::span<const ResponseId> group);

/// out.d_logits[x] += coef * d log p(y|x) / d logits[x] = coef * (onehot(y) - p(.|x)).
void accumulate_log_prob_grad(const CategoricalTable& policy, PromptId x, ResponseId y, double coef,
                              GradientRecord& out);

/// Mean negative log-likelihood over the pairs and its gradient.
GradientRecord sft_loss_grad(const CategoricalTable& policy, std::span<const SftExample> pairs);

/// KL(p(.|x) || ref(.|x)) over the full response space.
double kl_to_reference(const CategoricalTable& policy, const CategoricalTable& reference, PromptId x);

/// Adds scale * d KL(p(.|x) || ref(.|x)) into out.d_logits and returns the KL.
double accumulate_kl_to_reference_grad(const CategoricalTable& policy, const CategoricalTable& reference,
                                       PromptId x, double scale, GradientRecord& out);

GradientRecord kl_to_reference_grad(const CategoricalTable& policy, const CategoricalTable& reference,
                                    PromptId x);

}  // namespace pualign
