#pragma once

// Simplex and divergence primitives. Everything here works in the log domain
// and normalizes through a max-shifted log-sum-exp.

#include <cstddef>
#include <random>
#include <span>
#include <vector>

namespace pualign {

/// Absolute tolerance on the sum of a probability vector.
inline constexpr double kSimplexTolerance = 1e-9;

/// A point on the probability simplex. Construction validates; once built the
/// entries are immutable.
class ProbabilityVector {
 public:
  /// Throws std::invalid_argument if `entries` is empty, has a negative or
  /// non-finite entry, or does not sum to 1 within kSimplexTolerance.
  explicit ProbabilityVector(std::vector<double> entries);

  std::size_t size() const { return entries_.size(); }
  double operator[](std::size_t i) const { return entries_[i]; }
  std::span<const double> entries() const { return entries_; }
  auto begin() const { return entries_.begin(); }
  auto end() const { return entries_.end(); }

  /// True if `entries` would pass the constructor's checks.
  static bool is_valid(std::span<const double> entries);

 private:
  std::vector<double> entries_;
};

/// Unnormalized log-domain weights. Non-empty, every entry finite.
class LogWeightVector {
 public:
  explicit LogWeightVector(std::vector<double> entries);

  std::size_t size() const { return entries_.size(); }
  double operator[](std::size_t i) const { return entries_[i]; }
  std::span<const double> entries() const { return entries_; }
  operator std::span<const double>() const { return entries_; }

 private:
  std::vector<double> entries_;
};

/// log(sum(exp(v))) without intermediate overflow. The result is >= max(v).
double log_sum_exp(std::span<const double> v);

/// exp(v_i - log_sum_exp(v)).
ProbabilityVector normalize_log_weights(std::span<const double> v);

/// KL(p || q) with the 0 log 0 = 0 convention. Throws if p puts mass where q
/// has none.
double kl_divergence(const ProbabilityVector& p, const ProbabilityVector& q);

/// normalize_log_weights(logits / temperature); temperature must be > 0.
ProbabilityVector softmax(std::span<const double> logits, double temperature = 1.0);

/// Inverse-CDF draw from a probability vector.
std::size_t sample_categorical(const ProbabilityVector& p, std::mt19937_64& rng);

double sigmoid(double x);
/// log(1 + exp(x)), stable for large |x|.
double softplus(double x);
/// log(sigmoid(x)) as -softplus(-x).
double log_sigmoid(double x);

}  // namespace pualign
