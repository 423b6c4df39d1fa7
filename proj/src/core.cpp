#include "pualign/core.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace pualign {

namespace {

void require_finite(std::span<const double> v) {
  if (v.empty()) throw std::invalid_argument("empty weight vector");
  for (double x : v) {
    if (!std::isfinite(x)) throw std::invalid_argument("non-finite log weight");
  }
}

}  // namespace

ProbabilityVector::ProbabilityVector(std::vector<double> entries) : entries_(std::move(entries)) {
  if (entries_.empty()) throw std::invalid_argument("empty probability vector");
  double sum = 0.0;
  for (double p : entries_) {
    if (!std::isfinite(p) || p < 0.0) {
      throw std::invalid_argument("probability entry is negative or non-finite");
    }
    sum += p;
  }
  if (std::abs(sum - 1.0) > kSimplexTolerance) {
    throw std::invalid_argument("probability entries sum to " + std::to_string(sum));
  }
}

bool ProbabilityVector::is_valid(std::span<const double> entries) {
  if (entries.empty()) return false;
  double sum = 0.0;
  for (double p : entries) {
    if (!std::isfinite(p) || p < 0.0) return false;
    sum += p;
  }
  return std::abs(sum - 1.0) <= kSimplexTolerance;
}

LogWeightVector::LogWeightVector(std::vector<double> entries) : entries_(std::move(entries)) {
  require_finite(entries_);
}

double log_sum_exp(std::span<const double> v) {
  require_finite(v);
  const double m = *std::max_element(v.begin(), v.end());
  double acc = 0.0;
  for (double x : v) acc += std::exp(x - m);
  // acc >= 1 because the max term contributes exp(0).
  return m + std::log(acc);
}

ProbabilityVector normalize_log_weights(std::span<const double> v) {
  const double lse = log_sum_exp(v);
  std::vector<double> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = std::exp(v[i] - lse);
  return ProbabilityVector(std::move(out));
}

double kl_divergence(const ProbabilityVector& p, const ProbabilityVector& q) {
  if (p.size() != q.size()) throw std::invalid_argument("kl_divergence: length mismatch");
  double kl = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] == 0.0) continue;
    if (q[i] == 0.0) throw std::domain_error("absolute continuity violated");
    kl += p[i] * (std::log(p[i]) - std::log(q[i]));
  }
  // Rounding can leave a tiny negative value when p and q agree.
  return std::max(kl, 0.0);
}

ProbabilityVector softmax(std::span<const double> logits, double temperature) {
  if (!(temperature > 0.0) || !std::isfinite(temperature)) {
    throw std::invalid_argument("softmax temperature must be positive");
  }
  std::vector<double> scaled(logits.begin(), logits.end());
  for (double& x : scaled) x /= temperature;
  return normalize_log_weights(scaled);
}

std::size_t sample_categorical(const ProbabilityVector& p, std::mt19937_64& rng) {
  const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
  double acc = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    acc += p[i];
    if (u < acc) return i;
  }
  // u landed in the rounding slack above the last partial sum.
  for (std::size_t i = p.size(); i-- > 0;) {
    if (p[i] > 0.0) return i;
  }
  return p.size() - 1;
}

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double softplus(double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); }

double log_sigmoid(double x) { return -softplus(-x); }

}  // namespace pualign
