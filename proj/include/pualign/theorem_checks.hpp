#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace pualign {

struct PropertyResult {
  std::string name;
  std::uint64_t cases = 0;
  std::uint64_t violations = 0;
};

struct TheoremReport {
  std::vector<PropertyResult> properties;
  bool passed() const;
};

/// Randomized property suite over the induced label distribution:
///   order_consistency      r_i > r_j  =>  D(i) > D(j); equal margins give equal mass
///   near_optimality        max r - E_D[r] <= tau ln K
///   reweighting_dominance  E_D[r] >= E_{softmax(r/tau)}[r]
///   monotone_score_map     f(r + 1e-6) > f(r)
/// Each trial draws K in [2, 64], margins in [-10, 10] and gamma, tau
/// log-uniformly in [0.1, 10]. When `include_grid` is set the corners of that
/// box are checked as well.
TheoremReport run_theorem_checks(std::size_t trials, std::uint64_t seed, bool include_grid = true);

}  // namespace pualign
