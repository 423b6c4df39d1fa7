#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace pualign {

/// Gradient check tolerance for every closed-form gradient.
inline constexpr double kGradcheckTolerance = 1e-5;

struct GradcheckRow {
  std::string operation;
  double max_relative_error = 0.0;
  std::size_t instances = 0;
};

/// ||a - b||_2 / max(||a||_2, ||b||_2), or 0 when both vanish.
double relative_error(std::span<const double> analytic, std::span<const double> numeric);

/// Compares sft_loss_grad, kl_to_reference_grad, ldl_grpo_loss_grad,
/// dpo_loss_grad and grpo_policy_grad against central differences with
/// h = 1e-4 and h = 1e-5 on `instances` random small problems each.
std::vector<GradcheckRow> run_gradcheck(std::uint64_t seed, std::size_t instances = 100);

}  // namespace pualign
