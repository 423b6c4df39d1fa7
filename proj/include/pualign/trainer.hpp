#pragma once

// Two-stage pipeline: Stage I fits the student to one teacher response per
// prompt; Stage II reuses that response as the anchor and updates the student
// from locally sampled candidate groups.

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "pualign/objectives.hpp"
#include "pualign/policy.hpp"
#include "pualign/pu_induction.hpp"
#include "pualign/sim_env.hpp"

namespace pualign {

enum class Method { sft_only, sft_then_sft, singlepair_dpo, anchorrank_dpo, anchor_grpo, ldl_grpo };

Method parse_method(std::string_view name);
std::string_view to_string(Method method);
bool uses_candidate_groups(Method method);

enum class OptimizerKind { sgd, sgd_momentum };

OptimizerKind parse_optimizer(std::string_view name);
std::string_view to_string(OptimizerKind kind);

struct TrainConfig {
  Method method = Method::ldl_grpo;
  std::size_t k = 8;
  std::size_t batch_size = 16;
  std::size_t stage1_steps = 2000;
  std::size_t stage2_steps = 30000;
  double learning_rate = 0.1;
  OptimizerKind optimizer = OptimizerKind::sgd;
  double momentum = 0.9;
  PUConfig pu;
  double beta = 0.01;
  double dpo_beta = 0.1;
  /// Pair cap for anchor-ranked DPO; 0 means K - 1.
  std::size_t max_pairs = 0;
  ScorerKind scorer = ScorerKind::anchor_loglik;
  /// Bonus lambda added to the anchor's own reference log-likelihood.
  double anchor_bonus = 1.0;
  /// Noise scale of the utility_proxy scorer.
  double proxy_noise = 0.0;
  std::uint64_t seed = 1;
  bool anchor_cache = true;

  void validate() const;
};

class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(std::size_t step, const std::string& what) : std::runtime_error(what), step_(step) {}
  std::size_t step() const { return step_; }

 private:
  std::size_t step_;
};

class OptimizerState {
 public:
  OptimizerState(OptimizerKind kind, double momentum);

  OptimizerKind kind() const { return kind_; }
  std::uint64_t steps() const { return steps_; }
  const LogitTable& velocity() const { return velocity_; }

  /// sgd: logits -= lr * g. sgd_momentum: v = mu v + g; logits -= lr * v.
  /// Throws DivergenceError (leaving the policy untouched) on a non-finite
  /// gradient or a non-finite result.
  void step(Policy& policy, const GradientRecord& grad, double lr);

 private:
  OptimizerKind kind_;
  double momentum_;
  LogitTable velocity_;
  std::uint64_t steps_ = 0;
};

void optimizer_step(OptimizerState& opt, Policy& policy, const GradientRecord& grad, double lr);

/// One teacher response per prompt. Inserting is the only way it talks to the teacher.
class AnchorCache {
 public:
  ResponseId fetch(PromptId x, TeacherOracle& teacher);
  std::optional<ResponseId> find(PromptId x) const;
  std::size_t size() const { return anchors_.size(); }
  const std::map<PromptId, ResponseId>& entries() const { return anchors_; }

 private:
  std::map<PromptId, ResponseId> anchors_;
};

/// Task, ledger and teacher bundled together. Pinned in memory because the
/// teacher holds references into it.
class Environment {
 public:
  explicit Environment(const TaskSpec& spec);
  Environment(const Environment&) = delete;
  Environment& operator=(const Environment&) = delete;

  const TaskSpec& spec() const { return spec_; }
  const Task& task() const { return task_; }
  const std::vector<PromptId>& prompts() const { return task_.prompts; }
  const LatentUtility& utility() const { return task_.utility; }
  TeacherOracle& teacher() { return teacher_; }
  const BudgetLedger& ledger() const { return ledger_; }

 private:
  TaskSpec spec_;
  Task task_;
  BudgetLedger ledger_;
  TeacherOracle teacher_;
};

struct StepStats {
  std::size_t step = 0;        // global step, counted across both stages
  int stage = 1;
  double loss = 0.0;
  double kl_to_ref = 0.0;      // stage 1: to the starting policy; stage 2: to p_sft
  double mean_margin = 0.0;    // group methods only
  std::uint64_t teacher_calls = 0;
};

/// A single prompt's contribution within one step, for the audit log.
struct TrainingEvent {
  std::string kind;  // "group", "pair", "sft"
  int stage = 2;
  std::size_t step = 0;
  PromptId prompt = 0;
  ResponseId anchor = 0;
  std::vector<ResponseId> candidates;
  std::vector<double> margins;
  std::vector<double> distribution;
  std::vector<double> q_theta;
  std::map<std::string, double> losses;
};

class TrainingObserver {
 public:
  virtual ~TrainingObserver() = default;
  virtual void on_step(const StepStats&, const Policy&) {}
  virtual bool wants_events(std::size_t /*step*/) const { return false; }
  virtual void on_event(const TrainingEvent&) {}
  virtual void on_stage_transition(const PolicySnapshot& /*sft*/) {}
};

struct RunState {
  Policy policy;
  PolicySnapshot start;                    // policy at the start of Stage I
  std::optional<PolicySnapshot> reference;  // p_sft, set when Stage I ends
  OptimizerState optimizer;
  AnchorCache anchors;
  std::size_t global_step = 0;
  std::vector<StepStats> history;
  std::mt19937_64 rng;
};

/// Fresh state with the uniform base policy.
RunState make_run_state(const TrainConfig& config, const Environment& env);

Scorer make_scorer(const TrainConfig& config, const Environment& env);

/// Fetches every anchor through the cache, then runs config.stage1_steps SFT
/// steps. Returns (and stores in state.reference) the frozen p_sft.
PolicySnapshot run_stage1(const TrainConfig& config, Environment& env, RunState& state,
                          TrainingObserver* observer = nullptr);

/// Requires state.reference. Runs config.stage2_steps updates of config.method.
void run_stage2(const TrainConfig& config, Environment& env, RunState& state, TrainingObserver* observer = nullptr);

/// Stage I, then Stage II unless the method is sft_only.
RunState run_pipeline(const TrainConfig& config, Environment& env, TrainingObserver* observer = nullptr);

}  // namespace pualign
