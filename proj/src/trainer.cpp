#include "pualign/trainer.hpp"

#include <cmath>

namespace pualign {

Method parse_method(std::string_view name) {
  if (name == "sft_only") return Method::sft_only;
  if (name == "sft_then_sft") return Method::sft_then_sft;
  if (name == "singlepair_dpo") return Method::singlepair_dpo;
  if (name == "anchorrank_dpo") return Method::anchorrank_dpo;
  if (name == "anchor_grpo") return Method::anchor_grpo;
  if (name == "ldl_grpo") return Method::ldl_grpo;
  throw std::invalid_argument("unknown method '" + std::string(name) + "'");
}

std::string_view to_string(Method method) {
  switch (method) {
    case Method::sft_only: return "sft_only";
    case Method::sft_then_sft: return "sft_then_sft";
    case Method::singlepair_dpo: return "singlepair_dpo";
    case Method::anchorrank_dpo: return "anchorrank_dpo";
    case Method::anchor_grpo: return "anchor_grpo";
    case Method::ldl_grpo: return "ldl_grpo";
  }
  return "unknown";
}

bool uses_candidate_groups(Method method) {
  return method == Method::anchorrank_dpo || method == Method::anchor_grpo || method == Method::ldl_grpo;
}

OptimizerKind parse_optimizer(std::string_view name) {
  if (name == "sgd") return OptimizerKind::sgd;
  if (name == "sgd_momentum") return OptimizerKind::sgd_momentum;
  throw std::invalid_argument("unknown optimizer '" + std::string(name) + "'");
}

std::string_view to_string(OptimizerKind kind) {
  return kind == OptimizerKind::sgd ? "sgd" : "sgd_momentum";
}

void TrainConfig::validate() const {
  if (k < 1) throw std::invalid_argument("train.k must be >= 1");
  if (uses_candidate_groups(method) && k < 2) {
    throw std::invalid_argument("train.k must be >= 2 for method " + std::string(to_string(method)));
  }
  if (batch_size < 1) throw std::invalid_argument("train.batch_size must be >= 1");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    throw std::invalid_argument("train.learning_rate must be > 0");
  }
  if (!(momentum >= 0.0 && momentum < 1.0)) throw std::invalid_argument("train.momentum must be in [0, 1)");
  pu.validate();
  if (!(beta >= 0.0) || !std::isfinite(beta)) throw std::invalid_argument("train.beta must be >= 0");
  if (!(dpo_beta > 0.0) || !std::isfinite(dpo_beta)) throw std::invalid_argument("train.dpo_beta must be > 0");
  if (!(anchor_bonus >= 0.0) || !std::isfinite(anchor_bonus)) {
    throw std::invalid_argument("train.scorer.anchor_bonus must be >= 0");
  }
  if (!(proxy_noise >= 0.0) || !std::isfinite(proxy_noise)) {
    throw std::invalid_argument("train.scorer.noise must be >= 0");
  }
  if (scorer == ScorerKind::custom) throw std::invalid_argument("train.scorer: custom scorers are programmatic only");
}

OptimizerState::OptimizerState(OptimizerKind kind, double momentum) : kind_(kind), momentum_(momentum) {}

void OptimizerState::step(Policy& policy, const GradientRecord& grad, double lr) {
  LogitTable& logits = policy.mutable_logits();
  if (!grad.d_logits.same_shape(logits)) throw std::invalid_argument("optimizer: gradient shape mismatch");
  if (!grad.all_finite()) throw DivergenceError(steps_, "diverged: non-finite gradient or loss");

  const auto& g = grad.d_logits.data();
  std::vector<double> next = logits.data();
  if (kind_ == OptimizerKind::sgd) {
    for (std::size_t i = 0; i < next.size(); ++i) next[i] -= lr * g[i];
  } else {
    if (!velocity_.same_shape(logits)) velocity_ = LogitTable(logits.rows(), logits.cols(), 0.0);
    auto v = velocity_.data();
    for (std::size_t i = 0; i < next.size(); ++i) {
      v[i] = momentum_ * v[i] + g[i];
      next[i] -= lr * v[i];
    }
    for (double x : v) {
      if (!std::isfinite(x)) throw DivergenceError(steps_, "diverged: non-finite momentum buffer");
    }
    velocity_.data() = std::move(v);
  }
  for (double x : next) {
    if (!std::isfinite(x)) throw DivergenceError(steps_, "diverged: non-finite logits after update");
  }
  logits.data() = std::move(next);
  policy.bump_version();
  ++steps_;
}

void optimizer_step(OptimizerState& opt, Policy& policy, const GradientRecord& grad, double lr) {
  opt.step(policy, grad, lr);
}

ResponseId AnchorCache::fetch(PromptId x, TeacherOracle& teacher) {
  if (auto it = anchors_.find(x); it != anchors_.end()) return it->second;
  const ResponseId a = teacher.respond(x);
  anchors_.emplace(x, a);
  return a;
}

std::optional<ResponseId> AnchorCache::find(PromptId x) const {
  auto it = anchors_.find(x);
  if (it == anchors_.end()) return std::nullopt;
  return it->second;
}

Environment::Environment(const TaskSpec& spec)
    : spec_(spec),
      task_(generate_task(spec)),
      teacher_(task_.utility, spec.teacher_temperature, ledger_, spec.utility_seed) {}

RunState make_run_state(const TrainConfig& config, const Environment& env) {
  Policy base(env.spec().num_prompts, env.spec().response_space_size);
  PolicySnapshot start = base.snapshot();
  return RunState{std::move(base),
                  std::move(start),
                  std::nullopt,
                  OptimizerState(config.optimizer, config.momentum),
                  AnchorCache{},
                  0,
                  {},
                  std::mt19937_64(mix_seed(config.seed, 0x747261696e))};
}

Scorer make_scorer(const TrainConfig& config, const Environment& env) {
  switch (config.scorer) {
    case ScorerKind::anchor_loglik: return Scorer::anchor_loglik(config.anchor_bonus);
    case ScorerKind::utility_proxy:
      return Scorer::utility_proxy(env.utility(), config.proxy_noise, mix_seed(config.seed, 0x6e6f697365));
    case ScorerKind::custom: break;
  }
  throw std::invalid_argument("train.scorer: custom scorers are programmatic only");
}

namespace {

std::vector<PromptId> sample_batch(const std::vector<PromptId>& pool, std::size_t b, std::mt19937_64& rng) {
  std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
  std::vector<PromptId> batch(b);
  for (auto& x : batch) x = pool[pick(rng)];
  return batch;
}

void finish_step(RunState& state, StepStats stats, TrainingObserver* observer) {
  state.history.push_back(stats);
  if (observer) observer->on_step(stats, state.policy);
}

}  // namespace

PolicySnapshot run_stage1(const TrainConfig& config, Environment& env, RunState& state, TrainingObserver* observer) {
  config.validate();
  const auto& pool = env.prompts();
  if (config.stage1_steps > 0 && pool.empty()) throw std::invalid_argument("stage 1: empty prompt pool");
  for (PromptId x : pool) state.anchors.fetch(x, env.teacher());

  const double lr = config.learning_rate;
  for (std::size_t t = 0; t < config.stage1_steps; ++t) {
    const auto batch = sample_batch(pool, config.batch_size, state.rng);
    std::vector<SftExample> pairs;
    pairs.reserve(batch.size());
    double kl = 0.0;
    for (PromptId x : batch) {
      pairs.push_back(SftExample{x, *state.anchors.find(x)});
      kl += kl_to_reference(state.policy, state.start, x);
    }
    GradientRecord grad = sft_loss_grad(state.policy, pairs);
    const std::size_t step = state.global_step;
    if (observer && observer->wants_events(step)) {
      TrainingEvent ev;
      ev.kind = "sft";
      ev.stage = 1;
      ev.step = step;
      ev.losses["nll"] = grad.loss_value;
      observer->on_event(ev);
    }
    try {
      state.optimizer.step(state.policy, grad, lr);
    } catch (const DivergenceError& e) {
      throw DivergenceError(step, e.what());
    }
    ++state.global_step;
    finish_step(state,
                StepStats{step, 1, grad.loss_value, kl / static_cast<double>(batch.size()), 0.0,
                          env.ledger().total_calls()},
                observer);
  }
  state.reference = state.policy.snapshot();
  if (observer) observer->on_stage_transition(*state.reference);
  return *state.reference;
}

void run_stage2(const TrainConfig& config, Environment& env, RunState& state, TrainingObserver* observer) {
  config.validate();
  if (!state.reference) throw std::logic_error("stage 2 requires the frozen SFT reference");
  if (config.method == Method::sft_only) return;
  const PolicySnapshot& ref = *state.reference;
  const Scorer scorer = make_scorer(config, env);
  const LdlGrpoConfig ldl{config.beta, config.pu};
  const DpoConfig dpo{config.dpo_beta};
  const std::size_t max_pairs = config.max_pairs == 0 ? config.k - 1 : config.max_pairs;
  const double lr = config.learning_rate;
  const auto& pool = env.prompts();

  for (std::size_t t = 0; t < config.stage2_steps; ++t) {
    const std::size_t step = state.global_step;
    const auto batch = sample_batch(pool, config.batch_size, state.rng);
    const double w = 1.0 / static_cast<double>(batch.size());
    const bool log_events = observer && observer->wants_events(step);
    GradientRecord grad = GradientRecord::zeros_like(state.policy);
    double kl_sum = 0.0;
    double margin_sum = 0.0;

    for (std::size_t slot = 0; slot < batch.size(); ++slot) {
      const PromptId x = batch[slot];
      const ResponseId anchor = config.anchor_cache ? state.anchors.fetch(x, env.teacher()) : env.teacher().respond(x);
      const std::uint64_t salt = mix_seed(step, slot);
      TrainingEvent ev;
      ev.stage = 2;
      ev.step = step;
      ev.prompt = x;
      ev.anchor = anchor;

      switch (config.method) {
        case Method::sft_only: break;
        case Method::sft_then_sft: {
          const SftExample pair{x, anchor};
          const GradientRecord g = sft_loss_grad(state.policy, std::span<const SftExample>(&pair, 1));
          grad.add_scaled(g, w);
          kl_sum += kl_to_reference(state.policy, ref, x);
          ev.kind = "sft";
          ev.losses["nll"] = g.loss_value;
          break;
        }
        case Method::singlepair_dpo: {
          const ResponseId y = sample_group(state.policy, x, 1, state.rng).front();
          kl_sum += kl_to_reference(state.policy, ref, x);
          ev.kind = "pair";
          ev.candidates = {y};
          if (y != anchor) {
            ev.losses["dpo"] = accumulate_dpo(state.policy, ref, PreferencePair{x, anchor, y}, dpo, w, grad);
          }
          break;
        }
        case Method::anchorrank_dpo:
        case Method::anchor_grpo:
        case Method::ldl_grpo: {
          auto candidates = sample_group(state.policy, x, config.k, state.rng);
          CandidateGroup group = build_candidate_group(scorer, ref, x, anchor, std::move(candidates), config.pu, salt);
          double mean_margin = 0.0;
          for (double r : group.margins) mean_margin += r;
          margin_sum += mean_margin / static_cast<double>(group.size());
          ev.kind = "group";
          ev.candidates = group.candidates;
          ev.margins = group.margins;
          ev.distribution.assign(group.distribution.begin(), group.distribution.end());

          if (config.method == Method::ldl_grpo) {
            LdlGrpoBreakdown parts;
            ev.losses["total"] = accumulate_ldl_grpo(state.policy, ref, group, ldl, w, grad, &parts);
            ev.losses["group_kl"] = parts.group_kl;
            ev.losses["reference_kl"] = parts.reference_kl;
            ev.q_theta = std::move(parts.q);
            kl_sum += parts.reference_kl;
          } else if (config.method == Method::anchor_grpo) {
            const AdvantageVector adv = grpo_scalar_advantages(group.scores);
            ev.losses["surrogate"] = accumulate_grpo(state.policy, group, adv, ref, config.beta, w, grad);
            kl_sum += kl_to_reference(state.policy, ref, x);
          } else {
            const auto pairs = rank_to_pairs(group, max_pairs);
            double dpo_loss = 0.0;
            for (const auto& p : pairs) {
              dpo_loss += accumulate_dpo(state.policy, ref, p, dpo, w / static_cast<double>(pairs.size()), grad);
            }
            ev.losses["dpo"] = pairs.empty() ? 0.0 : dpo_loss / static_cast<double>(pairs.size());
            ev.losses["pairs"] = static_cast<double>(pairs.size());
            kl_sum += kl_to_reference(state.policy, ref, x);
          }
          break;
        }
      }
      if (log_events) observer->on_event(ev);
    }

    const double loss = grad.loss_value;
    try {
      state.optimizer.step(state.policy, grad, lr);
    } catch (const DivergenceError& e) {
      throw DivergenceError(step, e.what());
    }
    ++state.global_step;
    finish_step(state,
                StepStats{step, 2, loss, kl_sum * w, margin_sum * w, env.ledger().total_calls()},
                observer);
  }
}

RunState run_pipeline(const TrainConfig& config, Environment& env, TrainingObserver* observer) {
  RunState state = make_run_state(config, env);
  run_stage1(config, env, state, observer);
  if (config.method != Method::sft_only) run_stage2(config, env, state, observer);
  return state;
}

}  // namespace pualign
