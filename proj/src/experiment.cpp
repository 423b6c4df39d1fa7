#include "pualign/experiment.hpp"

#include <algorithm>
#include <map>
#include <stdexcept>

#include <json.hpp>

#include "pualign/checkpoint.hpp"
#include "pualign/evaluation.hpp"

namespace pualign {

namespace {

std::uint64_t eval_seed(const ExperimentConfig& cfg) { return mix_seed(cfg.train.seed, 0x6576616c73); }

double evaluate(const ExperimentConfig& cfg, const Environment& env, const CategoricalTable& student,
                const CategoricalTable& frozen) {
  if (cfg.eval.opponent == Opponent::teacher) {
    return evaluate_against_teacher(student, env.utility(), cfg.task.teacher_temperature, cfg.eval, eval_seed(cfg))
        .win_rate;
  }
  return evaluate_against_policy(student, frozen, env.utility(), cfg.eval, eval_seed(cfg)).win_rate;
}

nlohmann::json event_to_json(const TrainingEvent& ev) {
  nlohmann::json j;
  j["event"] = ev.kind;
  j["stage"] = ev.stage;
  j["step"] = ev.step;
  if (ev.kind != "sft" || ev.stage == 2) {
    j["prompt"] = ev.prompt;
    j["anchor"] = ev.anchor;
  }
  if (!ev.candidates.empty()) j["candidates"] = ev.candidates;
  if (!ev.margins.empty()) j["margins"] = ev.margins;
  if (!ev.distribution.empty()) j["d_x"] = ev.distribution;
  if (!ev.q_theta.empty()) j["q_theta"] = ev.q_theta;
  j["losses"] = ev.losses;
  return j;
}

class Recorder : public TrainingObserver {
 public:
  Recorder(const ExperimentConfig& cfg, const ExperimentOptions& options, const Environment& env,
           const PolicySnapshot& start, ExperimentResult& result)
      : cfg_(cfg), options_(options), env_(env), opponent_(&start), result_(result) {}

  bool wants_events(std::size_t step) const override {
    return options_.record_run_log && cfg_.output.log_interval > 0 && step % cfg_.output.log_interval == 0;
  }

  void on_event(const TrainingEvent& ev) override { result_.run_log.push_back(event_to_json(ev).dump()); }

  void on_stage_transition(const PolicySnapshot& sft) override {
    sft_.emplace(sft);
    opponent_ = &*sft_;
    if (options_.record_run_log && cfg_.output.log_interval > 0) {
      nlohmann::json j;
      j["event"] = "stage_transition";
      j["step"] = cfg_.train.stage1_steps;
      result_.run_log.push_back(j.dump());
    }
  }

  void on_step(const StepStats& s, const Policy& policy) override {
    window_.loss += s.loss;
    window_.kl_to_ref += s.kl_to_ref;
    window_.mean_margin += s.mean_margin;
    ++window_count_;
    const std::size_t stage_end =
        s.stage == 1 ? cfg_.train.stage1_steps : cfg_.train.stage1_steps + cfg_.train.stage2_steps;
    const bool at_interval = cfg_.eval.interval > 0 && (s.step + 1) % cfg_.eval.interval == 0;
    const bool at_stage_end = s.step + 1 == stage_end;
    if (options_.interval_metrics && (at_interval || at_stage_end)) {
      const double n = static_cast<double>(window_count_);
      result_.metrics.push_back(MetricsRow{s.step, s.stage, window_.loss / n, window_.kl_to_ref / n,
                                           window_.mean_margin / n, evaluate(cfg_, env_, policy, *opponent_),
                                           s.teacher_calls});
    }
    if (at_interval || at_stage_end) {
      window_ = {};
      window_count_ = 0;
    }
    if (options_.checkpoint_dir && cfg_.output.checkpoint_interval > 0 &&
        (s.step + 1) % cfg_.output.checkpoint_interval == 0) {
      write_checkpoint(*options_.checkpoint_dir / ("checkpoint_" + std::to_string(s.step + 1) + ".ckpt"), policy);
    }
  }

 private:
  const ExperimentConfig& cfg_;
  const ExperimentOptions& options_;
  const Environment& env_;
  const CategoricalTable* opponent_;
  std::optional<PolicySnapshot> sft_;
  ExperimentResult& result_;
  StepStats window_;
  std::size_t window_count_ = 0;
};

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& cfg, const ExperimentOptions& options) {
  cfg.validate();
  Environment env(cfg.task);
  RunState state = make_run_state(cfg.train, env);
  ExperimentResult result;
  result.stage_transition_step = cfg.train.stage1_steps;
  Recorder recorder(cfg, options, env, state.start, result);
  try {
    run_stage1(cfg.train, env, state, &recorder);
    if (cfg.train.method != Method::sft_only) run_stage2(cfg.train, env, state, &recorder);
  } catch (const DivergenceError& e) {
    result.divergence = "step " + std::to_string(e.step()) + ": " + e.what();
  }
  result.history = std::move(state.history);
  result.sft = state.reference;
  result.teacher_calls = env.ledger().total_calls();
  const CategoricalTable& frozen = state.reference ? static_cast<const CategoricalTable&>(*state.reference)
                                                   : static_cast<const CategoricalTable&>(state.start);
  result.final_win_rate = evaluate(cfg, env, state.policy, frozen);
  result.final_policy = std::move(state.policy);
  return result;
}

ExperimentConfig with_seed(const ExperimentConfig& cfg, std::uint64_t seed) {
  ExperimentConfig out = cfg;
  out.task.utility_seed = seed;
  out.train.seed = seed;
  return out;
}

namespace {

CampaignRun run_member(const ExperimentConfig& cfg, std::string label, double value, std::uint64_t seed) {
  ExperimentOptions options;
  options.record_run_log = false;
  options.interval_metrics = false;
  const ExperimentResult r = run_experiment(cfg, options);
  return CampaignRun{std::move(label), value, seed, r.final_win_rate, r.teacher_calls, r.divergence.has_value()};
}

}  // namespace

std::vector<CampaignRun> run_compare(const ExperimentConfig& cfg) {
  std::vector<CampaignRun> runs;
  for (Method m : cfg.campaign.methods) {
    for (std::uint64_t seed : cfg.campaign.seeds) {
      ExperimentConfig member = with_seed(cfg, seed);
      member.train.method = m;
      runs.push_back(run_member(member, std::string(to_string(m)), 0.0, seed));
    }
  }
  return runs;
}

std::vector<CampaignRun> run_sweep(const ExperimentConfig& cfg) {
  if (!cfg.sweep || cfg.sweep->param.empty()) throw ConfigError(0, "sweep.param", "no sweep parameter configured");
  std::vector<double> values = cfg.sweep->values.empty() ? default_sweep_values(cfg.sweep->param) : cfg.sweep->values;
  if (values.empty()) throw ConfigError(0, "sweep.values", "no sweep values configured");
  std::sort(values.begin(), values.end());
  std::vector<CampaignRun> runs;
  for (double v : values) {
    for (std::uint64_t seed : cfg.campaign.seeds) {
      ExperimentConfig member = with_seed(cfg, seed);
      set_config_value(member, cfg.sweep->param, format_double(v));
      runs.push_back(run_member(member, format_double(v), v, seed));
    }
  }
  return runs;
}

double median(std::vector<double> values) {
  if (values.empty()) throw std::invalid_argument("median of an empty list");
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

std::vector<SummaryRow> summarize(const std::vector<CampaignRun>& runs) {
  std::vector<SummaryRow> rows;
  std::map<std::string, std::vector<double>> rates;
  for (const auto& r : runs) {
    auto it = std::find_if(rows.begin(), rows.end(), [&](const SummaryRow& s) { return s.label == r.label; });
    if (it == rows.end()) {
      rows.push_back(SummaryRow{r.label, r.value, 0.0, 0.0, 0.0, 0, 0});
      it = rows.end() - 1;
    }
    it->teacher_calls = std::max(it->teacher_calls, r.teacher_calls);
    ++it->runs;
    rates[r.label].push_back(r.win_rate);
  }
  for (auto& row : rows) {
    const auto& v = rates[row.label];
    row.median = median(v);
    row.min = *std::min_element(v.begin(), v.end());
    row.max = *std::max_element(v.begin(), v.end());
  }
  return rows;
}

}  // namespace pualign
