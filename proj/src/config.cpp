#include "pualign/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>

namespace pualign {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split_list(std::string_view s) {
  std::vector<std::string_view> out;
  while (true) {
    const auto comma = s.find(',');
    const auto item = trim(s.substr(0, comma));
    if (!item.empty()) out.push_back(item);
    if (comma == std::string_view::npos) break;
    s.remove_prefix(comma + 1);
  }
  return out;
}

double to_double(std::string_view key, std::string_view v) {
  double out = 0.0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || ptr != v.data() + v.size()) {
    throw ConfigError(0, std::string(key), "expected a number, got '" + std::string(v) + "'");
  }
  return out;
}

std::uint64_t to_uint(std::string_view key, std::string_view v) {
  std::uint64_t out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || ptr != v.data() + v.size()) {
    throw ConfigError(0, std::string(key), "expected a non-negative integer, got '" + std::string(v) + "'");
  }
  return out;
}

bool to_bool(std::string_view key, std::string_view v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ConfigError(0, std::string(key), "expected true or false, got '" + std::string(v) + "'");
}

template <typename F>
auto wrap(std::string_view key, F&& f) {
  try {
    return f();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(0, std::string(key), e.what());
  }
}

struct Field {
  std::string_view key;
  std::function<void(ExperimentConfig&, std::string_view key, std::string_view value)> set;
  std::function<std::string(const ExperimentConfig&)> get;
  bool sweepable = false;
};

template <typename T>
std::string join(const std::vector<T>& items, auto&& fmt) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out += ", ";
    out += fmt(items[i]);
  }
  return out;
}

#define PUALIGN_DOUBLE(KEY, MEMBER, SWEEP)                                                      \
  Field {                                                                                        \
    KEY, [](ExperimentConfig& c, std::string_view k, std::string_view v) { c.MEMBER = to_double(k, v); }, \
        [](const ExperimentConfig& c) { return format_double(c.MEMBER); }, SWEEP                 \
  }
#define PUALIGN_UINT(KEY, MEMBER, SWEEP)                                                         \
  Field {                                                                                        \
    KEY,                                                                                         \
        [](ExperimentConfig& c, std::string_view k, std::string_view v) {                        \
          c.MEMBER = static_cast<decltype(c.MEMBER)>(to_uint(k, v));                             \
        },                                                                                       \
        [](const ExperimentConfig& c) { return std::to_string(c.MEMBER); }, SWEEP                \
  }

const std::vector<Field>& fields() {
  static const std::vector<Field> table = {
      PUALIGN_UINT("task.n", task.num_prompts, false),
      PUALIGN_UINT("task.v", task.response_space_size, false),
      PUALIGN_UINT("task.seed", task.utility_seed, false),
      PUALIGN_DOUBLE("task.noise_scale", task.utility_noise_scale, false),
      PUALIGN_DOUBLE("task.gold_bonus", task.gold_bonus, false),
      PUALIGN_DOUBLE("task.positive_quantile", task.positive_quantile, false),
      PUALIGN_DOUBLE("task.teacher_temperature", task.teacher_temperature, false),
      Field{"train.method",
            [](ExperimentConfig& c, std::string_view k, std::string_view v) {
              c.train.method = wrap(k, [&] { return parse_method(v); });
            },
            [](const ExperimentConfig& c) { return std::string(to_string(c.train.method)); }},
      PUALIGN_UINT("train.k", train.k, true),
      PUALIGN_UINT("train.batch_size", train.batch_size, true),
      PUALIGN_UINT("train.stage1_steps", train.stage1_steps, true),
      PUALIGN_UINT("train.stage2_steps", train.stage2_steps, true),
      PUALIGN_DOUBLE("train.learning_rate", train.learning_rate, true),
      Field{"train.optimizer",
            [](ExperimentConfig& c, std::string_view k, std::string_view v) {
              c.train.optimizer = wrap(k, [&] { return parse_optimizer(v); });
            },
            [](const ExperimentConfig& c) { return std::string(to_string(c.train.optimizer)); }},
      PUALIGN_DOUBLE("train.momentum", train.momentum, true),
      PUALIGN_DOUBLE("train.pu.gamma", train.pu.gamma, true),
      PUALIGN_DOUBLE("train.pu.tau", train.pu.tau, true),
      PUALIGN_DOUBLE("train.beta", train.beta, true),
      PUALIGN_DOUBLE("train.dpo_beta", train.dpo_beta, true),
      PUALIGN_UINT("train.max_pairs", train.max_pairs, true),
      Field{"train.scorer",
            [](ExperimentConfig& c, std::string_view k, std::string_view v) {
              c.train.scorer = wrap(k, [&] { return parse_scorer_kind(v); });
            },
            [](const ExperimentConfig& c) { return std::string(to_string(c.train.scorer)); }},
      PUALIGN_DOUBLE("train.scorer.anchor_bonus", train.anchor_bonus, true),
      PUALIGN_DOUBLE("train.scorer.noise", train.proxy_noise, true),
      PUALIGN_UINT("train.seed", train.seed, false),
      Field{"train.anchor_cache",
            [](ExperimentConfig& c, std::string_view k, std::string_view v) { c.train.anchor_cache = to_bool(k, v); },
            [](const ExperimentConfig& c) { return std::string(c.train.anchor_cache ? "true" : "false"); }},
      PUALIGN_UINT("eval.num_eval_prompts", eval.num_eval_prompts, false),
      PUALIGN_UINT("eval.samples_per_prompt", eval.samples_per_prompt, false),
      PUALIGN_DOUBLE("eval.tie_band", eval.tie_band, false),
      Field{"eval.opponent",
            [](ExperimentConfig& c, std::string_view k, std::string_view v) {
              c.eval.opponent = wrap(k, [&] { return parse_opponent(v); });
            },
            [](const ExperimentConfig& c) { return std::string(to_string(c.eval.opponent)); }},
      PUALIGN_UINT("eval.interval", eval.interval, false),
      Field{"output.dir", [](ExperimentConfig& c, std::string_view, std::string_view v) { c.output.dir = std::string(v); },
            [](const ExperimentConfig& c) { return c.output.dir; }},
      PUALIGN_UINT("output.log_interval", output.log_interval, false),
      PUALIGN_UINT("output.checkpoint_interval", output.checkpoint_interval, false),
      Field{"campaign.methods",
            [](ExperimentConfig& c, std::string_view k, std::string_view v) {
              c.campaign.methods.clear();
              for (auto item : split_list(v)) c.campaign.methods.push_back(wrap(k, [&] { return parse_method(item); }));
            },
            [](const ExperimentConfig& c) {
              return join(c.campaign.methods, [](Method m) { return std::string(to_string(m)); });
            }},
      Field{"campaign.seeds",
            [](ExperimentConfig& c, std::string_view k, std::string_view v) {
              c.campaign.seeds.clear();
              for (auto item : split_list(v)) c.campaign.seeds.push_back(to_uint(k, item));
            },
            [](const ExperimentConfig& c) {
              return join(c.campaign.seeds, [](std::uint64_t s) { return std::to_string(s); });
            }},
      Field{"sweep.param",
            [](ExperimentConfig& c, std::string_view k, std::string_view v) {
              if (!is_sweepable(v)) throw ConfigError(0, std::string(k), "cannot sweep '" + std::string(v) + "'");
              if (!c.sweep) c.sweep.emplace();
              c.sweep->param = std::string(v);
            },
            [](const ExperimentConfig& c) { return c.sweep ? c.sweep->param : std::string(); }},
      Field{"sweep.values",
            [](ExperimentConfig& c, std::string_view k, std::string_view v) {
              if (!c.sweep) c.sweep.emplace();
              c.sweep->values.clear();
              for (auto item : split_list(v)) c.sweep->values.push_back(to_double(k, item));
            },
            [](const ExperimentConfig& c) { return c.sweep ? join(c.sweep->values, format_double) : std::string(); }},
  };
  return table;
}

#undef PUALIGN_DOUBLE
#undef PUALIGN_UINT

const Field* find_field(std::string_view key) {
  for (const auto& f : fields()) {
    if (f.key == key) return &f;
  }
  return nullptr;
}

}  // namespace

Opponent parse_opponent(std::string_view name) {
  if (name == "teacher") return Opponent::teacher;
  if (name == "frozen_sft") return Opponent::frozen_sft;
  throw std::invalid_argument("unknown opponent '" + std::string(name) + "'");
}

std::string_view to_string(Opponent opponent) { return opponent == Opponent::teacher ? "teacher" : "frozen_sft"; }

ConfigError::ConfigError(std::size_t line, const std::string& key, const std::string& message)
    : std::runtime_error((line ? "line " + std::to_string(line) + ": " : std::string()) +
                         (key.empty() ? std::string() : "'" + key + "': ") + message),
      line_(line),
      key_(key),
      message_(message) {}

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

bool is_sweepable(std::string_view key) {
  const Field* f = find_field(key);
  return f != nullptr && f->sweepable;
}

void set_config_value(ExperimentConfig& cfg, std::string_view key, std::string_view value) {
  const Field* f = find_field(key);
  if (!f) throw ConfigError(0, std::string(key), "unknown key");
  f->set(cfg, key, value);
}

std::vector<double> default_sweep_values(std::string_view param) {
  if (param == "train.pu.tau") return {0.6, 0.9, 1.2, 1.5};
  if (param == "train.beta") return {0.001, 0.01, 0.1, 1.0, 10.0};
  return {};
}

void ExperimentConfig::validate() const {
  auto check = [](std::string_view section, auto&& f) {
    try {
      f();
    } catch (const std::invalid_argument& e) {
      throw ConfigError(0, std::string(section), e.what());
    }
  };
  check("task", [&] { task.validate(); });
  check("train", [&] { train.validate(); });
  if (eval.num_eval_prompts < 1) throw ConfigError(0, "eval.num_eval_prompts", "must be >= 1");
  if (eval.samples_per_prompt < 1) throw ConfigError(0, "eval.samples_per_prompt", "must be >= 1");
  if (!(eval.tie_band >= 0.0)) throw ConfigError(0, "eval.tie_band", "must be >= 0");
  if (campaign.methods.empty()) throw ConfigError(0, "campaign.methods", "must list at least one method");
  if (campaign.seeds.empty()) throw ConfigError(0, "campaign.seeds", "must list at least one seed");
  for (Method m : campaign.methods) {
    if (uses_candidate_groups(m) && train.k < 2) {
      throw ConfigError(0, "campaign.methods", "method " + std::string(to_string(m)) + " needs train.k >= 2");
    }
  }
  if (sweep && !sweep->param.empty() && !is_sweepable(sweep->param)) {
    throw ConfigError(0, "sweep.param", "cannot sweep '" + sweep->param + "'");
  }
}

ExperimentConfig parse_config(std::string_view text) {
  ExperimentConfig cfg;
  std::size_t line_no = 0;
  while (!text.empty()) {
    ++line_no;
    const auto nl = text.find('\n');
    const auto line = trim(text.substr(0, nl));
    text.remove_prefix(nl == std::string_view::npos ? text.size() : nl + 1);
    if (line.empty() || line.front() == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ConfigError(line_no, "", "expected 'key = value'");
    const auto key = trim(line.substr(0, eq));
    const auto value = trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError(line_no, "", "missing key");
    try {
      set_config_value(cfg, key, value);
    } catch (const ConfigError& e) {
      throw ConfigError(line_no, e.key(), e.message());
    }
  }
  cfg.validate();
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read config file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string canonical_config_text(const ExperimentConfig& cfg) {
  std::string out;
  for (const auto& f : fields()) {
    const std::string v = f.get(cfg);
    if ((f.key == "sweep.param" || f.key == "sweep.values") && !cfg.sweep) continue;
    out += std::string(f.key) + " = " + v + "\n";
  }
  return out;
}

}  // namespace pualign
