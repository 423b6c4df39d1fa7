#include "pualign/artifacts.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "pualign/checkpoint.hpp"
#include "pualign/core.hpp"

namespace pualign {

namespace {

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = s.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(s.substr(start));
      return out;
    }
    out.push_back(s.substr(start, pos - start));
    start = pos + 1;
  }
}

template <typename T>
T parse_field(std::string_view field, std::size_t line) {
  T value{};
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc{} || ptr != field.data() + field.size()) {
    throw std::runtime_error("metrics line " + std::to_string(line) + ": bad field '" + std::string(field) + "'");
  }
  return value;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace

std::string format_metrics(const std::vector<MetricsRow>& rows) {
  std::string out(kMetricsHeader);
  out += '\n';
  for (const auto& r : rows) {
    out += std::to_string(r.step) + '\t' + std::to_string(r.stage) + '\t' + format_double(r.loss) + '\t' +
           format_double(r.kl_to_ref) + '\t' + format_double(r.mean_margin) + '\t' +
           format_double(r.win_rate_vs_opponent) + '\t' + std::to_string(r.teacher_calls) + '\n';
  }
  return out;
}

std::vector<MetricsRow> parse_metrics(std::string_view text) {
  auto lines = split(text, '\n');
  if (lines.empty() || lines.front() != kMetricsHeader) throw std::runtime_error("metrics: missing header");
  std::vector<MetricsRow> rows;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    const auto f = split(lines[i], '\t');
    if (f.size() != 7) throw std::runtime_error("metrics line " + std::to_string(i + 1) + ": expected 7 fields");
    MetricsRow r;
    r.step = parse_field<std::size_t>(f[0], i + 1);
    r.stage = parse_field<int>(f[1], i + 1);
    r.loss = parse_field<double>(f[2], i + 1);
    r.kl_to_ref = parse_field<double>(f[3], i + 1);
    r.mean_margin = parse_field<double>(f[4], i + 1);
    r.win_rate_vs_opponent = parse_field<double>(f[5], i + 1);
    r.teacher_calls = parse_field<std::uint64_t>(f[6], i + 1);
    rows.push_back(r);
  }
  return rows;
}

std::string format_loss_series(const std::vector<StepStats>& history, std::size_t transition_step) {
  std::string out = "step\tloss\n";
  bool marked = false;
  for (const auto& s : history) {
    if (!marked && s.step >= transition_step) {
      out += "#transition\t" + std::to_string(transition_step) + '\n';
      marked = true;
    }
    out += std::to_string(s.step) + '\t' + format_double(s.loss) + '\n';
  }
  return out;
}

std::string format_run_log(const std::vector<std::string>& records) {
  std::string out;
  for (const auto& r : records) {
    out += r;
    out += '\n';
  }
  return out;
}

std::string config_hash(const ExperimentConfig& cfg) {
  const std::string text = canonical_config_text(cfg);
  return hex64(fnv1a64(reinterpret_cast<const unsigned char*>(text.data()), text.size()));
}

std::string format_manifest(const ExperimentConfig& cfg, const ExperimentResult& result,
                            const std::vector<std::string>& files) {
  nlohmann::ordered_json j;
  j["config_hash"] = config_hash(cfg);
  j["method"] = std::string(to_string(cfg.train.method));
  j["task_seed"] = cfg.task.utility_seed;
  j["train_seed"] = cfg.train.seed;
  j["stage1_steps"] = cfg.train.stage1_steps;
  j["stage2_steps"] = cfg.train.stage2_steps;
  j["teacher_calls"] = result.teacher_calls;
  j["final_win_rate"] = result.final_win_rate;
  j["opponent"] = std::string(to_string(cfg.eval.opponent));
  j["status"] = result.divergence ? "diverged" : "ok";
  if (result.divergence) j["divergence"] = *result.divergence;
  j["files"] = files;
  return j.dump(2) + '\n';
}

std::vector<std::string> write_run_artifacts(const std::filesystem::path& dir, const ExperimentConfig& cfg,
                                             const ExperimentResult& result) {
  std::filesystem::create_directories(dir);
  std::vector<std::string> files{"config.cfg", "metrics.tsv", "loss_series.tsv"};
  write_file_atomic(dir / "config.cfg", canonical_config_text(cfg));
  write_file_atomic(dir / "metrics.tsv", format_metrics(result.metrics));
  write_file_atomic(dir / "loss_series.tsv", format_loss_series(result.history, result.stage_transition_step));
  if (!result.run_log.empty()) {
    write_file_atomic(dir / "run_log.jsonl", format_run_log(result.run_log));
    files.push_back("run_log.jsonl");
  }
  if (result.sft) {
    write_checkpoint(dir / "sft.ckpt", *result.sft);
    files.push_back("sft.ckpt");
  }
  const char* final_name = result.divergence ? "last_good.ckpt" : "final.ckpt";
  write_checkpoint(dir / final_name, result.final_policy);
  files.push_back(final_name);
  files.push_back("manifest.json");
  write_file_atomic(dir / "manifest.json", format_manifest(cfg, result, files));
  return files;
}

std::string format_summary(const std::vector<SummaryRow>& rows, std::string_view label_header, bool with_value) {
  std::string out(label_header);
  if (with_value) out += "\tvalue";
  out += "\tmedian_win_rate\tmin_win_rate\tmax_win_rate\truns\tteacher_calls\n";
  for (const auto& r : rows) {
    out += r.label;
    if (with_value) out += '\t' + format_double(r.value);
    out += '\t' + format_double(r.median) + '\t' + format_double(r.min) + '\t' + format_double(r.max) + '\t' +
           std::to_string(r.runs) + '\t' + std::to_string(r.teacher_calls) + '\n';
  }
  return out;
}

std::string format_campaign_runs(const std::vector<CampaignRun>& runs) {
  std::string out = "label\tseed\twin_rate\tteacher_calls\tdiverged\n";
  for (const auto& r : runs) {
    out += r.label + '\t' + std::to_string(r.seed) + '\t' + format_double(r.win_rate) + '\t' +
           std::to_string(r.teacher_calls) + '\t' + (r.diverged ? "1" : "0") + '\n';
  }
  return out;
}

RunLogCheck check_run_log(std::string_view text) {
  RunLogCheck check;
  std::size_t line_no = 0;
  for (std::string_view line : split(text, '\n')) {
    ++line_no;
    if (line.empty()) continue;
    ++check.records;
    const std::string where = "line " + std::to_string(line_no) + ": ";
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      check.problems.push_back(where + e.what());
      continue;
    }
    if (j.dump() != line) check.problems.push_back(where + "record does not round-trip");
    for (const char* key : {"d_x", "q_theta"}) {
      if (!j.contains(key)) continue;
      const auto v = j[key].get<std::vector<double>>();
      if (!ProbabilityVector::is_valid(v)) check.problems.push_back(where + key + " is not a probability vector");
      if (j.contains("candidates") && j["candidates"].size() != v.size()) {
        check.problems.push_back(where + key + " length differs from the candidate group");
      }
      if (std::string_view(key) == "d_x") ++check.distributions;
    }
  }
  return check;
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace pualign
