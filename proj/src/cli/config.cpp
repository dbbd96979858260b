#include "cli/config.hpp"

#include <charconv>

#include "selftrain/error.hpp"
#include "selftrain/text.hpp"
#include "selftrain/trajectory_io.hpp"

namespace selftrain::cli {

namespace {

[[noreturn]] void bad(std::string_view key, const std::string& why) {
  throw Error(Errc::config_error, "config key '" + std::string(key) + "': " + why);
}

template <class T>
T parse_number(std::string_view key, std::string_view v) {
  T out{};
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || p != v.data() + v.size()) bad(key, "not a number: '" + std::string(v) + "'");
  return out;
}

double parse_real(std::string_view key, std::string_view v) {
  try {
    std::size_t used = 0;
    std::string s(v);
    double d = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument("trailing");
    return d;
  } catch (const std::exception&) {
    bad(key, "not a number: '" + std::string(v) + "'");
  }
}

bool parse_bool(std::string_view key, std::string_view v) {
  if (v == "1" || v == "true") return true;
  if (v == "0" || v == "false") return false;
  bad(key, "expected 0, 1, true or false");
}

std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    auto pos = s.find(sep, start);
    out.emplace_back(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

OracleKind parse_oracle(std::string_view key, std::string_view v) {
  auto k = oracle_kind_from(v);
  if (!k) bad(key, "expected llm or mock");
  return *k;
}

}  // namespace

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = {
      "world_spec",      "task_filter",   "temperature",        "top_p",          "top_k",
      "samples_per_task", "do_sample",    "keystep_oracle",     "synth_oracle",   "intent_oracle",
      "intent_rewrite",  "iterations",    "output_dir",         "finetune_hook",  "strict_ordered_scoring",
      "seed",            "workers",       "policy",             "step_budget",    "eval_temperature",
      "pseudo_expert_graphs", "max_attempts", "llm_model",      "guidance"};
  return keys;
}

void apply_setting(RunConfig& c, std::string_view key, std::string_view raw) {
  const std::string v = text::trim(raw);
  if (key == "world_spec") c.world_spec = std::string(v);
  else if (key == "task_filter") {
    c.task_filter.clear();
    for (auto& part : split(v, ','))
      if (auto t = text::trim(part); !t.empty()) c.task_filter.emplace_back(t);
  } else if (key == "temperature") c.sampling.temperature = parse_real(key, v);
  else if (key == "top_p") c.sampling.top_p = parse_real(key, v);
  else if (key == "top_k") c.sampling.top_k = parse_number<int>(key, v);
  else if (key == "samples_per_task") c.sampling.samples_per_task = parse_number<int>(key, v);
  else if (key == "do_sample") c.sampling.do_sample = parse_bool(key, v);
  else if (key == "keystep_oracle") c.keystep_oracle = parse_oracle(key, v);
  else if (key == "synth_oracle") c.synth_oracle = parse_oracle(key, v);
  else if (key == "intent_oracle") c.intent_oracle = parse_oracle(key, v);
  else if (key == "intent_rewrite") c.intent_rewrite = parse_bool(key, v);
  else if (key == "iterations") c.iterations = parse_number<int>(key, v);
  else if (key == "output_dir") c.output_dir = std::string(v);
  else if (key == "finetune_hook") c.finetune_hook = std::string(v);
  else if (key == "strict_ordered_scoring") c.strict_ordered_scoring = parse_bool(key, v);
  else if (key == "seed") c.seed = parse_number<std::uint64_t>(key, v);
  else if (key == "workers") c.workers = parse_number<int>(key, v);
  else if (key == "policy") {
    auto b = sim::behavior_from(v);
    if (!b) bad(key, "expected expert_route, alternative_route, noisy or improving");
    c.policy = *b;
  } else if (key == "step_budget") c.step_budget = parse_number<int>(key, v);
  else if (key == "eval_temperature") c.eval_temperature = parse_real(key, v);
  else if (key == "pseudo_expert_graphs") c.pseudo_expert_graphs = parse_bool(key, v);
  else if (key == "max_attempts") c.max_attempts = parse_number<int>(key, v);
  else if (key == "llm_model") c.llm_model = std::string(v);
  else if (key == "guidance") c.guidance = std::string(v);
  else throw Error(Errc::config_error, "unknown config key '" + std::string(key) + "'");
}

RunConfig parse_config(std::string_view text, RunConfig c) {
  int line_no = 0;
  for (auto& line : split(text, '\n')) {
    ++line_no;
    const std::string t = text::trim(line);
    if (t.empty() || t.front() == '#') continue;
    auto eq = t.find('=');
    if (eq == std::string_view::npos)
      throw Error(Errc::config_error, "config line " + std::to_string(line_no) + ": expected key = value");
    const std::string key = text::trim(std::string_view(t).substr(0, eq));
    try {
      apply_setting(c, key, std::string_view(t).substr(eq + 1));
    } catch (const Error& e) {
      throw Error(Errc::config_error, "config line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return c;
}

RunConfig load_config(const std::filesystem::path& path, RunConfig base) {
  return parse_config(io::read_file(path), std::move(base));
}

void RunConfig::validate() const {
  if (iterations < 1) bad("iterations", "must be at least 1");
  if (step_budget < 1) bad("step_budget", "must be at least 1");
  if (max_attempts < 1) bad("max_attempts", "must be at least 1");
  if (workers < 1) bad("workers", "must be at least 1");
  if (!world_spec.empty() && !std::filesystem::exists(world_spec))
    bad("world_spec", "file not found: " + world_spec.string());
  if (output_dir.empty()) bad("output_dir", "must not be empty");
  pipeline().validate();
}

PipelineConfig RunConfig::pipeline() const {
  PipelineConfig p;
  p.sampling = sampling;
  p.eval_temperature = eval_temperature;
  p.workers = workers;
  p.seed = seed;
  p.abstractor.max_attempts = max_attempts;
  p.abstractor.keystep_oracle = keystep_oracle;
  p.abstractor.synth_oracle = synth_oracle;
  p.abstractor.guidance = guidance;
  p.abstractor.workers = workers;
  p.scoring.strict_ordered = strict_ordered_scoring;
  p.pseudo_expert_graphs = pseudo_expert_graphs;
  p.finetune_hook = finetune_hook;
  p.output_dir = output_dir;
  p.task_filter = task_filter;
  return p;
}

}  // namespace selftrain::cli
