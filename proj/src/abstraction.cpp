#include "selftrain/abstraction.hpp"

#include <cctype>

#include <json.hpp>

#include "selftrain/code_mapping.hpp"
#include "selftrain/evaluator.hpp"
#include "selftrain/parallel.hpp"
#include "selftrain/resources.hpp"
#include "selftrain/text.hpp"

namespace selftrain {

using nlohmann::json;

std::string_view to_string(OracleKind k) { return k == OracleKind::llm ? "llm" : "mock"; }

std::optional<OracleKind> oracle_kind_from(std::string_view s) {
  if (s == "llm") return OracleKind::llm;
  if (s == "mock") return OracleKind::mock;
  return std::nullopt;
}

void AbstractorConfig::validate() const {
  if (max_attempts < 1) throw Error(Errc::config_error, "max_attempts must be >= 1");
  if (workers < 1) throw Error(Errc::config_error, "workers must be >= 1");
}

// ---------------------------------------------------------------------------
// Template inversion

namespace {

struct Segment {
  bool placeholder = false;
  std::string value;  // literal text or placeholder name
};

std::vector<Segment> split_pattern(const std::string& pat) {
  std::vector<Segment> out;
  std::string lit;
  for (std::size_t i = 0; i < pat.size();) {
    if (pat[i] == '{') {
      auto close = pat.find('}', i);
      if (close != std::string::npos) {
        if (!lit.empty()) out.push_back({false, std::exchange(lit, {})});
        out.push_back({true, pat.substr(i + 1, close - i - 1)});
        i = close + 1;
        continue;
      }
    }
    lit.push_back(pat[i++]);
  }
  if (!lit.empty()) out.push_back({false, lit});
  return out;
}

// Backtracking match; placeholder captures may be empty except tag_word.
bool match_segments(const std::vector<Segment>& segs, std::size_t si, std::string_view text, std::size_t pos,
                    std::map<std::string, std::string>& caps) {
  if (si == segs.size()) return pos == text.size();
  const Segment& s = segs[si];
  if (!s.placeholder) {
    if (text.substr(pos, s.value.size()) != s.value) return false;
    return match_segments(segs, si + 1, text, pos + s.value.size(), caps);
  }
  bool shortest_first = s.value == "tag_word";
  std::size_t max_len = text.size() - pos;
  std::size_t min_len = shortest_first ? 1 : 0;
  for (std::size_t k = 0; k + min_len <= max_len; ++k) {
    std::size_t len = shortest_first ? min_len + k : max_len - k;
    caps[s.value] = std::string(text.substr(pos, len));
    if (match_segments(segs, si + 1, text, pos + len, caps)) return true;
  }
  caps.erase(s.value);
  return false;
}

std::optional<std::map<std::string, std::string>> match_pattern(const std::string& pattern, std::string_view text) {
  auto segs = split_pattern(pattern);
  std::map<std::string, std::string> caps;
  if (match_segments(segs, 0, text, 0, caps)) return caps;
  return std::nullopt;
}

struct TemplateMatch {
  ActionKind kind;
  bool known_tag;
  std::map<std::string, std::string> values;
};

std::optional<TemplateMatch> match_one(std::string_view text, const TemplateTable& table) {
  for (ActionKind kind : kAllActionKinds) {
    for (bool known : {true, false}) {
      auto caps = match_pattern(table.pattern(kind, known), text);
      if (!caps) continue;
      if (auto it = caps->find("tag_word"); it != caps->end()) {
        bool word_known = table.tag_for_word(it->second).has_value();
        bool word_unknown = it->second == table.unknown_tag_word();
        if (kind != ActionKind::type && (known ? !word_known : !word_unknown)) continue;
      }
      return TemplateMatch{kind, known, std::move(*caps)};
    }
  }
  return std::nullopt;
}

// Descriptions quoted from reports sometimes carry " on the screen." or a
// final period after the templated sentence.
std::optional<TemplateMatch> match_template(std::string_view text, const TemplateTable& table) {
  std::string t = text::normalize(text);
  std::string_view v = t;
  if (auto m = match_one(v, table)) return m;
  if (v.ends_with('.')) v.remove_suffix(1);
  if (auto m = match_one(v, table)) return m;
  if (v.ends_with(" on the screen")) v.remove_suffix(std::string_view(" on the screen").size());
  return match_one(v, table);
}

std::string one_guard(const std::string& api, const std::vector<std::string>& args) {
  LabelFunction lf;
  lf.guards.push_back({api, args});
  return print_label_function(lf);
}

}  // namespace

std::optional<ActionKind> template_kind(std::string_view text, const TemplateTable& table) {
  if (auto m = match_template(text, table)) return m->kind;
  return std::nullopt;
}

std::string mock_synthesizer(const SemanticDescription& desc, const TemplateTable& table) {
  auto m = match_template(desc.text, table);
  if (!m) throw Error(Errc::unrecognized_template, "description matches no action template: " + desc.text);
  auto& v = m->values;
  switch (m->kind) {
    case ActionKind::click:
      if (m->known_tag) return one_guard("validate_click_or_hover_action", {"click", *table.tag_for_word(v["tag_word"]), v["element_text"]});
      return one_guard("validate_click_action", {v["element_text"]});
    case ActionKind::hover:
      // The unknown-tag word cannot be mapped back to a tag; an empty tag matches any.
      return one_guard("validate_click_or_hover_action",
                       {"hover", m->known_tag ? *table.tag_for_word(v["tag_word"]) : std::string(), v["element_text"]});
    case ActionKind::type: return one_guard("validate_type_action", {v["text"], v["element_text"]});
    case ActionKind::scroll: return one_guard("validate_scroll_action", {v["direction"]});
    case ActionKind::open_app: return one_guard("validate_open_app", {v["app"]});
    case ActionKind::navigate: return one_guard("validate_navigate", {v["url"]});
    case ActionKind::stop: return one_guard("validate_stop_action", {v["answer"]});
  }
  throw Error(Errc::unrecognized_template, "unhandled action kind");
}

// ---------------------------------------------------------------------------
// Key steps

const std::set<std::string>& default_stopwords() {
  static const std::set<std::string> words = text::word_list(resources::get("stopwords.txt"));
  return words;
}

MockKeyStepOracle::MockKeyStepOracle() : stopwords_(default_stopwords()) {}

KeyStepSelection MockKeyStepOracle::select(const std::vector<SemanticDescription>& descs, const std::string& goal) {
  return mock_key_step_heuristic(descs, goal, stopwords_);
}

KeyStepSelection mock_key_step_heuristic(const std::vector<SemanticDescription>& descs, const std::string& goal) {
  return mock_key_step_heuristic(descs, goal, default_stopwords());
}

KeyStepSelection mock_key_step_heuristic(const std::vector<SemanticDescription>& descs, const std::string& goal,
                                         const std::set<std::string>& stopwords) {
  KeyStepSelection sel;
  sel.oracle_name = "mock";
  auto goal_tokens = text::content_tokens(goal, stopwords);
  std::set<std::string> goal_set(goal_tokens.begin(), goal_tokens.end());
  for (std::size_t i = 0; i < descs.size(); ++i) {
    bool is_final_stop = i + 1 == descs.size() && template_kind(descs[i].text) == ActionKind::stop;
    bool overlap = false;
    for (const auto& tok : text::content_tokens(descs[i].text, stopwords))
      if (goal_set.contains(tok)) {
        overlap = true;
        break;
      }
    if (overlap || is_final_stop) sel.selected.push_back(descs[i]);
  }
  return sel;
}

std::string keystep_user_message(const std::vector<SemanticDescription>& descs, const std::string& goal) {
  std::string msg = "Objective: " + goal + "\nSuccessful Action Sequence:\n";
  for (std::size_t i = 0; i < descs.size(); ++i) msg += std::to_string(i + 1) + ". " + descs[i].text + "\n";
  return msg;
}

KeyStepSelection parse_keystep_reply(const std::vector<SemanticDescription>& descs, std::string_view reply) {
  KeyStepSelection sel;
  sel.oracle_name = "llm";
  sel.raw_response = std::string(reply);
  std::vector<bool> taken(descs.size(), false);
  std::size_t start = 0;
  while (start <= reply.size()) {
    std::size_t end = reply.find('\n', start);
    if (end == std::string_view::npos) end = reply.size();
    std::string line = text::trim(reply.substr(start, end - start));
    start = end + 1;
    if (line.empty()) continue;
    std::size_t p = 0;
    while (p < line.size() && std::isdigit(static_cast<unsigned char>(line[p]))) ++p;
    if (p > 0 && p < line.size() && (line[p] == '.' || line[p] == ')')) {
      line = text::trim(std::string_view(line).substr(p + 1));
    } else if (line.starts_with("- ") || line.starts_with("* ")) {
      line = text::trim(std::string_view(line).substr(2));
    }
    bool matched = false;
    for (std::size_t i = 0; i < descs.size(); ++i) {
      if (!taken[i] && descs[i].text == line) {
        taken[i] = matched = true;
        break;
      }
    }
    if (!matched) sel.dropped_lines.push_back(line);
  }
  for (std::size_t i = 0; i < descs.size(); ++i)
    if (taken[i]) sel.selected.push_back(descs[i]);
  return sel;
}

KeyStepSelection LlmKeyStepOracle::select(const std::vector<SemanticDescription>& descs, const std::string& goal) {
  std::string reply;
  try {
    reply = client_->complete(llm::single_turn(model_, std::string(resources::get("prompts/keystep.txt")),
                                               keystep_user_message(descs, goal)))
                .text;
  } catch (const Error& e) {
    throw Error(Errc::oracle_unavailable, std::string("key-step oracle: ") + e.what());
  }
  return parse_keystep_reply(descs, reply);
}

KeyStepSelection identify_key_steps(const std::vector<SemanticDescription>& descs, const std::string& goal,
                                    KeyStepOracle& oracle) {
  if (descs.empty()) throw Error(Errc::empty_selection, "no descriptions to select from");
  KeyStepSelection sel = oracle.select(descs, goal);
  if (sel.selected.empty()) throw Error(Errc::empty_selection, "oracle '" + oracle.name() + "' selected no key steps");
  return sel;
}

// ---------------------------------------------------------------------------
// Synthesis

std::string synthesis_prompt(const ApiRegistry& registry, std::string_view guidance) {
  std::string p(resources::get("prompts/synthesis.txt"));
  auto replace = [&p](std::string_view key, std::string_view value) {
    for (auto pos = p.find(key); pos != std::string::npos; pos = p.find(key, pos + value.size()))
      p.replace(pos, key.size(), value);
  };
  std::string apis = registry.describe();
  while (!apis.empty() && apis.back() == '\n') apis.pop_back();
  replace("<<API_FUNCTIONS>>", apis);
  replace("<<GUIDANCE>>", guidance);
  return p;
}

std::string MockSynthesisOracle::propose(const SemanticDescription& desc, int) { return mock_synthesizer(desc); }

LlmSynthesisOracle::LlmSynthesisOracle(std::shared_ptr<llm::Client> client, std::string model, std::string guidance,
                                       const ApiRegistry& registry)
    : client_(std::move(client)), model_(std::move(model)), prompt_(synthesis_prompt(registry, guidance)) {}

std::string LlmSynthesisOracle::propose(const SemanticDescription& desc, int) {
  try {
    return client_->complete(llm::single_turn(model_, prompt_, "Key step: " + desc.text)).text;
  } catch (const Error& e) {
    throw Error(Errc::oracle_unavailable, std::string("synthesis oracle: ") + e.what());
  }
}

SynthesisResult synthesize_label_fn(const SemanticDescription& desc, const Trajectory& source,
                                    const ApiRegistry& registry, SynthesisOracle& oracle,
                                    const AbstractorConfig& cfg) {
  cfg.validate();
  SynthesisAttemptLog log;
  log.task_id = source.task_id;
  log.step_t = desc.step_t;
  log.desc_text = desc.text;
  for (int n = 1; n <= cfg.max_attempts; ++n) {
    SynthesisAttempt attempt;
    attempt.attempt_no = n;
    std::optional<LabelFunction> candidate;
    try {
      attempt.produced_text = oracle.propose(desc, n);
      candidate = parse_label_function(map_generated_code(attempt.produced_text), registry);
      attempt.parse_ok = true;
      attempt.source_valid = evaluate(*candidate, source, registry).passed;
      if (!attempt.source_valid) attempt.error = "candidate does not pass on its source trajectory";
    } catch (const Error& e) {
      if (e.code() == Errc::oracle_unavailable) throw;
      attempt.error = e.what();
    }
    log.attempts.push_back(attempt);
    if (attempt.parse_ok && attempt.source_valid) {
      log.success_position = n;
      candidate->source_desc = desc.text;
      return {std::move(*candidate), std::move(log)};
    }
  }
  std::string msg = "no valid label function for '" + desc.text + "' after " + std::to_string(cfg.max_attempts) +
                    " attempts";
  throw SynthesisExhausted(msg, std::move(log));
}

AbstractionResult abstract_trajectory(const Trajectory& traj, const std::string& goal, KeyStepOracle& keystep,
                                      SynthesisOracle& synth, const AbstractorConfig& cfg,
                                      const ApiRegistry& registry) {
  cfg.validate();
  AbstractionResult out;
  auto descs = describe_trajectory(traj);
  try {
    out.selection = identify_key_steps(descs, goal, keystep);
  } catch (const Error& e) {
    if (e.code() != Errc::empty_selection) throw;
    throw Error(Errc::all_steps_failed, std::string("no key steps: ") + e.what());
  }
  for (const auto& line : out.selection.dropped_lines) out.notes.push_back("dropped reply line: " + line);

  const auto& keys = out.selection.selected;
  std::vector<std::optional<SynthesisResult>> results(keys.size());
  std::vector<SynthesisAttemptLog> logs(keys.size());
  parallel_for(keys.size(), cfg.workers, [&](std::size_t i) {
    try {
      results[i] = synthesize_label_fn(keys[i], traj, registry, synth, cfg);
      logs[i] = results[i]->log;
    } catch (const SynthesisExhausted& e) {
      logs[i] = e.log;
    }
  });
  for (std::size_t i = 0; i < keys.size(); ++i) {
    out.logs.push_back(std::move(logs[i]));
    if (results[i]) {
      out.lfs.push_back(std::move(results[i]->lf));
    } else {
      out.notes.push_back("step " + std::to_string(keys[i].step_t) + " skipped: synthesis exhausted");
    }
  }
  if (out.lfs.empty()) throw Error(Errc::all_steps_failed, "no label function could be synthesized");
  return out;
}

// ---------------------------------------------------------------------------
// Attempt logs

std::string attempt_logs_to_jsonl(const std::vector<SynthesisAttemptLog>& logs) {
  std::string out;
  for (const auto& log : logs) {
    json j;
    j["task_id"] = log.task_id;
    j["step_t"] = log.step_t;
    j["desc_text"] = log.desc_text;
    j["attempts"] = json::array();
    for (const auto& a : log.attempts) {
      json ja = {{"attempt_no", a.attempt_no},
                 {"produced_text", a.produced_text},
                 {"parse_ok", a.parse_ok ? 1 : 0},
                 {"source_valid", a.source_valid ? 1 : 0}};
      if (!a.error.empty()) ja["error"] = a.error;
      j["attempts"].push_back(std::move(ja));
    }
    j["success_position"] = log.success_position ? json(*log.success_position) : json(nullptr);
    out += j.dump() + "\n";
  }
  return out;
}

std::vector<SynthesisAttemptLog> attempt_logs_from_jsonl(std::string_view text) {
  std::vector<SynthesisAttemptLog> logs;
  int line_no = 0;
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    start = end + 1;
    ++line_no;
    if (text::trim(line).empty()) continue;
    try {
      json j = json::parse(line);
      SynthesisAttemptLog log;
      log.task_id = j.value("task_id", "");
      log.step_t = j.value("step_t", 0);
      log.desc_text = j.at("desc_text").get<std::string>();
      for (const auto& ja : j.at("attempts")) {
        SynthesisAttempt a;
        a.attempt_no = ja.at("attempt_no").get<int>();
        a.produced_text = ja.value("produced_text", "");
        a.parse_ok = ja.at("parse_ok").get<int>() != 0;
        a.source_valid = ja.at("source_valid").get<int>() != 0;
        a.error = ja.value("error", "");
        log.attempts.push_back(std::move(a));
      }
      if (j.contains("success_position") && !j["success_position"].is_null())
        log.success_position = j["success_position"].get<int>();
      logs.push_back(std::move(log));
    } catch (const json::exception& e) {
      throw Error(Errc::format_error, "attempt log line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return logs;
}

}  // namespace selftrain
