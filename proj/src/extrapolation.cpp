#include "selftrain/extrapolation.hpp"

#include <cctype>

#include <json.hpp>

#include "selftrain/description.hpp"
#include "selftrain/error.hpp"
#include "selftrain/resources.hpp"
#include "selftrain/text.hpp"

namespace selftrain {

using nlohmann::json;

std::string_view to_string(GoalOrigin o) { return o == GoalOrigin::seed ? "seed" : "augmented"; }
std::string_view to_string(Verdict v) { return v == Verdict::accepted ? "accepted" : "invalid"; }

bool TaskPool::contains_task(std::string_view task_id) const { return find(task_id) != nullptr; }

bool TaskPool::contains_goal(std::string_view goal) const {
  std::string key = text::normalize(goal);
  for (const auto& g : goals_)
    if (text::normalize(g.goal) == key) return true;
  return false;
}

const PooledGoal* TaskPool::find(std::string_view task_id) const {
  for (const auto& g : goals_)
    if (g.task_id == task_id) return &g;
  return nullptr;
}

bool TaskPool::add(PooledGoal g) {
  if (contains_task(g.task_id) || contains_goal(g.goal)) return false;
  goals_.push_back(std::move(g));
  return true;
}

Augmentation augment_tasks(const TaskPool& pool, const std::vector<Trajectory>& evaluated) {
  for (const auto& t : evaluated)
    if (!t.env_feedback)
      throw Error(Errc::missing_feedback, "trajectory for task '" + t.task_id + "' has no environment feedback");
  Augmentation out{pool, {}};
  out.pool.set_iteration(pool.iteration() + 1);
  for (const auto& t : evaluated) {
    if (!*t.env_feedback || out.pool.contains_goal(t.goal)) continue;
    std::string id = t.task_id;
    for (int n = 2; out.pool.contains_task(id); ++n) id = t.task_id + "#" + std::to_string(n);
    out.pool.add({id, t.goal, GoalOrigin::augmented, out.pool.iteration()});
    Trajectory demo = t;
    demo.task_id = id;
    demo.source = TrajectorySource::pseudo_expert;
    out.pseudo_experts.push_back(std::move(demo));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Rules

const IntentRules& IntentRules::builtin() {
  static const IntentRules rules =
      from_json(resources::get("intent_rules.json"), text::word_list(resources::get("verbs.txt")),
                text::word_list(resources::get("stopwords.txt")));
  return rules;
}

IntentRules IntentRules::from_json(std::string_view json_text, std::set<std::string> verbs,
                                   std::set<std::string> stopwords) {
  IntentRules r;
  try {
    json j = json::parse(json_text);
    r.strip_prefixes = j.at("strip_prefixes").get<std::vector<std::string>>();
    r.placeholders = j.at("placeholders").get<std::vector<std::string>>();
    r.denylist = j.at("denylist").get<std::vector<std::string>>();
    r.negation_verbs = j.at("negation_verbs").get<std::vector<std::string>>();
    r.min_object_tokens = j.value("min_object_tokens", std::size_t{2});
  } catch (const json::exception& e) {
    throw Error(Errc::format_error, std::string("intent rules: ") + e.what());
  }
  r.verbs = std::move(verbs);
  r.stopwords = std::move(stopwords);
  return r;
}

namespace {

bool iequals(std::string_view a, std::string_view b) {
  return a.size() == b.size() && text::starts_with_icase(a, b);
}

std::string strip_prefixes(std::string s, const IntentRules& rules) {
  for (bool changed = true; changed;) {
    changed = false;
    for (const auto& p : rules.strip_prefixes) {
      if (!text::starts_with_icase(s, p)) continue;
      // Only whole-word prefixes: "The task is" must not eat "The task isn't".
      if (s.size() > p.size() && std::isalnum(static_cast<unsigned char>(s[p.size()])) &&
          std::isalnum(static_cast<unsigned char>(p.back())))
        continue;
      std::size_t i = p.size();
      while (i < s.size() && (s[i] == ':' || s[i] == ',' || s[i] == '-' || std::isspace(static_cast<unsigned char>(s[i]))))
        ++i;
      s = text::trim(std::string_view(s).substr(i));
      changed = true;
      break;
    }
    if (!changed && s.size() >= 2 && s.front() == '"' && s.back() == '"') {
      s = text::trim(std::string_view(s).substr(1, s.size() - 2));
      changed = true;
    }
  }
  if (!s.empty() && std::islower(static_cast<unsigned char>(s[0]))) s[0] = static_cast<char>(std::toupper(s[0]));
  return s;
}

IntentCandidate invalid(std::string raw, std::string rule) {
  IntentCandidate c;
  c.raw = std::move(raw);
  c.verdict = Verdict::invalid;
  c.rule_fired = std::move(rule);
  return c;
}

// Check order: R2, the R3 denylist, R4, then the R3 verb/object test, so that
// "Stop the timer" is reported as a negation and "Stop" as a bare command.
IntentCandidate apply_rules(const std::string& raw, const IntentRules& rules) {
  std::string s = strip_prefixes(text::normalize(raw), rules);

  bool has_alnum = false;
  for (char c : s) has_alnum |= std::isalnum(static_cast<unsigned char>(c)) != 0;
  if (!has_alnum || s.back() == ':' || s.find("''") != std::string::npos) return invalid(raw, "R2");
  for (const auto& p : rules.placeholders)
    if (iequals(s, p)) return invalid(raw, "R2");

  std::string bare = s;
  while (!bare.empty() && (bare.back() == '.' || bare.back() == '!')) bare.pop_back();
  for (const auto& d : rules.denylist)
    if (iequals(bare, d)) return invalid(raw, "R3");

  for (const auto& n : rules.negation_verbs)
    if (text::starts_with_icase(s, n) &&
        (s.size() == n.size() || !std::isalnum(static_cast<unsigned char>(s[n.size()]))))
      return invalid(raw, "R4");

  auto tokens = text::tokenize(s);
  if (tokens.empty() || !rules.verbs.contains(tokens.front())) return invalid(raw, "R3");
  std::size_t objects = 0;
  for (std::size_t i = 1; i < tokens.size(); ++i)
    if (!rules.stopwords.contains(tokens[i])) ++objects;
  if (objects < rules.min_object_tokens) return invalid(raw, "R3");

  IntentCandidate c;
  c.raw = raw;
  c.refined = s;
  c.verdict = Verdict::accepted;
  if (s != text::normalize(raw)) c.rule_fired = "R1";
  return c;
}

}  // namespace

IntentCandidate refine_intent(const IntentCandidate& c, const IntentRules& rules, IntentOracle* oracle) {
  IntentCandidate out = apply_rules(c.raw, rules);
  if (out.verdict == Verdict::accepted && oracle) {
    if (auto rewritten = oracle->rewrite(*out.refined)) {
      if (text::trim(*rewritten) == "INVALID") return invalid(c.raw, "llm");
      IntentCandidate again = apply_rules(*rewritten, rules);
      again.raw = c.raw;
      return again;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Intent inference

std::string describe_for_prompt(const Trajectory& traj) {
  std::string out;
  auto descs = describe_trajectory(traj);
  for (std::size_t i = 0; i < descs.size(); ++i) out += std::to_string(i + 1) + ". " + descs[i].text + "\n";
  return out;
}

std::string MockIntentOracle::infer(const Trajectory& traj) {
  if (const Step* stop = traj.final_stop()) return "Answer '" + stop->action.answer.value_or("") + "' for the observed page";
  for (auto it = traj.steps.rbegin(); it != traj.steps.rend(); ++it)
    if (it->action.kind != ActionKind::stop) return "Perform: " + extract_description(*it).text;
  return "";
}

std::string LlmIntentOracle::infer(const Trajectory& traj) {
  std::string user = std::string(resources::get("prompts/intent_generation.txt")) + "\n" + describe_for_prompt(traj);
  try {
    return client_->complete(llm::single_turn(model_, "", user)).text;
  } catch (const Error& e) {
    throw Error(Errc::oracle_unavailable, std::string("intent oracle: ") + e.what());
  }
}

std::optional<std::string> LlmIntentOracle::rewrite(const std::string& intent) {
  std::string system(resources::get("prompts/intent_refinement.txt"));
  if (auto pos = system.find("<<EXAMPLES>>"); pos != std::string::npos) system.replace(pos, 12, examples_);
  try {
    return text::trim(client_->complete(llm::single_turn(model_, system, intent)).text);
  } catch (const Error& e) {
    throw Error(Errc::oracle_unavailable, std::string("intent refinement oracle: ") + e.what());
  }
}

IntentCandidate infer_intent(const Trajectory& traj, IntentOracle& oracle) {
  if (traj.steps.empty())
    throw Error(Errc::oracle_unavailable, "cannot infer an intent for an empty trajectory (task '" + traj.task_id + "')");
  IntentCandidate c;
  c.raw = oracle.infer(traj);
  return c;
}

HarvestResult harvest_failed(const std::vector<Trajectory>& failed, IntentOracle& oracle, const IntentRules& rules,
                             bool llm_rewrite) {
  HarvestResult out;
  for (const auto& t : failed) {
    IntentCandidate c;
    try {
      c = infer_intent(t, oracle);
    } catch (const Error& e) {
      out.drops.push_back({t.task_id, "", std::string("oracle_error: ") + e.what()});
      continue;
    }
    IntentCandidate r = refine_intent(c, rules, llm_rewrite ? &oracle : nullptr);
    if (r.verdict == Verdict::accepted) {
      Trajectory relabeled = t;
      relabeled.goal = *r.refined;
      out.pairs.emplace_back(std::move(relabeled), *r.refined);
    } else {
      out.drops.push_back({t.task_id, c.raw, r.rule_fired.value_or("")});
    }
  }
  return out;
}

std::string drop_logs_to_jsonl(const std::vector<DropLog>& drops) {
  std::string out;
  for (const auto& d : drops) out += json{{"task_id", d.task_id}, {"raw", d.raw}, {"rule_fired", d.rule_fired}}.dump() + "\n";
  return out;
}

}  // namespace selftrain
