#include "selftrain/sim_env.hpp"

#include <algorithm>
#include <cmath>

#include <json.hpp>

#include "selftrain/description.hpp"
#include "selftrain/error.hpp"
#include "selftrain/resources.hpp"
#include "selftrain/text.hpp"
#include "selftrain/trajectory_io.hpp"

namespace selftrain::sim {

using nlohmann::json;

std::uint64_t Rng::below(std::uint64_t n) {
  // Rejection sampling keeps the draw unbiased and library-independent.
  std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  std::uint64_t x;
  do {
    x = eng_();
  } while (x >= limit);
  return x % n;
}

double Rng::unit() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

std::uint64_t stable_hash(std::initializer_list<std::string_view> parts, std::uint64_t salt) {
  std::uint64_t h = 1469598103934665603ULL ^ salt;
  auto mix = [&h](unsigned char c) {
    h ^= c;
    h *= 1099511628211ULL;
  };
  for (auto p : parts) {
    for (char c : p) mix(static_cast<unsigned char>(c));
    mix(0xff);
  }
  return h;
}

std::string_view to_string(Split s) { return s == Split::train ? "train" : "test"; }

// ---------------------------------------------------------------------------
// Loading

namespace {

std::string lower_trim(std::string_view s) {
  std::string out = text::normalize(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

Condition condition_from_json(const json& j) {
  if (!j.is_object() || j.size() != 1) throw Error(Errc::format_error, "condition must be an object with one key");
  const auto& [name, v] = *j.items().begin();
  Condition c;
  if (name == "list_contains") {
    c.kind = Condition::Kind::list_contains;
    c.key = v.at("key").get<std::string>();
    c.value = v.at("value").get<std::string>();
  } else if (name == "value_equals") {
    c.kind = Condition::Kind::value_equals;
    c.key = v.at("key").get<std::string>();
    c.value = v.at("value").get<std::string>();
  } else if (name == "answer_equals") {
    c.kind = Condition::Kind::answer_equals;
    c.value = v.get<std::string>();
  } else if (name == "page_is") {
    c.kind = Condition::Kind::page_is;
    c.value = v.get<std::string>();
  } else if (name == "stopped") {
    c.kind = Condition::Kind::stopped;
    if (!v.get<bool>()) throw Error(Errc::format_error, "\"stopped\" condition must be true");
  } else if (name == "all") {
    c.kind = Condition::Kind::all;
    for (const auto& child : v) c.children.push_back(condition_from_json(child));
  } else {
    throw Error(Errc::format_error, "unknown condition '" + name + "'");
  }
  return c;
}

Effect effect_from_json(const json& j) {
  Effect e;
  std::string op = j.at("op").get<std::string>();
  if (op == "set") e.op = Effect::Op::set;
  else if (op == "append") e.op = Effect::Op::append;
  else if (op == "clear") e.op = Effect::Op::clear;
  else throw Error(Errc::format_error, "unknown effect op '" + op + "'");
  e.key = j.at("key").get<std::string>();
  if (j.contains("value")) e.value = j["value"].get<std::string>();
  return e;
}

}  // namespace

WorldSpec load_world(std::string_view json_text) {
  WorldSpec w;
  try {
    json j = json::parse(json_text);
    w.name = j.value("name", "world");
    w.start_page = j.at("start_page").get<std::string>();
    for (const auto& [id, pj] : j.at("pages").items()) {
      Page p;
      p.id = id;
      p.url = pj.at("url").get<std::string>();
      for (const auto& ej : pj.at("elements"))
        p.elements.push_back({ej.at("id").get<std::string>(), ej.at("tag").get<std::string>(),
                              ej.value("text", ""), std::nullopt});
      if (pj.contains("list_from")) p.list_from = pj["list_from"].get<std::string>();
      p.list_tag = pj.value("list_tag", "LI");
      w.pages.emplace(id, std::move(p));
    }
    for (const auto& tj : j.at("transitions")) {
      Transition t;
      t.from = tj.at("from").get<std::string>();
      Action a = io::action_from_json(tj.at("action"));
      t.kind = a.kind;
      t.target = a.target_id;
      if (tj.contains("when"))
        for (const auto& [k, v] : tj["when"].items()) t.when[k] = v.get<std::string>();
      if (tj.contains("to")) t.to = tj["to"].get<std::string>();
      if (tj.contains("effects"))
        for (const auto& ej : tj["effects"]) t.effects.push_back(effect_from_json(ej));
      w.transitions.push_back(std::move(t));
    }
    for (const auto& kj : j.at("tasks")) {
      SimTask t;
      t.task_id = kj.at("task_id").get<std::string>();
      t.goal = kj.at("goal").get<std::string>();
      t.success = condition_from_json(kj.at("success"));
      for (const auto& rj : kj.at("routes")) {
        Route r;
        r.name = rj.value("name", "");
        for (const auto& sj : rj.at("steps")) r.steps.push_back({io::action_from_json(sj.at("action")), sj.value("key", false)});
        t.routes.push_back(std::move(r));
      }
      if (kj.contains("split")) t.split = kj["split"].get<std::string>() == "test" ? Split::test : Split::train;
      w.tasks.push_back(std::move(t));
    }
  } catch (const json::exception& e) {
    throw Error(Errc::format_error, std::string("world spec: ") + e.what());
  }
  w.validate();
  // Ground-truth key steps are the descriptions of key-flagged route steps.
  for (auto& t : w.tasks) {
    for (const auto& r : t.routes) {
      std::vector<Action> actions;
      for (const auto& s : r.steps) actions.push_back(s.action);
      WorldState s = initial_state(w);
      for (std::size_t i = 0; i < actions.size(); ++i) {
        try {
          s = step(w, s, actions[i]);
        } catch (const Error& e) {
          throw Error(Errc::format_error, "task '" + t.task_id + "' route '" + r.name + "' step " +
                                              std::to_string(i + 1) + ": " + e.what());
        }
      }
      if (!feedback(s, t))
        throw Error(Errc::format_error, "task '" + t.task_id + "' route '" + r.name + "' does not succeed");
      Trajectory traj = replay(w, t, actions);
      for (std::size_t i = 0; i < r.steps.size() && i < traj.steps.size(); ++i)
        if (r.steps[i].key) t.ground_truth_key_steps.insert(extract_description(traj.steps[i]).text);
    }
  }
  return w;
}

void WorldSpec::validate() const {
  if (!pages.contains(start_page)) throw Error(Errc::format_error, "start page '" + start_page + "' is not defined");
  for (const auto& t : transitions) {
    if (t.from != "*" && !pages.contains(t.from))
      throw Error(Errc::format_error, "transition from unknown page '" + t.from + "'");
    if (t.to && !pages.contains(*t.to)) throw Error(Errc::format_error, "transition to unknown page '" + *t.to + "'");
  }
  std::set<std::string> ids;
  for (const auto& t : tasks) {
    if (!ids.insert(t.task_id).second) throw Error(Errc::format_error, "duplicate task id '" + t.task_id + "'");
    if (t.routes.empty()) throw Error(Errc::format_error, "task '" + t.task_id + "' has no route");
  }
}

const SimTask* WorldSpec::find_task(std::string_view task_id) const {
  for (const auto& t : tasks)
    if (t.task_id == task_id) return &t;
  return nullptr;
}

const Page* WorldSpec::page_for_url(std::string_view url) const {
  for (const auto& [id, p] : pages)
    if (p.url == url) return &p;
  return nullptr;
}

const WorldSpec& builtin_world() {
  static const WorldSpec w = load_world(resources::get("worlds/shop_world.json"));
  return w;
}

// ---------------------------------------------------------------------------
// Dynamics

WorldState initial_state(const WorldSpec& world) {
  WorldState s;
  s.page = world.start_page;
  return s;
}

UiState observe(const WorldSpec& world, const WorldState& state) {
  const Page& p = world.pages.at(state.page);
  UiState ui;
  ui.url = p.url;
  ui.elements = p.elements;
  if (p.list_from) {
    auto it = state.lists.find(*p.list_from);
    if (it != state.lists.end())
      for (std::size_t i = 0; i < it->second.size(); ++i)
        ui.elements.push_back({*p.list_from + "-" + std::to_string(i + 1), p.list_tag, it->second[i], std::nullopt});
  }
  return ui;
}

namespace {

[[noreturn]] void invalid(const std::string& msg) { throw Error(Errc::invalid_action, msg); }

bool when_holds(const std::map<std::string, std::string>& when, const WorldState& s) {
  for (const auto& [k, v] : when) {
    auto it = s.values.find(k);
    if (it == s.values.end() || lower_trim(it->second) != lower_trim(v)) return false;
  }
  return true;
}

}  // namespace

WorldState step(const WorldSpec& world, const WorldState& state, const Action& action) {
  if (state.stopped) invalid("episode already stopped");
  if (!action_field_errors(action).empty()) invalid("malformed action");
  WorldState next = state;
  switch (action.kind) {
    case ActionKind::stop:
      next.stopped = true;
      next.answer = action.answer;
      return next;
    case ActionKind::scroll: return next;
    case ActionKind::open_app: invalid("this world has no apps");
    case ActionKind::navigate: {
      const Page* p = world.page_for_url(*action.url);
      if (!p) invalid("no page at url '" + *action.url + "'");
      next.page = p->id;
      return next;
    }
    default: break;
  }
  UiState ui = observe(world, state);
  const Element* el = ui.find(*action.target_id);
  if (!el) invalid("element '" + *action.target_id + "' is not on page '" + state.page + "'");
  if (action.kind == ActionKind::type && el->tag != "INPUT" && el->tag != "TEXTAREA")
    invalid("element '" + el->id + "' does not accept text");
  for (const auto& t : world.transitions) {
    if (t.from != "*" && t.from != state.page) continue;
    if (t.kind != action.kind || t.target != action.target_id) continue;
    if (!when_holds(t.when, state)) continue;
    for (const auto& e : t.effects) {
      std::string value = e.value.value_or(action.text.value_or(""));
      switch (e.op) {
        case Effect::Op::set: next.values[e.key] = value; break;
        case Effect::Op::append: next.lists[e.key].push_back(value); break;
        case Effect::Op::clear:
          next.values.erase(e.key);
          next.lists.erase(e.key);
          break;
      }
    }
    if (t.to) next.page = *t.to;
    break;
  }
  return next;
}

bool holds(const Condition& c, const WorldState& s) {
  switch (c.kind) {
    case Condition::Kind::list_contains: {
      auto it = s.lists.find(c.key);
      if (it == s.lists.end()) return false;
      std::string want = text::normalize(c.value);
      return std::any_of(it->second.begin(), it->second.end(),
                         [&](const std::string& v) { return text::normalize(v) == want; });
    }
    case Condition::Kind::answer_equals: return s.answer && lower_trim(*s.answer) == lower_trim(c.value);
    case Condition::Kind::page_is: return s.page == c.value;
    case Condition::Kind::stopped: return s.stopped;
    case Condition::Kind::value_equals: {
      auto it = s.values.find(c.key);
      return it != s.values.end() && lower_trim(it->second) == lower_trim(c.value);
    }
    case Condition::Kind::all:
      return std::all_of(c.children.begin(), c.children.end(), [&](const Condition& k) { return holds(k, s); });
  }
  return false;
}

bool feedback(const WorldState& final_state, const SimTask& task) { return holds(task.success, final_state); }

Trajectory replay(const WorldSpec& world, const SimTask& task, const std::vector<Action>& actions,
                  TrajectorySource source, WorldState* final_state) {
  Trajectory traj;
  traj.task_id = task.task_id;
  traj.goal = task.goal;
  traj.source = source;
  WorldState s = initial_state(world);
  int t = 1;
  for (const auto& a : actions) {
    if (s.stopped) break;
    traj.steps.push_back({t++, observe(world, s), a});
    try {
      s = step(world, s, a);
    } catch (const Error& e) {
      if (e.code() != Errc::invalid_action) throw;
    }
  }
  traj.env_feedback = feedback(s, task);
  if (final_state) *final_state = s;
  return traj;
}

Trajectory replay_route(const WorldSpec& world, const SimTask& task, std::size_t route_index,
                        TrajectorySource source) {
  std::vector<Action> actions;
  for (const auto& s : task.routes.at(route_index).steps) actions.push_back(s.action);
  return replay(world, task, actions, source);
}

// ---------------------------------------------------------------------------
// Fixture suite

std::vector<const SimTask*> FixtureSuite::tasks(Split s) const {
  std::vector<const SimTask*> out;
  for (const auto& t : world.tasks)
    if (t.split == s) out.push_back(&t);
  return out;
}

std::vector<const SimTask*> FixtureSuite::multi_route_tasks() const {
  std::vector<const SimTask*> out;
  for (const auto& t : world.tasks)
    if (t.routes.size() >= 2) out.push_back(&t);
  return out;
}

FixtureSuite make_suite(WorldSpec world, std::uint64_t seed) {
  world.seed = seed;
  std::vector<std::string> ids;
  for (const auto& t : world.tasks) ids.push_back(t.task_id);
  std::sort(ids.begin(), ids.end());
  Rng rng(seed);
  for (std::size_t i = ids.size(); i > 1; --i) std::swap(ids[i - 1], ids[rng.below(i)]);
  std::size_t n_train = static_cast<std::size_t>(std::lround(0.7 * static_cast<double>(ids.size())));
  std::set<std::string> train(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(n_train));
  for (auto& t : world.tasks) t.split = train.contains(t.task_id) ? Split::train : Split::test;

  FixtureSuite suite{std::move(world), {}};
  for (const auto& t : suite.world.tasks)
    if (t.split == Split::train) suite.expert_demos.push_back(replay_route(suite.world, t, 0, TrajectorySource::expert));
  return suite;
}

FixtureSuite generate_fixture_suite(std::uint64_t seed) { return make_suite(builtin_world(), seed); }

// ---------------------------------------------------------------------------
// Policies

void SamplingConfig::validate() const {
  if (!(top_p > 0.0 && top_p <= 1.0)) throw Error(Errc::config_error, "top_p must be in (0, 1]");
  if (top_k < 1) throw Error(Errc::config_error, "top_k must be >= 1");
  if (samples_per_task < 1) throw Error(Errc::config_error, "samples_per_task must be >= 1");
  if (temperature < 0.0) throw Error(Errc::config_error, "temperature must be >= 0");
}

std::string_view to_string(Behavior b) {
  switch (b) {
    case Behavior::expert_route: return "expert";
    case Behavior::alternative_route: return "alternative";
    case Behavior::noisy: return "noisy";
    case Behavior::improving: return "improving";
  }
  return "?";
}

std::optional<Behavior> behavior_from(std::string_view s) {
  for (auto b : {Behavior::expert_route, Behavior::alternative_route, Behavior::noisy, Behavior::improving})
    if (to_string(b) == s) return b;
  return std::nullopt;
}

void ScriptedPolicy::update(int iteration, const std::set<std::string>& known_task_ids) {
  iteration_ = iteration;
  known_ = known_task_ids;
}

double ScriptedPolicy::noise() const {
  if (behavior_ == Behavior::noisy) return 0.3;
  if (behavior_ == Behavior::improving) return 0.3 / (1.0 + iteration_);
  return 0.0;
}

std::vector<double> ScriptedPolicy::route_distribution(std::size_t n, const SamplingConfig& cfg) {
  std::vector<double> p(n, 0.0);
  if (n == 0) return p;
  if (!cfg.do_sample || cfg.temperature <= 0.0) {
    p[0] = 1.0;
    return p;
  }
  // Route rank is the logit: earlier routes are the ones the policy prefers.
  double z = 0.0;
  for (std::size_t r = 0; r < n; ++r) z += p[r] = std::exp(-0.5 * static_cast<double>(r) / cfg.temperature);
  for (auto& x : p) x /= z;
  std::size_t keep = std::min<std::size_t>(n, static_cast<std::size_t>(cfg.top_k));
  double cum = 0.0;
  std::size_t nucleus = 0;
  while (nucleus < keep) {
    cum += p[nucleus++];
    if (cum >= cfg.top_p) break;
  }
  double kept = 0.0;
  for (std::size_t r = 0; r < n; ++r) {
    if (r >= nucleus) p[r] = 0.0;
    kept += p[r];
  }
  for (auto& x : p) x /= kept;
  return p;
}

namespace {

Action random_action(const UiState& ui, Rng& rng) {
  std::vector<const Element*> clickable;
  for (const auto& e : ui.elements)
    if (e.tag == "A" || e.tag == "BUTTON") clickable.push_back(&e);
  auto r = rng.below(10);
  if (r == 0 || clickable.empty()) return Action::scroll(Direction::down);
  if (r == 1) return Action::stop(ui.elements[rng.below(ui.elements.size())].text);
  return Action::click(clickable[rng.below(clickable.size())]->id);
}

bool applicable(const Action& a, const UiState& ui) { return !a.targets_element() || ui.find(*a.target_id); }

// Unknown tasks: wander through a category and give up.
std::vector<Action> wander(const WorldSpec& world, Rng& rng) {
  std::vector<Action> out;
  UiState home = observe(world, initial_state(world));
  std::vector<std::string> cats;
  for (const auto& e : home.elements)
    if (e.id.starts_with("cat-")) cats.push_back(e.id);
  if (!cats.empty()) out.push_back(Action::click(cats[rng.below(cats.size())]));
  out.push_back(Action::scroll(Direction::down));
  out.push_back(Action::stop(""));
  return out;
}

}  // namespace

RolloutResult ScriptedPolicy::rollout(const SimTask& task, const WorldSpec& world, const SamplingConfig& cfg,
                                      std::uint64_t seed) const {
  Rng rng(stable_hash({task.task_id, name()}, seed ^ rng_seed_));
  const bool greedy = !cfg.do_sample || cfg.temperature <= 0.0;
  RolloutResult out;

  std::size_t route_index = 0;
  double eps = greedy ? 0.0 : noise();
  switch (behavior_) {
    case Behavior::expert_route: break;
    case Behavior::alternative_route: route_index = task.routes.size() > 1 ? 1 : 0; break;
    case Behavior::noisy: break;
    case Behavior::improving: {
      if (!known_.contains(task.task_id)) {
        int share = 20 + 25 * iteration_;
        bool competent = greedy ? static_cast<int>(stable_hash({task.task_id}, rng_seed_) % 100) < share
                                : rng.unit() * 100.0 < share;
        if (!competent) {
          auto actions = wander(world, rng);
          if (actions.size() > static_cast<std::size_t>(step_budget_)) actions.resize(static_cast<std::size_t>(step_budget_));
          WorldState end;
          out.trajectory = replay(world, task, actions, TrajectorySource::sampled, &end);
          out.budget_exceeded = !end.stopped;
          return out;
        }
      }
      auto dist = route_distribution(task.routes.size(), cfg);
      double u = rng.unit();
      double cum = 0.0;
      for (std::size_t r = 0; r < dist.size(); ++r) {
        cum += dist[r];
        if (u < cum) {
          route_index = r;
          break;
        }
      }
      break;
    }
  }

  const auto& route = task.routes.at(route_index).steps;
  Trajectory& traj = out.trajectory;
  traj.task_id = task.task_id;
  traj.goal = task.goal;
  traj.source = TrajectorySource::sampled;
  WorldState s = initial_state(world);
  std::size_t idx = 0;
  for (int t = 1; t <= step_budget_ && !s.stopped; ++t) {
    UiState ui = observe(world, s);
    Action a;
    if (idx >= route.size()) {
      break;
    } else if (eps > 0.0 && rng.unit() < eps) {
      a = random_action(ui, rng);
    } else if (applicable(route[idx].action, ui)) {
      a = route[idx++].action;
    } else if (idx > 0 && applicable(route[0].action, ui)) {
      a = route[0].action;  // back at the start: begin the route again
      idx = 1;
    } else if (const Element* home = ui.find("nav-home")) {
      a = Action::click(home->id);  // lost: start the route over
      idx = 0;
    } else {
      a = Action::stop("");
    }
    traj.steps.push_back({t, std::move(ui), a});
    try {
      s = step(world, s, a);
    } catch (const Error& e) {
      if (e.code() != Errc::invalid_action) throw;
      ++out.invalid_actions;
    }
  }
  out.budget_exceeded = !s.stopped;
  traj.env_feedback = feedback(s, task);
  return out;
}

}  // namespace selftrain::sim
