#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "selftrain/trajectory.hpp"

namespace selftrain::sim {

/// Portable seeded generator: the bounded draws are implemented here rather
/// than with std distributions so that sequences match across standard
/// libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}
  std::uint64_t next() { return eng_(); }
  /// Uniform in [0, n). n must be positive.
  std::uint64_t below(std::uint64_t n);
  /// Uniform in [0, 1).
  double unit();

 private:
  std::mt19937_64 eng_;
};

/// FNV-1a over the parts, separated so that ("ab","c") != ("a","bc").
std::uint64_t stable_hash(std::initializer_list<std::string_view> parts, std::uint64_t salt = 0);

struct Page {
  std::string id;
  std::string url;
  std::vector<Element> elements;
  /// Name of an app_state list rendered as extra elements `<id_prefix>-<n>`.
  std::optional<std::string> list_from;
  std::string list_tag = "LI";
};

struct Effect {
  enum class Op { set, append, clear };
  Op op = Op::set;
  std::string key;
  std::optional<std::string> value;  // literal; absent means the typed text
};

struct Transition {
  std::string from;  // page id or "*"
  ActionKind kind = ActionKind::click;
  std::optional<std::string> target;  // element id
  /// Guard on app_state: key -> expected value, case-insensitive after trimming.
  std::map<std::string, std::string> when;
  std::optional<std::string> to;  // absent: stay on the page
  std::vector<Effect> effects;
};

/// Declarative success condition over the terminal world state.
struct Condition {
  enum class Kind { list_contains, answer_equals, page_is, stopped, value_equals, all };
  Kind kind = Kind::stopped;
  std::string key;
  std::string value;
  std::vector<Condition> children;
};

struct RouteStep {
  Action action;
  bool key = false;
};

struct Route {
  std::string name;
  std::vector<RouteStep> steps;
};

enum class Split { train, test };
std::string_view to_string(Split s);

struct SimTask {
  std::string task_id;
  std::string goal;
  Condition success;
  std::vector<Route> routes;  // routes[0] is the expert route
  Split split = Split::train;
  /// Descriptions of key-flagged steps across all routes.
  std::set<std::string> ground_truth_key_steps;
};

struct WorldState {
  std::string page;
  std::map<std::string, std::string> values;
  std::map<std::string, std::vector<std::string>> lists;
  bool stopped = false;
  std::optional<std::string> answer;
  bool operator==(const WorldState&) const = default;
};

struct WorldSpec {
  std::string name;
  std::uint64_t seed = 0;
  std::string start_page;
  std::map<std::string, Page> pages;
  std::vector<Transition> transitions;
  std::vector<SimTask> tasks;

  /// Throws Error(format_error) on a dangling page reference or a missing
  /// start page.
  void validate() const;
  const SimTask* find_task(std::string_view task_id) const;
  const Page* page_for_url(std::string_view url) const;
};

/// Parses the world-spec JSON ("pages", "transitions", "tasks").
WorldSpec load_world(std::string_view json_text);
/// The shop world shipped in data/worlds/shop_world.json.
const WorldSpec& builtin_world();

WorldState initial_state(const WorldSpec& world);
/// The observation the agent sees in `state`.
UiState observe(const WorldSpec& world, const WorldState& state);

/// Applies an action. Throws Error(invalid_action) when the action does not
/// apply on the current page; the input state is never modified.
WorldState step(const WorldSpec& world, const WorldState& state, const Action& action);

bool holds(const Condition& c, const WorldState& state);
/// F(tau): 1 iff the task's success condition holds in the terminal state.
bool feedback(const WorldState& final_state, const SimTask& task);

/// Runs a fixed action list from the initial state, recording each step.
/// Invalid actions are recorded and leave the state unchanged. Returns the
/// trajectory with env_feedback filled in.
Trajectory replay(const WorldSpec& world, const SimTask& task, const std::vector<Action>& actions,
                  TrajectorySource source = TrajectorySource::sampled, WorldState* final_state = nullptr);
Trajectory replay_route(const WorldSpec& world, const SimTask& task, std::size_t route_index,
                        TrajectorySource source = TrajectorySource::sampled);

struct FixtureSuite {
  WorldSpec world;
  std::vector<Trajectory> expert_demos;  // one per train task, route 0

  std::vector<const SimTask*> tasks(Split s) const;
  /// Tasks with at least two declared routes.
  std::vector<const SimTask*> multi_route_tasks() const;
};

/// Builtin world with a seeded 70/30 train/test split over sorted task ids.
FixtureSuite generate_fixture_suite(std::uint64_t seed);
FixtureSuite make_suite(WorldSpec world, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Policies

struct SamplingConfig {
  double temperature = 1.0;
  double top_p = 0.9;
  int top_k = 50;
  int samples_per_task = 5;
  bool do_sample = true;

  /// Throws Error(config_error).
  void validate() const;
};

struct RolloutResult {
  Trajectory trajectory;
  bool budget_exceeded = false;
  int invalid_actions = 0;
};

/// rollout(task, world, cfg, seed) -> trajectory. Implementations must be
/// pure functions of their inputs and their own state so rollouts can run in
/// parallel and replay bit-identically.
class Policy {
 public:
  virtual ~Policy() = default;
  virtual std::string name() const = 0;
  virtual RolloutResult rollout(const SimTask& task, const WorldSpec& world, const SamplingConfig& cfg,
                                std::uint64_t seed) const = 0;
  /// Called after each training round; the fine-tuning stand-in.
  virtual void update(int /*iteration*/, const std::set<std::string>& /*known_task_ids*/) {}
};

enum class Behavior { expert_route, alternative_route, noisy, improving };
std::string_view to_string(Behavior b);
std::optional<Behavior> behavior_from(std::string_view s);

/// Scripted stand-in for the agent policy.
///   expert_route       follows route 0 exactly
///   alternative_route  follows route 1 (route 0 if there is none)
///   noisy              route 0 with a fixed per-step chance of a random action
///   improving          samples a route from a softmax over route rank; per-step
///                      noise shrinks with the iteration; tasks outside the known
///                      set succeed under greedy decoding only for a growing
///                      hash-selected share
class ScriptedPolicy final : public Policy {
 public:
  explicit ScriptedPolicy(Behavior behavior, std::uint64_t rng_seed = 0, int step_budget = 12)
      : behavior_(behavior), rng_seed_(rng_seed), step_budget_(step_budget) {}

  std::string name() const override { return std::string(to_string(behavior_)); }
  RolloutResult rollout(const SimTask& task, const WorldSpec& world, const SamplingConfig& cfg,
                        std::uint64_t seed) const override;
  void update(int iteration, const std::set<std::string>& known_task_ids) override;

  int iteration() const { return iteration_; }
  const std::set<std::string>& known() const { return known_; }
  void set_known(std::set<std::string> ids) { known_ = std::move(ids); }

  /// Per-step chance of a random action at the current iteration.
  double noise() const;
  /// Route sampling distribution (rank logits, temperature, top-k, top-p).
  static std::vector<double> route_distribution(std::size_t n_routes, const SamplingConfig& cfg);

 private:
  Behavior behavior_;
  std::uint64_t rng_seed_;
  int step_budget_;
  int iteration_ = 0;
  std::set<std::string> known_;
};

}  // namespace selftrain::sim
