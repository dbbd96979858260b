#pragma once

#include <memory>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "selftrain/llm_client.hpp"
#include "selftrain/trajectory.hpp"

namespace selftrain {

enum class GoalOrigin { seed, augmented };
std::string_view to_string(GoalOrigin o);

struct PooledGoal {
  std::string task_id;
  std::string goal;
  GoalOrigin origin = GoalOrigin::seed;
  int iteration_added = 0;
  bool operator==(const PooledGoal&) const = default;
};

/// Goals available for sampling. Task ids are unique; goals only accumulate.
class TaskPool {
 public:
  TaskPool() = default;
  explicit TaskPool(int iteration) : iteration_(iteration) {}

  int iteration() const { return iteration_; }
  void set_iteration(int i) { iteration_ = i; }
  const std::vector<PooledGoal>& goals() const { return goals_; }
  std::size_t size() const { return goals_.size(); }
  bool empty() const { return goals_.empty(); }

  bool contains_task(std::string_view task_id) const;
  /// Compared after Unicode normalization.
  bool contains_goal(std::string_view goal) const;
  const PooledGoal* find(std::string_view task_id) const;
  /// False (and no change) when the task id or goal is already pooled.
  bool add(PooledGoal g);

 private:
  int iteration_ = 0;
  std::vector<PooledGoal> goals_;
};

struct Augmentation {
  TaskPool pool;
  /// Successful trajectories of newly pooled goals, retagged pseudo_expert.
  std::vector<Trajectory> pseudo_experts;
};

/// Adds the goal of every successful trajectory that is not pooled yet and
/// advances the pool iteration. Throws Error(missing_feedback).
Augmentation augment_tasks(const TaskPool& pool, const std::vector<Trajectory>& evaluated);

enum class Verdict { accepted, invalid };
std::string_view to_string(Verdict v);

struct IntentCandidate {
  std::string raw;
  std::optional<std::string> refined;
  Verdict verdict = Verdict::invalid;
  std::optional<std::string> rule_fired;
};

/// Mechanical intent rules, loaded from data/intent_rules.json and the verb
/// lexicon in data/verbs.txt.
///   R1 strip label prefixes, R2 placeholders and empty text,
///   R3 leading verb plus explicit object, R4 negation or interruption.
struct IntentRules {
  std::vector<std::string> strip_prefixes;
  std::vector<std::string> placeholders;
  std::vector<std::string> denylist;
  std::vector<std::string> negation_verbs;
  std::set<std::string> verbs;
  std::set<std::string> stopwords;
  std::size_t min_object_tokens = 2;

  static const IntentRules& builtin();
  static IntentRules from_json(std::string_view json_text, std::set<std::string> verbs,
                               std::set<std::string> stopwords);
};

class IntentOracle {
 public:
  virtual ~IntentOracle() = default;
  virtual std::string name() const = 0;
  /// Throws Error(oracle_unavailable).
  virtual std::string infer(const Trajectory& traj) = 0;
  /// Rewrite pass applied to rule-accepted intents; nullopt means no opinion.
  virtual std::optional<std::string> rewrite(const std::string&) { return std::nullopt; }
};

/// "Answer '<answer>' for the observed page" when the trajectory stops,
/// otherwise "Perform: " + the last non-stop description.
class MockIntentOracle final : public IntentOracle {
 public:
  std::string name() const override { return "mock"; }
  std::string infer(const Trajectory& traj) override;
};

class LlmIntentOracle final : public IntentOracle {
 public:
  LlmIntentOracle(std::shared_ptr<llm::Client> client, std::string model, std::string examples = {})
      : client_(std::move(client)), model_(std::move(model)), examples_(std::move(examples)) {}
  std::string name() const override { return "llm"; }
  std::string infer(const Trajectory& traj) override;
  std::optional<std::string> rewrite(const std::string& intent) override;

 private:
  std::shared_ptr<llm::Client> client_;
  std::string model_;
  std::string examples_;
};

/// Numbered step descriptions; the trajectory text sent with the generation
/// prompt.
std::string describe_for_prompt(const Trajectory& traj);

/// Throws Error(oracle_unavailable) for an empty trajectory.
IntentCandidate infer_intent(const Trajectory& traj, IntentOracle& oracle);

/// Runs R1..R4; accepted candidates optionally go through oracle->rewrite and
/// the rewritten text runs the rules again.
IntentCandidate refine_intent(const IntentCandidate& c, const IntentRules& rules = IntentRules::builtin(),
                              IntentOracle* oracle = nullptr);

struct DropLog {
  std::string task_id;
  std::string raw;
  std::string rule_fired;
};

struct HarvestResult {
  std::vector<std::pair<Trajectory, std::string>> pairs;  // trajectory, refined goal
  std::vector<DropLog> drops;
};

HarvestResult harvest_failed(const std::vector<Trajectory>& failed, IntentOracle& oracle,
                             const IntentRules& rules = IntentRules::builtin(), bool llm_rewrite = false);

std::string drop_logs_to_jsonl(const std::vector<DropLog>& drops);

}  // namespace selftrain
