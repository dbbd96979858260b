#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "selftrain/abstraction.hpp"
#include "selftrain/extrapolation.hpp"
#include "selftrain/metrics.hpp"
#include "selftrain/sim_env.hpp"
#include "selftrain/strategy_graph.hpp"
#include "selftrain/training_io.hpp"

namespace selftrain {

struct Oracles {
  std::shared_ptr<KeyStepOracle> keystep;
  std::shared_ptr<SynthesisOracle> synth;
  std::shared_ptr<IntentOracle> intent;
  /// Run the intent oracle's rewrite pass after the mechanical rules.
  bool intent_rewrite = false;

  static Oracles mock();
};

struct PipelineConfig {
  sim::SamplingConfig sampling;
  /// Temperature of the whole-benchmark evaluation rollouts; 0 is greedy.
  double eval_temperature = 0.0;
  int workers = 1;
  std::uint64_t seed = 0;
  AbstractorConfig abstractor;
  ScoringOptions scoring;
  /// Abstract pseudo-expert demonstrations into graphs for newly pooled tasks.
  bool pseudo_expert_graphs = true;
  /// Shell command run after each checkpoint; {training_file} and {iteration}
  /// are substituted. Empty means dry run.
  std::string finetune_hook;
  /// Artifact root; empty disables artifact output (and the hook).
  std::filesystem::path output_dir;
  /// Restricts the benchmark to these task ids when non-empty.
  std::vector<std::string> task_filter;

  void validate() const;
};

struct MetricsRow {
  int iteration = 0;
  double overall_score = 0;
  double generalization_score = 0;
  double avg_path_count = 0;
  long long traj_count = 0;
  std::optional<double> ngpt;
  std::optional<KeyStepMetrics> keystep;
  std::optional<SynthesisMetrics> synthesis;
  std::optional<double> intent_preference_ratio;
};

std::string metrics_csv_header();
/// Absent values are empty fields; numbers use six decimals.
std::string metrics_csv_row(const MetricsRow& row);

struct IterationState {
  int iteration = 0;
  TaskPool pool;
  std::map<std::string, StrategyGraph> graphs;
  std::vector<TrainingExample> training;
  std::vector<MetricsRow> metrics;
  long long traj_count = 0;
  /// Greedy benchmark score of the policy before any iteration.
  double baseline_score = 0;
  double baseline_generalization = 0;
  /// Abstraction statistics not yet reported in a metrics row.
  Confusion pending_keystep;
  bool has_pending_keystep = false;
  std::vector<SynthesisAttemptLog> pending_logs;
};

/// One sampled or evaluated rollout plus its bookkeeping.
struct Rollout {
  Trajectory trajectory;
  bool budget_exceeded = false;
};

/// cfg.samples_per_task rollouts per task, in task order. Each rollout has its
/// own seed derived from (seed, iteration, task, sample index).
std::vector<Rollout> sample_trajectories(const sim::Policy& policy, const std::vector<const sim::SimTask*>& tasks,
                                         const sim::WorldSpec& world, const sim::SamplingConfig& cfg,
                                         std::uint64_t seed, int iteration, int workers);

struct SgeOutcome {
  std::map<std::string, StrategyGraph> graphs;
  std::vector<Trajectory> fully_passed;
  std::vector<Trajectory> partially_passed;
  std::vector<Trajectory> failed;
  /// Per input trajectory; nullopt when it could not be categorized.
  std::vector<std::optional<Category>> phase1;
  std::vector<std::optional<Category>> phase3;
  int expansions = 0;
  std::vector<std::string> notes;
  std::vector<SynthesisAttemptLog> attempt_logs;
  Confusion keystep;
  bool has_keystep = false;
};

/// Categorize against the current graphs; abstract and expand with every
/// successful PartiallyPassed trajectory; re-categorize everything.
/// Trajectories that cannot be categorized count as Failed and are noted.
SgeOutcome run_sge_iteration(const std::vector<Trajectory>& trajs, const std::map<std::string, StrategyGraph>& graphs,
                             const sim::WorldSpec& world, const Oracles& oracles, const PipelineConfig& cfg,
                             int iteration, const ApiRegistry& registry = ApiRegistry::builtin());

struct IterationReport {
  std::vector<Rollout> sampled;
  SgeOutcome sge;
  std::vector<Rollout> evaluated;
  HarvestResult harvest;
  std::vector<std::string> notes;
};

/// Seed pool (train split), one graph per expert demonstration, expert
/// training data, and the baseline benchmark score. Calls policy.update(0, ...).
IterationState init_state(const sim::FixtureSuite& suite, sim::Policy& policy, const Oracles& oracles,
                          const PipelineConfig& cfg);

/// sample -> SGE -> benchmark evaluation -> augment pool -> harvest failures
/// -> aggregate training data -> checkpoint -> fine-tune hook -> metrics.
/// Throws Error(empty_pool); Error(hook_failed) after the checkpoint is written.
IterationState run_iteration(const IterationState& state, sim::Policy& policy, const sim::FixtureSuite& suite,
                             const Oracles& oracles, const PipelineConfig& cfg, IterationReport* report = nullptr);

double average_path_count(const std::map<std::string, StrategyGraph>& graphs);

/// Key-step confusion of one abstraction against the task's ground truth.
Confusion keystep_confusion_for(const Trajectory& traj, const KeyStepSelection& sel, const sim::SimTask& task);

}  // namespace selftrain
