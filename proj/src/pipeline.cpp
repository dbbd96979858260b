#include "selftrain/pipeline.hpp"

#include <sys/wait.h>

#include <cstdio>
#include <cstdlib>
#include <json.hpp>
#include <set>
#include <sstream>
#include <unordered_set>

#include "selftrain/error.hpp"
#include "selftrain/graph_io.hpp"
#include "selftrain/parallel.hpp"
#include "selftrain/trajectory_io.hpp"

namespace selftrain {

namespace fs = std::filesystem;
using nlohmann::json;

Oracles Oracles::mock() {
  Oracles o;
  o.keystep = std::make_shared<MockKeyStepOracle>();
  o.synth = std::make_shared<MockSynthesisOracle>();
  o.intent = std::make_shared<MockIntentOracle>();
  return o;
}

void PipelineConfig::validate() const {
  sampling.validate();
  abstractor.validate();
  if (workers < 1) throw Error(Errc::config_error, "workers must be at least 1");
  if (eval_temperature < 0) throw Error(Errc::config_error, "eval_temperature must be non-negative");
  if (!finetune_hook.empty() && output_dir.empty())
    throw Error(Errc::config_error, "finetune_hook needs an output directory for the training file");
}

namespace {

std::string fmt6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

std::string opt6(const std::optional<double>& v) { return v ? fmt6(*v) : std::string(); }

struct EvalScore {
  double overall = 0;
  double generalization = 0;
};

std::vector<const sim::SimTask*> benchmark_tasks(const sim::FixtureSuite& suite, const PipelineConfig& cfg) {
  std::vector<const sim::SimTask*> out;
  std::set<std::string> filter(cfg.task_filter.begin(), cfg.task_filter.end());
  for (const auto& t : suite.world.tasks)
    if (filter.empty() || filter.contains(t.task_id)) out.push_back(&t);
  return out;
}

std::vector<Rollout> evaluate_benchmark(const sim::Policy& policy, const std::vector<const sim::SimTask*>& tasks,
                                        const sim::WorldSpec& world, const PipelineConfig& cfg,
                                        std::string_view tag, int iteration) {
  sim::SamplingConfig ec = cfg.sampling;
  ec.samples_per_task = 1;
  ec.do_sample = cfg.eval_temperature > 0;
  if (ec.do_sample) ec.temperature = cfg.eval_temperature;
  std::vector<Rollout> out(tasks.size());
  std::string iter = std::to_string(iteration);
  parallel_for(tasks.size(), cfg.workers, [&](std::size_t i) {
    auto seed = sim::stable_hash({tag, iter, tasks[i]->task_id}, cfg.seed);
    auto r = policy.rollout(*tasks[i], world, ec, seed);
    out[i] = Rollout{std::move(r.trajectory), r.budget_exceeded};
  });
  return out;
}

EvalScore score(const std::vector<Rollout>& evaluated, const std::vector<const sim::SimTask*>& tasks) {
  double ok = 0, test_ok = 0, test_n = 0;
  for (std::size_t i = 0; i < evaluated.size(); ++i) {
    bool success = evaluated[i].trajectory.env_feedback.value_or(false);
    ok += success;
    if (tasks[i]->split == sim::Split::test) {
      ++test_n;
      test_ok += success;
    }
  }
  EvalScore s;
  if (!evaluated.empty()) s.overall = ok / static_cast<double>(evaluated.size());
  if (test_n > 0) s.generalization = test_ok / test_n;
  return s;
}

/// Abstracts one trajectory and folds its key-step statistics into `stats`.
std::optional<AbstractionResult> abstract_logged(const Trajectory& traj, const std::string& goal,
                                                 const sim::WorldSpec& world, const Oracles& oracles,
                                                 const PipelineConfig& cfg, const ApiRegistry& registry,
                                                 Confusion& stats, bool& has_stats,
                                                 std::vector<SynthesisAttemptLog>& logs,
                                                 std::vector<std::string>& notes) {
  try {
    auto res = abstract_trajectory(traj, goal, *oracles.keystep, *oracles.synth, cfg.abstractor, registry);
    if (const auto* task = world.find_task(traj.task_id)) {
      stats += keystep_confusion_for(traj, res.selection, *task);
      has_stats = true;
    }
    logs.insert(logs.end(), res.logs.begin(), res.logs.end());
    for (const auto& n : res.notes) notes.push_back(traj.task_id + ": " + n);
    return res;
  } catch (const Error& e) {
    if (e.code() == Errc::oracle_unavailable) throw;
    notes.push_back(traj.task_id + ": abstraction failed: " + e.what());
    return std::nullopt;
  }
}

std::optional<Category> categorize_safe(const std::map<std::string, StrategyGraph>& graphs, const Trajectory& traj,
                                        const PipelineConfig& cfg, const ApiRegistry& registry, std::string& note) {
  auto it = graphs.find(traj.task_id);
  if (it == graphs.end() || it->second.empty()) {
    note = traj.task_id + ": no strategy graph; counted as failed";
    return std::nullopt;
  }
  try {
    return categorize(it->second, traj, cfg.scoring, registry);
  } catch (const Error& e) {
    note = traj.task_id + ": categorization error (" + e.what() + "); counted as failed";
    return std::nullopt;
  }
}

std::vector<std::optional<Category>> categorize_all(const std::vector<Trajectory>& trajs,
                                                    const std::map<std::string, StrategyGraph>& graphs,
                                                    const PipelineConfig& cfg, const ApiRegistry& registry,
                                                    std::vector<std::string>& notes) {
  std::vector<std::optional<Category>> cats(trajs.size());
  std::vector<std::string> slot_notes(trajs.size());
  parallel_for(trajs.size(), cfg.workers,
               [&](std::size_t i) { cats[i] = categorize_safe(graphs, trajs[i], cfg, registry, slot_notes[i]); });
  for (auto& n : slot_notes)
    if (!n.empty()) notes.push_back(std::move(n));
  return cats;
}

json pool_to_json(const TaskPool& pool) {
  json goals = json::array();
  for (const auto& g : pool.goals())
    goals.push_back({{"task_id", g.task_id},
                     {"goal", g.goal},
                     {"origin", std::string(to_string(g.origin))},
                     {"iteration_added", g.iteration_added}});
  return {{"iteration", pool.iteration()}, {"goals", goals}};
}

std::string rollouts_jsonl(const std::vector<Rollout>& rs) {
  std::string out;
  for (const auto& r : rs) out += io::write_jsonl(r.trajectory);
  return out;
}

std::string join_lines(const std::vector<std::string>& lines) {
  std::string out;
  for (const auto& l : lines) out += l + "\n";
  return out;
}

std::string replace_all(std::string s, std::string_view from, std::string_view to) {
  for (std::size_t pos = s.find(from); pos != std::string::npos; pos = s.find(from, pos + to.size()))
    s.replace(pos, from.size(), to);
  return s;
}

void run_hook(const std::string& hook, const fs::path& training_file, int iteration) {
  std::string cmd = replace_all(hook, "{training_file}", training_file.string());
  cmd = replace_all(cmd, "{iteration}", std::to_string(iteration));
  int status = std::system(cmd.c_str());
  if (status == -1 || !WIFEXITED(status) || WEXITSTATUS(status) != 0) {
    int code = (status != -1 && WIFEXITED(status)) ? WEXITSTATUS(status) : -1;
    throw Error(Errc::hook_failed, "fine-tune hook exited with status " + std::to_string(code) + ": " + cmd);
  }
}

void write_metrics_csv(const fs::path& dir, const std::vector<MetricsRow>& rows) {
  std::string out = metrics_csv_header() + "\n";
  for (const auto& r : rows) out += metrics_csv_row(r) + "\n";
  io::write_file(dir / "metrics.csv", out);
}

}  // namespace

std::string metrics_csv_header() {
  return "iteration,overall_score,generalization_score,avg_path_count,traj_count,ngpt,"
         "keystep_acc,keystep_prec,keystep_rec,keystep_f1,synth_osr,synth_ftsr,synth_esp,"
         "intent_preference_ratio";
}

std::string metrics_csv_row(const MetricsRow& r) {
  std::ostringstream os;
  os << r.iteration << ',' << fmt6(r.overall_score) << ',' << fmt6(r.generalization_score) << ','
     << fmt6(r.avg_path_count) << ',' << r.traj_count << ',' << opt6(r.ngpt) << ',';
  if (r.keystep)
    os << fmt6(r.keystep->accuracy) << ',' << fmt6(r.keystep->precision) << ',' << fmt6(r.keystep->recall) << ','
       << fmt6(r.keystep->f1) << ',';
  else
    os << ",,,,";
  if (r.synthesis)
    os << fmt6(r.synthesis->osr) << ',' << fmt6(r.synthesis->ftsr) << ',' << opt6(r.synthesis->esp) << ',';
  else
    os << ",,,";
  os << opt6(r.intent_preference_ratio);
  return os.str();
}

double average_path_count(const std::map<std::string, StrategyGraph>& graphs) {
  if (graphs.empty()) return 0;
  double total = 0;
  for (const auto& [_, g] : graphs) total += static_cast<double>(path_count(g));
  return total / static_cast<double>(graphs.size());
}

Confusion keystep_confusion_for(const Trajectory& traj, const KeyStepSelection& sel, const sim::SimTask& task) {
  auto descs = describe_trajectory(traj);
  std::set<int> predicted, truth;
  for (const auto& d : sel.selected) predicted.insert(d.step_t - 1);
  for (const auto& d : descs)
    if (task.ground_truth_key_steps.contains(d.text)) truth.insert(d.step_t - 1);
  return keystep_confusion(predicted, truth, static_cast<int>(descs.size()));
}

std::vector<Rollout> sample_trajectories(const sim::Policy& policy, const std::vector<const sim::SimTask*>& tasks,
                                         const sim::WorldSpec& world, const sim::SamplingConfig& cfg,
                                         std::uint64_t seed, int iteration, int workers) {
  cfg.validate();
  const auto k = static_cast<std::size_t>(cfg.samples_per_task);
  std::vector<Rollout> out(tasks.size() * k);
  std::string iter = std::to_string(iteration);
  parallel_for(out.size(), workers, [&](std::size_t i) {
    const auto* task = tasks[i / k];
    auto s = sim::stable_hash({"sample", iter, task->task_id, std::to_string(i % k)}, seed);
    auto r = policy.rollout(*task, world, cfg, s);
    out[i] = Rollout{std::move(r.trajectory), r.budget_exceeded};
  });
  return out;
}

SgeOutcome run_sge_iteration(const std::vector<Trajectory>& trajs, const std::map<std::string, StrategyGraph>& graphs,
                             const sim::WorldSpec& world, const Oracles& oracles, const PipelineConfig& cfg,
                             int iteration, const ApiRegistry& registry) {
  SgeOutcome out;
  out.graphs = graphs;
  out.phase1 = categorize_all(trajs, out.graphs, cfg, registry, out.notes);

  for (std::size_t i = 0; i < trajs.size(); ++i) {
    const auto& traj = trajs[i];
    if (out.phase1[i] != Category::PartiallyPassed || !traj.env_feedback.value_or(false)) continue;
    auto res = abstract_logged(traj, traj.goal, world, oracles, cfg, registry, out.keystep, out.has_keystep,
                               out.attempt_logs, out.notes);
    if (!res) continue;
    auto& g = out.graphs.at(traj.task_id);
    auto before = path_count(g);
    g = expand(g, res->lfs, true);
    ++out.expansions;
    if (path_count(g) > before)
      out.notes.push_back(traj.task_id + ": iteration " + std::to_string(iteration) + " added a strategy");
  }

  std::vector<std::string> phase3_notes;
  out.phase3 = categorize_all(trajs, out.graphs, cfg, registry, phase3_notes);
  for (std::size_t i = 0; i < trajs.size(); ++i) {
    switch (out.phase3[i].value_or(Category::Failed)) {
      case Category::FullyPassed: out.fully_passed.push_back(trajs[i]); break;
      case Category::PartiallyPassed: out.partially_passed.push_back(trajs[i]); break;
      case Category::Failed: out.failed.push_back(trajs[i]); break;
    }
  }
  return out;
}

IterationState init_state(const sim::FixtureSuite& suite, sim::Policy& policy, const Oracles& oracles,
                          const PipelineConfig& cfg) {
  cfg.validate();
  IterationState st;
  st.pool = TaskPool(0);
  auto tasks = benchmark_tasks(suite, cfg);
  for (const auto* t : tasks)
    if (t->split == sim::Split::train) st.pool.add({t->task_id, t->goal, GoalOrigin::seed, 0});

  std::vector<std::string> notes;
  for (const auto& demo : suite.expert_demos) {
    if (!st.pool.contains_task(demo.task_id)) continue;
    st.training.push_back({demo.goal, demo, Provenance::expert});
    auto res = abstract_logged(demo, demo.goal, suite.world, oracles, cfg, ApiRegistry::builtin(),
                               st.pending_keystep, st.has_pending_keystep, st.pending_logs, notes);
    if (res) st.graphs.emplace(demo.task_id, init_linear(res->lfs, demo.task_id, 0));
  }

  std::set<std::string> ids;
  for (const auto& g : st.pool.goals()) ids.insert(g.task_id);
  policy.update(0, ids);
  auto s = score(evaluate_benchmark(policy, tasks, suite.world, cfg, "score", 0), tasks);
  st.baseline_score = s.overall;
  st.baseline_generalization = s.generalization;
  return st;
}

IterationState run_iteration(const IterationState& state, sim::Policy& policy, const sim::FixtureSuite& suite,
                             const Oracles& oracles, const PipelineConfig& cfg, IterationReport* report) {
  cfg.validate();
  if (state.pool.empty()) throw Error(Errc::empty_pool, "task pool is empty");
  const auto& world = suite.world;
  const auto& registry = ApiRegistry::builtin();
  IterationState next = state;
  const int it = state.iteration + 1;
  next.iteration = it;
  IterationReport local;
  IterationReport& rep = report ? *report : local;
  rep = IterationReport{};

  // 1. Sample from every pooled goal.
  std::vector<const sim::SimTask*> pooled;
  for (const auto& g : state.pool.goals()) {
    if (const auto* t = world.find_task(g.task_id)) pooled.push_back(t);
    else rep.notes.push_back(g.task_id + ": pooled goal has no environment task; not sampled");
  }
  rep.sampled = sample_trajectories(policy, pooled, world, cfg.sampling, cfg.seed, it, cfg.workers);
  std::vector<Trajectory> sampled;
  for (const auto& r : rep.sampled) {
    if (r.budget_exceeded)
      rep.notes.push_back(r.trajectory.task_id + ": rollout budget exceeded; treated as unsuccessful");
    sampled.push_back(r.trajectory);
  }
  next.traj_count += static_cast<long long>(sampled.size());

  // 2. Strategy graph expansion.
  rep.sge = run_sge_iteration(sampled, state.graphs, world, oracles, cfg, it, registry);
  next.graphs = rep.sge.graphs;
  Confusion keystep = rep.sge.keystep;
  bool has_keystep = rep.sge.has_keystep;
  std::vector<SynthesisAttemptLog> logs = rep.sge.attempt_logs;
  rep.notes.insert(rep.notes.end(), rep.sge.notes.begin(), rep.sge.notes.end());
  if (state.has_pending_keystep) {
    keystep += state.pending_keystep;
    has_keystep = true;
  }
  logs.insert(logs.begin(), state.pending_logs.begin(), state.pending_logs.end());
  next.pending_keystep = {};
  next.has_pending_keystep = false;
  next.pending_logs.clear();

  // 3. Benchmark evaluation and pool augmentation.
  auto tasks = benchmark_tasks(suite, cfg);
  rep.evaluated = evaluate_benchmark(policy, tasks, world, cfg, "eval", it);
  std::vector<Trajectory> evaluated;
  for (const auto& r : rep.evaluated) evaluated.push_back(r.trajectory);
  auto aug = augment_tasks(state.pool, evaluated);
  next.pool = aug.pool;
  if (cfg.pseudo_expert_graphs) {
    for (const auto& pe : aug.pseudo_experts) {
      if (next.graphs.contains(pe.task_id)) continue;
      auto res = abstract_logged(pe, pe.goal, world, oracles, cfg, registry, keystep, has_keystep, logs, rep.notes);
      if (res) next.graphs.emplace(pe.task_id, init_linear(res->lfs, pe.task_id, it));
    }
  }

  // 4. Relabel failures.
  rep.harvest = harvest_failed(rep.sge.failed, *oracles.intent, IntentRules::builtin(), oracles.intent_rewrite);

  // 5. Training data union, deduplicated.
  std::unordered_set<std::string> seen;
  for (const auto& ex : next.training) seen.insert(example_key(ex));
  auto add = [&](TrainingExample ex) {
    if (seen.insert(example_key(ex)).second) next.training.push_back(std::move(ex));
  };
  for (const auto& t : rep.sge.fully_passed) add({t.goal, t, Provenance::fully_passed});
  for (const auto& [t, goal] : rep.harvest.pairs) add({goal, t, Provenance::failure_relabel});
  for (const auto& t : aug.pseudo_experts) add({t.goal, t, Provenance::pseudo_expert});

  // 6. Checkpoint, then the fine-tune hook.
  fs::path training_file;
  if (!cfg.output_dir.empty()) {
    fs::path dir = cfg.output_dir / ("iter_" + std::to_string(it));
    std::string trajs;
    for (const auto& t : sampled) trajs += io::write_jsonl(t);
    io::write_file(dir / "trajectories.jsonl", trajs);
    io::write_file(dir / "eval.jsonl", rollouts_jsonl(rep.evaluated));
    std::string cats = "task_id\tphase1\tphase3\tenv_feedback\n";
    for (std::size_t i = 0; i < sampled.size(); ++i) {
      auto name = [](const std::optional<Category>& c) {
        return c ? std::string(to_string(*c)) : std::string("Uncategorized");
      };
      cats += sampled[i].task_id + "\t" + name(rep.sge.phase1[i]) + "\t" + name(rep.sge.phase3[i]) + "\t" +
              (sampled[i].env_feedback.value_or(false) ? "1" : "0") + "\n";
    }
    io::write_file(dir / "categories.tsv", cats);
    fs::remove_all(dir / "graphs");
    for (const auto& [id, g] : next.graphs) save_graph(dir / "graphs" / graph_file_name(id), g);
    training_file = fs::absolute(dir / "training.jsonl");
    export_training_file(next.training, training_file);
    io::write_file(dir / "drops.jsonl", drop_logs_to_jsonl(rep.harvest.drops));
    io::write_file(dir / "attempts.jsonl", attempt_logs_to_jsonl(logs));
    io::write_file(dir / "pool.json", pool_to_json(next.pool).dump(2) + "\n");
    io::write_file(dir / "log.txt", join_lines(rep.notes));
  }
  if (!cfg.finetune_hook.empty()) run_hook(cfg.finetune_hook, training_file, it);

  std::set<std::string> ids;
  for (const auto& g : next.pool.goals()) ids.insert(g.task_id);
  policy.update(it, ids);

  // 7. Metrics for the updated policy.
  auto s = score(evaluate_benchmark(policy, tasks, world, cfg, "score", it), tasks);
  MetricsRow row;
  row.iteration = it;
  row.overall_score = s.overall;
  row.generalization_score = s.generalization;
  row.avg_path_count = average_path_count(next.graphs);
  row.traj_count = next.traj_count;
  double prev = state.metrics.empty() ? state.baseline_score : state.metrics.back().overall_score;
  auto delta = static_cast<long long>(sampled.size());
  if (delta > 0) row.ngpt = compute_ngpt(100.0 * (s.overall - prev), delta);
  if (has_keystep) row.keystep = keystep_metrics(keystep);
  if (!logs.empty()) row.synthesis = synthesis_metrics(logs);
  next.metrics.push_back(row);
  if (!cfg.output_dir.empty()) write_metrics_csv(cfg.output_dir, next.metrics);
  return next;
}

}  // namespace selftrain
