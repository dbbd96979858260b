#include "cli/commands.hpp"

#include <CLI11.hpp>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <set>

#include "selftrain/error.hpp"
#include "selftrain/graph_io.hpp"
#include "selftrain/llm_client.hpp"
#include "selftrain/metrics.hpp"
#include "selftrain/pipeline.hpp"
#include "selftrain/sim_env.hpp"
#include "selftrain/text.hpp"
#include "selftrain/trajectory_io.hpp"

namespace selftrain::cli {

namespace fs = std::filesystem;

namespace {

int exit_for(const Error& e) {
  switch (e.code()) {
    case Errc::hook_failed: return kHookFailed;
    case Errc::all_steps_failed:
    case Errc::empty_selection:
    case Errc::empty_pool: return kEmptyResult;
    default: return kInputError;
  }
}

template <class F>
int guarded(std::ostream& err, F&& body) {
  try {
    return body();
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return exit_for(e);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kInputError;
  }
}

std::shared_ptr<llm::Client> llm_client() {
  auto cfg = llm::EndpointConfig::from_env();
  if (!cfg) throw Error(Errc::config_error, "llm oracle selected but CORE_LLM_ENDPOINT is not set");
  return std::make_shared<llm::Client>(*cfg, std::make_shared<llm::HttpTransport>());
}

Oracles make_oracles(const RunConfig& c) {
  Oracles o = Oracles::mock();
  std::shared_ptr<llm::Client> client;
  auto get = [&] {
    if (!client) client = llm_client();
    return client;
  };
  if (c.keystep_oracle == OracleKind::llm) o.keystep = std::make_shared<LlmKeyStepOracle>(get(), c.llm_model);
  if (c.synth_oracle == OracleKind::llm)
    o.synth = std::make_shared<LlmSynthesisOracle>(get(), c.llm_model, c.guidance);
  if (c.intent_oracle == OracleKind::llm) o.intent = std::make_shared<LlmIntentOracle>(get(), c.llm_model);
  o.intent_rewrite = c.intent_rewrite;
  return o;
}

sim::WorldSpec world_for(const RunConfig& c) {
  if (c.world_spec.empty()) return sim::builtin_world();
  return sim::load_world(io::read_file(c.world_spec));
}

std::string fmt4(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

void override_oracles(RunConfig& c, std::optional<OracleKind> kind) {
  if (!kind) return;
  c.keystep_oracle = *kind;
  c.synth_oracle = *kind;
}

void emit(const std::optional<fs::path>& path, const std::string& content, std::ostream& out) {
  if (path) io::write_file(*path, content);
  else out << content;
}

}  // namespace

RunConfig resolve_config(const GlobalOptions& g) {
  RunConfig c;
  if (g.config) c = load_config(*g.config);
  if (g.seed) c.seed = *g.seed;
  if (g.workers) c.workers = *g.workers;
  return c;
}

int cmd_abstract(const GlobalOptions& g, const AbstractOptions& o, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    auto cfg = resolve_config(g);
    override_oracles(cfg, o.oracle);
    auto pc = cfg.pipeline();
    pc.abstractor.validate();
    auto traj = io::load_trajectory(o.trajectory);
    auto oracles = make_oracles(cfg);
    auto goal = o.goal.value_or(traj.goal);
    AbstractionResult res;
    try {
      res = abstract_trajectory(traj, goal, *oracles.keystep, *oracles.synth, pc.abstractor);
    } catch (const Error& e) {
      // Attempt logs are still useful when every step failed.
      if (e.code() == Errc::all_steps_failed) io::write_file(o.out_dir / "attempts.jsonl", "");
      throw;
    }
    std::size_t k = 0;
    for (const auto& log : res.logs) {
      if (!log.success_position) continue;
      auto name = "step_" + std::to_string(log.step_t) + ".lf";
      io::write_file(o.out_dir / name, print_label_function(res.lfs.at(k++)));
      out << (o.out_dir / name).string() << "\n";
    }
    io::write_file(o.out_dir / "attempts.jsonl", attempt_logs_to_jsonl(res.logs));
    for (const auto& n : res.notes) err << "note: " << n << "\n";
    return int{kOk};
  });
}

int cmd_categorize(const GlobalOptions&, const CategorizeOptions& o, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    auto g = load_graph(o.graph);
    std::string report = "task_id\tfile\tcategory\tbest_score\tbest_path_len\n";
    for (const auto& path : o.trajectories) {
      auto traj = io::load_trajectory(path);
      auto evals = evaluate_vertices(g, traj);
      auto cat = categorize(g, evals);
      auto best = best_path(g, evals);
      report += traj.task_id + "\t" + path.string() + "\t" + std::string(to_string(cat)) + "\t" +
                std::to_string(best ? best->score : 0) + "\t" + std::to_string(best ? best->path.size() : 0) + "\n";
    }
    out << report;
    return int{kOk};
  });
}

int cmd_expand(const GlobalOptions& g, const ExpandOptions& o, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    auto cfg = resolve_config(g);
    override_oracles(cfg, o.oracle);
    auto graph = load_graph(o.graph);
    auto traj = io::load_trajectory(o.trajectory);
    if (!traj.env_feedback)
      throw Error(Errc::missing_feedback, "trajectory has no env_feedback; expansion needs a verified outcome");
    auto oracles = make_oracles(cfg);
    auto res = abstract_trajectory(traj, o.goal.value_or(traj.goal), *oracles.keystep, *oracles.synth,
                                   cfg.pipeline().abstractor);
    auto before = path_count(graph);
    auto expanded = expand(graph, res.lfs, *traj.env_feedback);
    emit(o.out, export_graph(expanded, GraphFormat::json), out);
    err << "path_count " << before << " -> " << path_count(expanded) << "\n";
    return int{kOk};
  });
}

int cmd_loop(const GlobalOptions& g, const LoopOptions& o, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    auto cfg = resolve_config(g);
    if (o.iterations) cfg.iterations = *o.iterations;
    if (o.out_dir) cfg.output_dir = *o.out_dir;
    if (o.hook) cfg.finetune_hook = *o.hook;
    cfg.validate();
    auto pc = cfg.pipeline();
    auto suite = sim::make_suite(world_for(cfg), cfg.seed);
    sim::ScriptedPolicy policy(cfg.policy, cfg.seed, cfg.step_budget);
    auto oracles = make_oracles(cfg);
    auto state = init_state(suite, policy, oracles, pc);
    out << "baseline overall=" << fmt4(state.baseline_score) << " graphs=" << state.graphs.size()
        << " pool=" << state.pool.size() << "\n";
    for (int i = 0; i < cfg.iterations; ++i) {
      state = run_iteration(state, policy, suite, oracles, pc);
      const auto& m = state.metrics.back();
      out << "iteration " << m.iteration << " overall=" << fmt4(m.overall_score)
          << " generalization=" << fmt4(m.generalization_score) << " avg_path_count=" << fmt4(m.avg_path_count)
          << " pool=" << state.pool.size() << " training=" << state.training.size() << "\n";
    }
    return int{kOk};
  });
}

int cmd_simulate(const GlobalOptions& g, const SimulateOptions& o, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    auto cfg = resolve_config(g);
    if (o.policy) {
      auto b = sim::behavior_from(*o.policy);
      if (!b) throw Error(Errc::config_error, "unknown policy '" + *o.policy + "'");
      cfg.policy = *b;
    }
    if (o.samples) cfg.sampling.samples_per_task = *o.samples;
    cfg.sampling.validate();
    auto suite = sim::make_suite(world_for(cfg), cfg.seed);
    std::vector<const sim::SimTask*> tasks;
    for (const auto& t : suite.world.tasks)
      if (o.tasks.empty() || std::find(o.tasks.begin(), o.tasks.end(), t.task_id) != o.tasks.end())
        tasks.push_back(&t);
    for (const auto& id : o.tasks)
      if (!suite.world.find_task(id)) throw Error(Errc::config_error, "unknown task '" + id + "'");

    std::vector<Trajectory> trajs;
    if (o.routes) {
      for (const auto* t : tasks)
        for (std::size_t r = 0; r < t->routes.size(); ++r) trajs.push_back(sim::replay_route(suite.world, *t, r));
    } else {
      sim::ScriptedPolicy policy(cfg.policy, cfg.seed, cfg.step_budget);
      std::set<std::string> known;
      for (const auto* t : suite.tasks(sim::Split::train)) known.insert(t->task_id);
      policy.update(0, known);
      for (auto& r : sample_trajectories(policy, tasks, suite.world, cfg.sampling, cfg.seed, 0, cfg.workers))
        trajs.push_back(std::move(r.trajectory));
    }
    std::string summary = "task_id\tsplit\tsteps\tenv_feedback\n";
    for (const auto& t : trajs) {
      const auto* task = suite.world.find_task(t.task_id);
      summary += t.task_id + "\t" + std::string(to_string(task->split)) + "\t" + std::to_string(t.steps.size()) +
                 "\t" + (t.env_feedback.value_or(false) ? "1" : "0") + "\n";
    }
    if (o.out) io::write_file(*o.out, io::write_jsonl(trajs));
    out << summary;
    return int{kOk};
  });
}

int cmd_metrics(const GlobalOptions&, const MetricsOptions& o, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    using nlohmann::json;
    std::string report;
    if (o.ngpt) {
      report += "perf_delta,traj_delta,ngpt\n";
      int line_no = 0;
      std::istringstream in(io::read_file(*o.ngpt));
      for (std::string line; std::getline(in, line);) {
        ++line_no;
        auto t = text::trim(line);
        if (t.empty() || t.front() == '#' || text::starts_with_icase(t, "perf_delta")) continue;
        auto comma = t.find(',');
        if (comma == std::string::npos)
          throw Error(Errc::format_error, "ngpt line " + std::to_string(line_no) + ": expected perf_delta,traj_delta");
        double perf = 0;
        long long trajs = 0;
        try {
          std::size_t used = 0;
          auto a = text::trim(t.substr(0, comma)), b = text::trim(t.substr(comma + 1));
          perf = std::stod(a, &used);
          if (used != a.size()) throw std::invalid_argument(a);
          trajs = std::stoll(b, &used);
          if (used != b.size()) throw std::invalid_argument(b);
        } catch (const std::logic_error&) {
          throw Error(Errc::format_error, "ngpt line " + std::to_string(line_no) + ": not a number");
        }
        report += text::trim(t.substr(0, comma)) + "," + std::to_string(trajs) + "," +
                  fmt4(compute_ngpt(perf, trajs)) + "\n";
      }
    }
    if (o.keystep || o.attempts || o.judgments) {
      if (!report.empty()) report += "\n";
      std::string row;
      if (o.keystep) {
        Confusion c;
        std::istringstream in(io::read_file(*o.keystep));
        bool any = false;
        for (std::string line; std::getline(in, line);) {
          if (text::trim(line).empty()) continue;
          auto j = json::parse(line);
          c += keystep_confusion(j.at("predicted").get<std::set<int>>(), j.at("truth").get<std::set<int>>(),
                                 j.at("universe").get<int>());
          any = true;
        }
        if (any) {
          auto m = keystep_metrics(c);
          row += fmt4(m.accuracy) + "," + fmt4(m.precision) + "," + fmt4(m.recall) + "," + fmt4(m.f1) + ",";
        } else {
          row += ",,,,";
        }
      } else {
        row += ",,,,";
      }
      std::vector<SynthesisAttemptLog> logs;
      if (o.attempts) logs = attempt_logs_from_jsonl(io::read_file(*o.attempts));
      if (!logs.empty()) {
        auto m = synthesis_metrics(logs);
        row += fmt4(m.osr) + "," + fmt4(m.ftsr) + "," + (m.esp ? fmt4(*m.esp) : "") + ",";
      } else {
        row += ",,,";
      }
      std::vector<Judgment> judgments;
      if (o.judgments) {
        std::istringstream in(io::read_file(*o.judgments));
        for (std::string line; std::getline(in, line);) {
          auto t = text::trim(line);
          if (t.empty()) continue;
          auto j = judgment_from(t);
          if (!j) throw Error(Errc::format_error, "unknown judgment '" + t + "'");
          judgments.push_back(*j);
        }
      }
      if (!judgments.empty()) row += fmt4(intent_preference_ratio(judgments));
      report += "keystep_acc,keystep_prec,keystep_rec,keystep_f1,synth_osr,synth_ftsr,synth_esp,"
                "intent_preference_ratio\n" +
                row + "\n";
    }
    out << report;
    return int{kOk};
  });
}

int cmd_export_graph(const GlobalOptions&, const ExportGraphOptions& o, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    GraphFormat fmt;
    if (o.format == "dot") fmt = GraphFormat::dot;
    else if (o.format == "json") fmt = GraphFormat::json;
    else throw Error(Errc::config_error, "unknown graph format '" + o.format + "'");
    emit(o.out, export_graph(load_graph(o.graph), fmt), out);
    return int{kOk};
  });
}

int run_cli(int argc, char** argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Strategy-graph self-training toolkit"};
  app.require_subcommand(1);
  app.fallthrough();
  GlobalOptions g;
  std::uint64_t seed = 0;
  int workers = 1;
  std::string config;
  auto* seed_opt = app.add_option("--seed", seed, "Seed for every random choice");
  auto* workers_opt = app.add_option("--workers", workers, "Parallel worker bound")->check(CLI::PositiveNumber);
  auto* config_opt = app.add_option("--config", config, "Flat key = value run config");

  AbstractOptions ab;
  std::string ab_goal;
  auto* abs = app.add_subcommand("abstract", "Synthesize label functions from one trajectory");
  abs->add_option("trajectory", ab.trajectory, "Trajectory JSONL")->required();
  auto* ab_goal_opt = abs->add_option("--goal", ab_goal, "Goal (default: trajectory goal)");
  abs->add_option("--out", ab.out_dir, "Output directory");
  std::string ab_oracle, ex_oracle;
  auto* ab_oracle_opt =
      abs->add_option("--oracle", ab_oracle, "Key-step and synthesis oracle")->check(CLI::IsMember({"mock", "llm"}));

  CategorizeOptions cat;
  auto* cats = app.add_subcommand("categorize", "Categorize trajectories against a strategy graph");
  cats->add_option("graph", cat.graph, "Graph JSON")->required();
  cats->add_option("trajectories", cat.trajectories, "Trajectory JSONL files")->required();

  ExpandOptions ex;
  std::string ex_goal, ex_out;
  auto* exs = app.add_subcommand("expand", "Merge a successful trajectory's strategy into a graph");
  exs->add_option("graph", ex.graph, "Graph JSON")->required();
  exs->add_option("trajectory", ex.trajectory, "Trajectory JSONL")->required();
  auto* ex_goal_opt = exs->add_option("--goal", ex_goal, "Goal (default: trajectory goal)");
  auto* ex_out_opt = exs->add_option("--out", ex_out, "Output graph file (default: stdout)");
  auto* ex_oracle_opt =
      exs->add_option("--oracle", ex_oracle, "Key-step and synthesis oracle")->check(CLI::IsMember({"mock", "llm"}));

  LoopOptions lo;
  int lo_iters = 0;
  std::string lo_out, lo_hook;
  auto* loops = app.add_subcommand("loop", "Run the iterative self-training loop");
  auto* lo_iters_opt = loops->add_option("--iterations", lo_iters, "Iteration count")->check(CLI::PositiveNumber);
  auto* lo_out_opt = loops->add_option("--out", lo_out, "Artifact directory");
  auto* lo_hook_opt = loops->add_option("--hook", lo_hook, "Fine-tune command template");

  SimulateOptions si;
  std::string si_policy, si_out;
  int si_samples = 0;
  auto* sims = app.add_subcommand("simulate", "Roll out a scripted policy in the simulated world");
  sims->add_option("--task", si.tasks, "Task id (repeatable; default all)");
  auto* si_policy_opt = sims->add_option("--policy", si_policy, "expert_route|alternative_route|noisy|improving");
  auto* si_samples_opt = sims->add_option("--samples", si_samples, "Rollouts per task")->check(CLI::PositiveNumber);
  auto* si_out_opt = sims->add_option("--out", si_out, "Write trajectories as JSONL");
  sims->add_flag("--routes", si.routes, "Replay every declared route instead");

  MetricsOptions me;
  std::string me_ngpt, me_keystep, me_attempts, me_judgments;
  auto* mets = app.add_subcommand("metrics", "Compute NGPT, key-step, synthesis and preference metrics");
  auto* me_ngpt_opt = mets->add_option("--ngpt", me_ngpt, "CSV of perf_delta,traj_delta rows");
  auto* me_keystep_opt = mets->add_option("--keystep", me_keystep, "JSONL of predicted/truth/universe records");
  auto* me_attempts_opt = mets->add_option("--attempts", me_attempts, "Synthesis attempts JSONL");
  auto* me_judgments_opt = mets->add_option("--judgments", me_judgments, "One judgment per line");

  ExportGraphOptions eg;
  std::string eg_out;
  auto* egs = app.add_subcommand("export-graph", "Render a strategy graph as JSON or DOT");
  egs->add_option("graph", eg.graph, "Graph JSON")->required();
  egs->add_option("--format", eg.format, "dot|json")->check(CLI::IsMember({"dot", "json"}));
  auto* eg_out_opt = egs->add_option("--out", eg_out, "Output file (default: stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e, out, err);
    return code == 0 ? kOk : kInputError;
  }

  if (seed_opt->count()) g.seed = seed;
  if (workers_opt->count()) g.workers = workers;
  if (config_opt->count()) g.config = config;

  if (abs->parsed()) {
    if (ab_goal_opt->count()) ab.goal = ab_goal;
    if (ab_oracle_opt->count()) ab.oracle = oracle_kind_from(ab_oracle);
    return cmd_abstract(g, ab, out, err);
  }
  if (cats->parsed()) return cmd_categorize(g, cat, out, err);
  if (exs->parsed()) {
    if (ex_goal_opt->count()) ex.goal = ex_goal;
    if (ex_out_opt->count()) ex.out = ex_out;
    if (ex_oracle_opt->count()) ex.oracle = oracle_kind_from(ex_oracle);
    return cmd_expand(g, ex, out, err);
  }
  if (loops->parsed()) {
    if (lo_iters_opt->count()) lo.iterations = lo_iters;
    if (lo_out_opt->count()) lo.out_dir = lo_out;
    if (lo_hook_opt->count()) lo.hook = lo_hook;
    return cmd_loop(g, lo, out, err);
  }
  if (sims->parsed()) {
    if (si_policy_opt->count()) si.policy = si_policy;
    if (si_samples_opt->count()) si.samples = si_samples;
    if (si_out_opt->count()) si.out = si_out;
    return cmd_simulate(g, si, out, err);
  }
  if (mets->parsed()) {
    if (me_ngpt_opt->count()) me.ngpt = me_ngpt;
    if (me_keystep_opt->count()) me.keystep = me_keystep;
    if (me_attempts_opt->count()) me.attempts = me_attempts;
    if (me_judgments_opt->count()) me.judgments = me_judgments;
    return cmd_metrics(g, me, out, err);
  }
  if (eg_out_opt->count()) eg.out = eg_out;
  return cmd_export_graph(g, eg, out, err);
}

}  // namespace selftrain::cli
