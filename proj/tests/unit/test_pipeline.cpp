#include <doctest.h>

#include <sstream>

#include "selftrain/error.hpp"
#include "selftrain/graph_io.hpp"
#include "selftrain/pipeline.hpp"
#include "selftrain/trajectory_io.hpp"
#include "test_support.hpp"

using namespace selftrain;
using namespace testsupport;
namespace fs = std::filesystem;

namespace {

std::vector<std::string> lines_of(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream in(s);
  std::string line;
  while (std::getline(in, line)) out.push_back(line);
  return out;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    auto comma = line.find(',', start);
    out.push_back(line.substr(start, comma - start));
    if (comma == std::string::npos) return out;
    start = comma + 1;
  }
}

SynthesisAttemptLog log_at(std::optional<int> pos) {
  SynthesisAttemptLog l;
  l.desc_text = "d";
  int n = pos.value_or(5);
  for (int i = 1; i <= n; ++i) l.attempts.push_back({i, "x", true, pos && i == *pos, ""});
  l.success_position = pos;
  return l;
}

TrainingExample example(const std::string& task, Provenance p, const std::string& goal = "g") {
  return {goal, make_traj(task, goal, {{ui({}), Action::stop("x")}}, TrajectorySource::sampled, true), p};
}

StrategyGraph graph_from_route(const sim::WorldSpec& w, const sim::SimTask& t, std::size_t route) {
  MockKeyStepOracle ks;
  MockSynthesisOracle syn;
  auto traj = sim::replay_route(w, t, route, TrajectorySource::expert);
  return init_linear(abstract_trajectory(traj, t.goal, ks, syn, {}).lfs, t.task_id);
}

}  // namespace

TEST_CASE("ngpt reference rows") {
  struct Row {
    double perf;
    long long traj;
    double ngpt;
  };
  const Row rows[] = {{-0.77, 63, -0.0122}, {-0.55, 255, -0.0022}, {2.53, 307, 0.0082},
                      {1.11, 38, 0.0292},   {5.17, 49, 0.1055},    {7.75, 45, 0.1722}};
  for (const auto& r : rows) CHECK(std::abs(compute_ngpt(r.perf, r.traj) - r.ngpt) <= 1e-4);
  CHECK(compute_ngpt(0, 17) == 0.0);
  try {
    compute_ngpt(1.0, 0);
    FAIL("expected zero_traj_delta");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::zero_traj_delta);
  }
  CHECK_THROWS_AS(compute_ngpt(1.0, -3), Error);
}

TEST_CASE("key-step metrics") {
  auto same = keystep_metrics({1, 2}, {1, 2}, 5);
  CHECK(same.accuracy == 1.0);
  CHECK(same.precision == 1.0);
  CHECK(same.recall == 1.0);
  CHECK(same.f1 == 1.0);

  // TP {0,1}, FP {2}, FN {3}, TN {4..9}.
  auto c = keystep_confusion({0, 1, 2}, {0, 1, 3}, 10);
  CHECK(c.tp == 2);
  CHECK(c.fp == 1);
  CHECK(c.fn == 1);
  CHECK(c.tn == 6);
  auto m = keystep_metrics(c);
  CHECK(std::abs(m.precision - 0.6667) <= 1e-4);
  CHECK(std::abs(m.recall - 0.6667) <= 1e-4);
  CHECK(std::abs(m.accuracy - 0.8) <= 1e-4);
  CHECK(std::abs(m.f1 - 0.6667) <= 1e-4);

  auto none = keystep_metrics({}, {1}, 4);
  CHECK(none.precision == 0.0);
  CHECK(none.recall == 0.0);
  CHECK(none.f1 == 0.0);
  CHECK(keystep_metrics(Confusion{}).accuracy == 0.0);

  Confusion sum = c;
  sum += c;
  CHECK(sum.tn == 12);
}

TEST_CASE("synthesis metrics") {
  std::vector<SynthesisAttemptLog> all_first(4, log_at(1));
  auto a = synthesis_metrics(all_first);
  CHECK(a.osr == 1.0);
  CHECK(a.ftsr == 1.0);
  CHECK(a.esp == 1.0);

  std::vector<SynthesisAttemptLog> mixed(98, log_at(1));
  mixed.push_back(log_at(2));
  auto b = synthesis_metrics(mixed);
  CHECK(b.osr == 1.0);
  CHECK(std::abs(b.ftsr - 0.9899) <= 1e-4);
  REQUIRE(b.esp.has_value());
  CHECK(std::abs(*b.esp - 1.0101) <= 1e-4);

  auto c = synthesis_metrics({log_at(std::nullopt), log_at(std::nullopt)});
  CHECK(c.osr == 0.0);
  CHECK(c.ftsr == 0.0);
  CHECK_FALSE(c.esp.has_value());

  try {
    synthesis_metrics({});
    FAIL("expected empty_logs");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::empty_logs);
  }
}

TEST_CASE("intent preference ratio") {
  CHECK(intent_preference_ratio(std::vector<Judgment>(5, Judgment::intent2)) == 1.0);
  std::vector<Judgment> j(79, Judgment::intent2);
  j.insert(j.end(), 15, Judgment::intent1);
  j.insert(j.end(), 6, Judgment::undecided);
  CHECK(intent_preference_ratio(j) == doctest::Approx(0.79));
  CHECK(intent_preference_ratio(std::vector<Judgment>(3, Judgment::undecided)) == 0.0);
  CHECK_THROWS_AS(intent_preference_ratio({}), Error);
  CHECK(judgment_from("intent2") == Judgment::intent2);
  CHECK_FALSE(judgment_from("both").has_value());
}

TEST_CASE("training file export") {
  auto dir = temp_dir("training");
  export_training_file({}, dir / "empty.jsonl");
  CHECK(slurp(dir / "empty.jsonl").empty());
  CHECK(read_training_file(dir / "empty.jsonl").empty());

  std::vector<TrainingExample> ex = {example("b", Provenance::pseudo_expert), example("z", Provenance::expert),
                                     example("a", Provenance::failure_relabel, "g2"),
                                     example("a", Provenance::expert, "first"), example("a", Provenance::expert, "second")};
  export_training_file(ex, dir / "t.jsonl");
  auto text = slurp(dir / "t.jsonl");
  export_training_file(ex, dir / "t2.jsonl");
  CHECK(slurp(dir / "t2.jsonl") == text);

  auto back = read_training_file(dir / "t.jsonl");
  REQUIRE(back.size() == ex.size());
  // provenance order, then task id, then input order
  CHECK(back[0] == ex[3]);
  CHECK(back[1] == ex[4]);
  CHECK(back[2] == ex[1]);
  CHECK(back[3] == ex[2]);
  CHECK(back[4] == ex[0]);
  CHECK(training_to_jsonl(back) == text);

  CHECK(example_key(ex[3]) != example_key(ex[4]));
  CHECK_THROWS_AS(training_from_jsonl("{\"goal\":1}\n"), Error);
  // A regular file in the parent chain makes the path unwritable.
  CHECK_THROWS_AS(export_training_file(ex, dir / "t.jsonl" / "y.jsonl"), Error);
}

TEST_CASE("metrics csv layout") {
  CHECK(metrics_csv_header() ==
        "iteration,overall_score,generalization_score,avg_path_count,traj_count,ngpt,keystep_acc,keystep_prec,"
        "keystep_rec,keystep_f1,synth_osr,synth_ftsr,synth_esp,intent_preference_ratio");
  MetricsRow r;
  r.iteration = 2;
  r.overall_score = 0.5;
  r.avg_path_count = 1.25;
  r.traj_count = 75;
  auto cols = split_csv(metrics_csv_row(r));
  REQUIRE(cols.size() == 14);
  CHECK(cols[0] == "2");
  CHECK(cols[1] == "0.500000");
  CHECK(cols[3] == "1.250000");
  CHECK(cols[4] == "75");
  for (std::size_t i = 5; i < 14; ++i) CHECK(cols[i].empty());
}

TEST_CASE("sampling counts, tags and reproducibility") {
  auto suite = sim::generate_fixture_suite(0);
  auto train = suite.tasks(sim::Split::train);
  std::vector<const sim::SimTask*> two(train.begin(), train.begin() + 2);
  sim::ScriptedPolicy policy(sim::Behavior::improving, 0);
  sim::SamplingConfig cfg;
  auto a = sample_trajectories(policy, two, suite.world, cfg, 11, 1, 1);
  auto b = sample_trajectories(policy, two, suite.world, cfg, 11, 1, 3);
  REQUIRE(a.size() == 10);
  REQUIRE(b.size() == 10);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].trajectory.source == TrajectorySource::sampled);
    CHECK(a[i].trajectory.env_feedback.has_value());
    CHECK(a[i].trajectory.task_id == two[i / 5]->task_id);
    CHECK(io::write_jsonl(a[i].trajectory) == io::write_jsonl(b[i].trajectory));
  }

  sim::SamplingConfig one = cfg;
  one.samples_per_task = 1;
  sim::ScriptedPolicy expert(sim::Behavior::expert_route);
  auto r1 = sample_trajectories(expert, two, suite.world, one, 1, 1, 1);
  auto r2 = sample_trajectories(expert, two, suite.world, one, 2, 1, 1);
  REQUIRE(r1.size() == 2);
  CHECK(io::write_jsonl(r1[0].trajectory) == io::write_jsonl(r2[0].trajectory));
}

TEST_CASE("sge: no partial trajectories leaves graphs unchanged") {
  const auto& w = sim::builtin_world();
  const auto* t = w.find_task("wish-mug");
  std::map<std::string, StrategyGraph> graphs{{t->task_id, graph_from_route(w, *t, 0)}};
  auto expert = sim::replay_route(w, *t, 0);
  auto wander = sim::replay(w, *t, {Action::scroll(Direction::down), Action::stop("")});
  auto out = run_sge_iteration({expert, wander}, graphs, w, Oracles::mock(), {}, 1);
  CHECK(out.graphs.at(t->task_id) == graphs.at(t->task_id));
  CHECK(out.expansions == 0);
  CHECK(out.fully_passed.size() == 1);
  CHECK(out.failed.size() == 1);
  CHECK(out.phase1 == out.phase3);

  auto all_failed = run_sge_iteration({wander, wander}, graphs, w, Oracles::mock(), {}, 1);
  CHECK(all_failed.fully_passed.empty());
  CHECK(all_failed.failed.size() == 2);
}

TEST_CASE("sge: an expansion flips a second trajectory to fully passed") {
  const auto& w = sim::builtin_world();
  // Find a successful alternative route that is only partially passed by the
  // expert graph.
  const sim::SimTask* task = nullptr;
  Trajectory alt;
  StrategyGraph g;
  for (const auto& t : w.tasks) {
    if (t.routes.size() < 2) continue;
    auto cand = graph_from_route(w, t, 0);
    for (std::size_t r = 1; r < t.routes.size() && !task; ++r) {
      auto traj = sim::replay_route(w, t, r);
      if (categorize(cand, traj) == Category::PartiallyPassed) {
        task = &t;
        alt = traj;
        g = cand;
      }
    }
    if (task) break;
  }
  REQUIRE(task);
  // Same steps, but the environment reports failure: never expanded itself.
  Trajectory twin = alt;
  twin.env_feedback = false;

  std::map<std::string, StrategyGraph> graphs{{task->task_id, g}};
  auto out = run_sge_iteration({twin, alt}, graphs, w, Oracles::mock(), {}, 1);
  REQUIRE(out.phase1.size() == 2);
  CHECK(out.phase1[0] == oracle_categorize(g, twin));
  CHECK(out.phase1[0] == Category::PartiallyPassed);
  CHECK(out.expansions == 1);
  const auto& g2 = out.graphs.at(task->task_id);
  CHECK(path_count(g2) == path_count(g) + 1);
  CHECK(out.phase3[0] == oracle_categorize(g2, twin));
  CHECK(out.phase3[0] == Category::FullyPassed);
  CHECK(out.phase3[1] == Category::FullyPassed);
  CHECK(out.fully_passed.size() == 2);
  CHECK(out.attempt_logs.size() > 0);
}

TEST_CASE("sge: uncategorizable trajectories count as failed") {
  const auto& w = sim::builtin_world();
  auto orphan = make_traj("no-graph-task", "g", {{ui({}), Action::stop("")}}, TrajectorySource::sampled, true);
  auto out = run_sge_iteration({orphan}, {}, w, Oracles::mock(), {}, 1);
  CHECK(out.failed.size() == 1);
  CHECK_FALSE(out.phase1[0].has_value());
  CHECK_FALSE(out.notes.empty());
}

TEST_CASE("pipeline config validation") {
  PipelineConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  cfg.finetune_hook = "true";
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg.output_dir = "x";
  CHECK_NOTHROW(cfg.validate());
  cfg.workers = 0;
  CHECK_THROWS_AS(cfg.validate(), Error);
}

TEST_CASE("dry-run iteration writes the checkpoint and advances state") {
  auto suite = sim::generate_fixture_suite(0);
  auto dir = temp_dir("pipeline_dry");
  PipelineConfig cfg;
  cfg.output_dir = dir;
  auto oracles = Oracles::mock();
  sim::ScriptedPolicy policy(sim::Behavior::improving, 0);
  auto s0 = init_state(suite, policy, oracles, cfg);
  CHECK(s0.pool.size() == suite.tasks(sim::Split::train).size());
  CHECK(s0.graphs.size() == suite.expert_demos.size());
  CHECK(s0.training.size() == suite.expert_demos.size());
  for (const auto& demo : suite.expert_demos)
    CHECK(categorize(s0.graphs.at(demo.task_id), demo) == Category::FullyPassed);

  IterationReport report;
  auto s1 = run_iteration(s0, policy, suite, oracles, cfg, &report);
  CHECK(s1.iteration == 1);
  CHECK(report.sampled.size() == 5 * s0.pool.size());
  CHECK(s1.traj_count >= static_cast<long long>(report.sampled.size()));
  CHECK(s1.pool.size() >= s0.pool.size());
  CHECK(s1.training.size() >= s0.training.size());
  for (const auto& [task, g] : s0.graphs) CHECK(path_count(s1.graphs.at(task)) >= path_count(g));
  REQUIRE(s1.metrics.size() == 1);
  const auto& row = s1.metrics[0];
  CHECK(row.iteration == 1);
  CHECK(row.overall_score >= 0.0);
  CHECK(row.overall_score <= 1.0);
  CHECK(row.generalization_score >= 0.0);
  CHECK(row.generalization_score <= 1.0);
  CHECK(row.avg_path_count == doctest::Approx(average_path_count(s1.graphs)));
  REQUIRE(row.synthesis.has_value());
  CHECK(row.synthesis->osr == 1.0);
  REQUIRE(row.keystep.has_value());

  // Every sampled trajectory lands in exactly one phase-3 bucket.
  CHECK(report.sge.fully_passed.size() + report.sge.partially_passed.size() + report.sge.failed.size() ==
        report.sampled.size());

  auto it = dir / "iter_1";
  for (auto f : {"trajectories.jsonl", "eval.jsonl", "categories.tsv", "training.jsonl", "drops.jsonl", "attempts.jsonl",
                 "pool.json", "log.txt"})
    CHECK_MESSAGE(fs::exists(it / f), f);
  CHECK(fs::is_directory(it / "graphs"));
  CHECK(read_training_file(it / "training.jsonl").size() == s1.training.size());
  auto csv = lines_of(slurp(dir / "metrics.csv"));
  REQUIRE(csv.size() == 2);
  CHECK(csv[0] == metrics_csv_header());

  auto s2 = run_iteration(s1, policy, suite, oracles, cfg);
  CHECK(lines_of(slurp(dir / "metrics.csv")).size() == 3);
  CHECK(s2.training.size() >= s1.training.size());
  CHECK(s2.pool.size() >= s1.pool.size());
}

TEST_CASE("fine-tune hook substitution and failure") {
  auto suite = sim::generate_fixture_suite(0);
  auto oracles = Oracles::mock();

  auto ok_dir = temp_dir("pipeline_hook_ok");
  PipelineConfig ok;
  ok.output_dir = ok_dir;
  ok.finetune_hook = "test -s {training_file} && echo {iteration} > " + (ok_dir / "hook_ran").string();
  sim::ScriptedPolicy p1(sim::Behavior::improving, 0);
  auto s = init_state(suite, p1, oracles, ok);
  run_iteration(s, p1, suite, oracles, ok);
  CHECK(slurp(ok_dir / "hook_ran") == "1\n");

  auto bad_dir = temp_dir("pipeline_hook_bad");
  PipelineConfig bad;
  bad.output_dir = bad_dir;
  bad.finetune_hook = "exit 4";
  sim::ScriptedPolicy p2(sim::Behavior::improving, 0);
  auto s2 = init_state(suite, p2, oracles, bad);
  try {
    run_iteration(s2, p2, suite, oracles, bad);
    FAIL("expected hook_failed");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::hook_failed);
  }
  CHECK(fs::exists(bad_dir / "iter_1" / "training.jsonl"));
}

TEST_CASE("empty pool is an error") {
  auto suite = sim::generate_fixture_suite(0);
  sim::ScriptedPolicy p(sim::Behavior::improving, 0);
  IterationState empty;
  try {
    run_iteration(empty, p, suite, Oracles::mock(), {});
    FAIL("expected empty_pool");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::empty_pool);
  }
}

TEST_CASE("key-step confusion against ground truth") {
  const auto& w = sim::builtin_world();
  const auto* t = w.find_task("wish-mug");
  auto traj = io::load_trajectory(data_path("shop-add-wishlist.jsonl"));
  auto sel = mock_key_step_heuristic(describe_trajectory(traj), traj.goal);
  auto c = keystep_confusion_for(traj, sel, *t);
  CHECK(c.tp + c.fp + c.fn + c.tn == traj.steps.size());
  // Selected: mug link and wish-list link, both flagged key on the browse route.
  CHECK(c.tp == 2);
  CHECK(c.fp == 0);
}
