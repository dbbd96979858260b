#include <doctest.h>

#include <json.hpp>

#include "selftrain/error.hpp"
#include "selftrain/graph_io.hpp"
#include "selftrain/strategy_graph.hpp"
#include "test_support.hpp"

using namespace selftrain;
using namespace testsupport;

namespace {

LabelFunction click(const std::string& text) { return lf({{"validate_click_action", {text}}}); }

std::vector<std::vector<VertexId>> ids_of(const std::vector<Path>& ps) {
  std::vector<std::vector<VertexId>> out;
  for (const auto& p : ps) out.push_back(p.vertex_ids);
  return out;
}

Trajectory clicks(const std::vector<std::string>& texts) {
  std::vector<std::pair<UiState, Action>> steps;
  int i = 0;
  for (const auto& t : texts) {
    auto id = std::to_string(++i);
    steps.push_back({ui({el(id, "A", t)}), Action::click(id)});
  }
  return make_traj("t", "g", steps);
}

// Literal strict-order reading: every vertex passes and completion steps rise.
bool strict_full_oracle(const StrategyGraph& g, const Trajectory& traj) {
  for (const auto& p : oracle_paths(g)) {
    int last = 0;
    bool ok = true;
    for (auto v : p) {
      auto r = evaluate(g.label(v), traj);
      if (!r.passed || r.completion_step().value_or(0) <= last) {
        ok = false;
        break;
      }
      last = *r.completion_step();
    }
    if (ok) return true;
  }
  return false;
}

}  // namespace

TEST_CASE("init_linear builds a chain") {
  auto g = init_linear({click("a"), click("b"), click("c")}, "task");
  CHECK(g.vertex_count() == 3);
  CHECK(g.edge_count() == 2);
  CHECK(path_count(g) == 1);
  auto ps = enumerate_paths(g);
  REQUIRE(ps.size() == 1);
  CHECK(ps[0].size() == 3);
  CHECK(g.label(ps[0].vertex_ids[0]) == click("a"));
  CHECK(g.label(ps[0].vertex_ids[2]) == click("c"));

  auto one = init_linear({click("a")}, "task");
  CHECK(one.vertex_count() == 1);
  CHECK(one.edge_count() == 0);
  CHECK(path_count(one) == 1);

  auto dup = init_linear({click("a"), click("a"), click("a")}, "task");
  CHECK(dup.vertex_count() == 3);
  REQUIRE(enumerate_paths(dup).size() == 1);
  CHECK(enumerate_paths(dup)[0].size() == 3);

  try {
    init_linear({}, "task");
    FAIL("expected empty_label_set");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::empty_label_set);
  }
}

TEST_CASE("enumerate and count on hand-built shapes") {
  StrategyGraph chain("t");
  for (int i = 0; i < 4; ++i) chain.add_vertex(click(std::to_string(i)));
  for (int i = 1; i < 4; ++i) chain.add_edge(i, i + 1);
  CHECK(ids_of(enumerate_paths(chain)) == std::vector<std::vector<VertexId>>{{1, 2, 3, 4}});
  CHECK(path_count(chain) == 1);

  StrategyGraph diamond("t");
  for (auto s : {"A", "B", "C", "D"}) diamond.add_vertex(click(s));
  diamond.add_edge(1, 2);
  diamond.add_edge(1, 3);
  diamond.add_edge(2, 4);
  diamond.add_edge(3, 4);
  CHECK(ids_of(enumerate_paths(diamond)) == std::vector<std::vector<VertexId>>{{1, 2, 4}, {1, 3, 4}});
  CHECK(path_count(diamond) == 2);

  StrategyGraph two("t");
  for (auto s : {"a", "b", "c", "d"}) two.add_vertex(click(s));
  two.add_edge(1, 2);
  two.add_edge(3, 4);
  CHECK(ids_of(enumerate_paths(two)) == std::vector<std::vector<VertexId>>{{1, 2}, {3, 4}});

  StrategyGraph empty("t");
  CHECK(path_count(empty) == 0);
  CHECK(enumerate_paths(empty).empty());
  CHECK_THROWS_AS(categorize(empty, clicks({"a"})), Error);
}

TEST_CASE("edges need existing endpoints and cycles are detected") {
  StrategyGraph g("t");
  g.add_vertex(click("a"));
  g.add_vertex(click("b"));
  CHECK_THROWS_AS(g.add_edge(1, 7), Error);
  g.add_edge(1, 2);
  g.add_edge(2, 1);
  CHECK_FALSE(g.is_acyclic());
  try {
    (void)g.topological_order();
    FAIL("expected cycle_detected");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::cycle_detected);
  }
}

TEST_CASE("path counts agree with enumeration up to 12 vertices") {
  Gen gen(5);
  for (int i = 0; i < 300; ++i) {
    auto g = gen.dag(12, 1);
    auto ps = enumerate_paths(g);
    REQUIRE(path_count(g) == ps.size());
    CHECK(ids_of(ps).size() == oracle_paths(g).size());
    CHECK(std::is_sorted(ps.begin(), ps.end()));
  }
}

TEST_CASE("score and categorize on a single path") {
  auto g = init_linear({click("a"), click("b"), click("c")}, "t");
  auto p = enumerate_paths(g)[0];
  CHECK(score_path(p, g, clicks({"a", "b", "c"})) == 3);
  CHECK(score_path(p, g, clicks({"x"})) == 0);
  CHECK(categorize(g, clicks({"c", "b", "a"})) == Category::FullyPassed);
  CHECK(categorize(g, clicks({"x"})) == Category::Failed);

  auto two = init_linear({click("a"), click("b")}, "t");
  CHECK(categorize(two, clicks({"b"})) == Category::PartiallyPassed);
}

TEST_CASE("strict ordered scoring") {
  auto g = init_linear({click("a"), click("b")}, "t");
  auto p = enumerate_paths(g)[0];
  ScoringOptions strict{true};
  CHECK(categorize(g, clicks({"b", "a"})) == Category::FullyPassed);
  CHECK(categorize(g, clicks({"b", "a"}), strict) == Category::PartiallyPassed);
  CHECK(score_path(p, g, clicks({"b", "a"}), strict) == 1);
  CHECK(categorize(g, clicks({"a", "b"}), strict) == Category::FullyPassed);
  // Two guards completing at the same step do not count as ordered.
  auto same = init_linear({click("a"), lf({{"validate_click_or_hover_action", {"click", "A", "a"}}})}, "t");
  CHECK(categorize(same, clicks({"a"}), strict) == Category::PartiallyPassed);

  Gen gen(77);
  for (int i = 0; i < 300; ++i) {
    auto rg = gen.dag(6, 1);
    auto t = gen.trajectory(6);
    bool full = categorize(rg, t, strict) == Category::FullyPassed;
    REQUIRE(full == strict_full_oracle(rg, t));
    if (full) CHECK(categorize(rg, t) == Category::FullyPassed);
  }
}

TEST_CASE("categorize agrees with the brute-force rule") {
  Gen gen(31337);
  int counts[3] = {0, 0, 0};
  for (int i = 0; i < 1000; ++i) {
    auto g = gen.dag(8);
    auto t = gen.trajectory(6);
    auto want = oracle_categorize(g, t);
    REQUIRE(categorize(g, t) == want);
    ++counts[static_cast<int>(want)];
    for (const auto& p : enumerate_paths(g)) CHECK(score_path(p, g, t) == oracle_score(p.vertex_ids, g, t));
  }
  CHECK(counts[0] > 0);
  CHECK(counts[1] > 0);
  CHECK(counts[2] > 0);
}

TEST_CASE("each vertex is evaluated once per trajectory") {
  int calls = 0;
  ApiRegistry reg = ApiRegistry::builtin();
  reg.add({"count_me", {{"x", ArgKind::text, {}}}, [&](std::span<const std::string>, const Trajectory&) {
             ++calls;
             return std::optional<int>{};
           }, "test"});
  StrategyGraph g("t");
  for (auto s : {"1", "2", "3", "4"}) g.add_vertex(lf({{"count_me", {s}}}));
  g.add_edge(1, 2);
  g.add_edge(1, 3);
  g.add_edge(2, 4);
  g.add_edge(3, 4);
  CHECK(categorize(g, clicks({"a"}), {}, reg) == Category::Failed);
  CHECK(calls == 4);
}

TEST_CASE("runtime errors name the vertex") {
  StrategyGraph g = init_linear({click("a"), click("b")}, "t");
  auto bad = make_traj("t", "g", {{ui({el("1", "A", "a")}), Action::click("9")}});
  try {
    categorize(g, bad);
    FAIL("expected PredicateRuntimeError");
  } catch (const PredicateRuntimeError& e) {
    CHECK(e.vertex_id.has_value());
  }
}

TEST_CASE("a disjoint copy never demotes a fully passed trajectory") {
  Gen gen(9);
  for (int i = 0; i < 200; ++i) {
    auto g = gen.dag(6);
    auto t = gen.trajectory(6);
    if (categorize(g, t) != Category::FullyPassed) continue;
    auto h = g;
    h.add_vertex(g.label(g.vertices().begin()->first));
    CHECK(categorize(h, t) == Category::FullyPassed);
  }
}

TEST_CASE("expand examples") {
  auto g = init_linear({click("a"), click("b"), click("c")}, "t");

  CHECK(expand(g, {click("a"), click("b"), click("c")}, true) == g);
  CHECK(expand(g, {click("x"), click("y")}, false) == g);
  CHECK_THROWS_AS(expand(g, {}, true), Error);

  auto d = expand(g, {click("x"), click("y")}, true);
  CHECK(path_count(d) == path_count(g) + 1);
  CHECK(enumerate_paths(d).size() == 2);
  CHECK(has_strategy(d, {click("x"), click("y")}));
  for (const auto& [id, f] : d.vertices())
    if (!g.contains(id)) CHECK(f.origin == LabelOrigin::expansion);

  // Shared prefix: the new strategy branches off the existing source.
  auto b = expand(g, {click("a"), click("z")}, true);
  CHECK(b.vertex_count() == 4);
  CHECK(path_count(b) == 2);
  CHECK(has_strategy(b, {click("a"), click("z")}));
  CHECK(has_strategy(b, {click("a"), click("b"), click("c")}));

  // Reversing shared vertices would close a cycle; duplicates are used.
  auto two = init_linear({click("a"), click("b")}, "t");
  auto r = expand(two, {click("b"), click("a")}, true);
  CHECK(r.is_acyclic());
  CHECK(oracle_acyclic(r));
  CHECK(r.vertex_count() > two.vertex_count());
  CHECK(path_count(r) == 2);
  CHECK(has_strategy(r, {click("b"), click("a")}));
  CHECK(has_strategy(r, {click("a"), click("b")}));
}

TEST_CASE("random expand sequences keep the invariants") {
  Gen gen(4242);
  std::vector<LabelFunction> pool;
  for (auto s : {"a", "b", "c", "d", "e"}) pool.push_back(click(s));
  for (int run = 0; run < 100; ++run) {
    std::vector<LabelFunction> first;
    for (int k = gen.uniform(1, 3); k > 0; --k) first.push_back(gen.pick(pool));
    auto g = init_linear(first, "t");
    for (int step = 0; step < 5; ++step) {
      std::vector<LabelFunction> path;
      for (int k = gen.uniform(1, 4); k > 0; --k) path.push_back(gen.pick(pool));
      auto before = path_count(g);
      auto next = expand(g, path, true);
      REQUIRE(oracle_acyclic(next));
      REQUIRE(path_count(next) >= before);
      CHECK(has_strategy(next, path));
      CHECK(expand(next, path, true) == next);
      if (next.vertex_count() <= 12) CHECK(path_count(next) == oracle_paths(next).size());
      g = next;
    }
  }
}

TEST_CASE("json export format and round trip") {
  auto one = init_linear({click("a")}, "shop/1", 2);
  auto j = nlohmann::json::parse(export_graph(one, GraphFormat::json));
  CHECK(j["task_id"] == "shop/1");
  CHECK(j["iteration_created"] == 2);
  REQUIRE(j["vertices"].size() == 1);
  CHECK(j["vertices"][0]["id"] == 1);
  CHECK(j["vertices"][0]["label_fn"] == "fn verify(trajectory):\n  require validate_click_action(\"a\")\n");
  CHECK(j["edges"].empty());

  Gen gen(12);
  for (int i = 0; i < 200; ++i) {
    auto g = gen.dag(8, 3);
    auto text = export_graph(g, GraphFormat::json);
    auto back = import_graph(text);
    REQUIRE(back == g);
    CHECK(export_graph(back, GraphFormat::json) == text);
  }

  CHECK_THROWS_AS(import_graph("{\"task_id\":\"t\",\"vertices\":[],\"edges\":[[1,2]]}"), Error);
  CHECK_THROWS_AS(import_graph("not json"), Error);
}

TEST_CASE("graph files") {
  auto dir = temp_dir("graph_io");
  auto g = init_linear({click("a"), click("b")}, "task/with/slashes");
  auto path = dir / graph_file_name(g.task_id());
  CHECK(path.filename().string().find('/') == std::string::npos);
  CHECK(path.filename().string().ends_with(".graph.json"));
  save_graph(path, g);
  CHECK(load_graph(path) == g);
  CHECK_THROWS_AS(load_graph(dir / "missing.graph.json"), Error);
}

TEST_CASE("dot export is well formed") {
  Gen gen(3);
  std::string why;
  for (int i = 0; i < 100; ++i) {
    auto g = gen.dag(8, 2);
    auto dot = export_graph(g, GraphFormat::dot);
    REQUIRE_MESSAGE(dot_grammar_ok(dot, &why), why << "\n" << dot);
    for (const auto& [a, b] : g.edges())
      CHECK(dot.find(std::to_string(a)) != std::string::npos);
  }
  auto quoted = init_linear({click("say \"hi\"\\")}, "t");
  CHECK(dot_grammar_ok(export_graph(quoted, GraphFormat::dot), &why));
}
