#include <doctest.h>

#include <filesystem>

#include "selftrain/api_registry.hpp"
#include "selftrain/code_mapping.hpp"
#include "selftrain/error.hpp"
#include "selftrain/evaluator.hpp"
#include "selftrain/sim_env.hpp"
#include "test_support.hpp"

using namespace selftrain;
using namespace testsupport;

namespace {

Errc code_of(const std::string& text) {
  try {
    parse_label_function(text);
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error for: " << text);
  return Errc::io_error;
}

}  // namespace

TEST_CASE("single guard parses") {
  auto f = parse_label_function("fn verify(trajectory):\n  require validate_stop_action(\"4200 calories\")\n");
  REQUIRE(f.guards.size() == 1);
  CHECK(f.guards[0] == PredicateCall{"validate_stop_action", {"4200 calories"}});
}

TEST_CASE("canonical print format") {
  LabelFunction f = lf({{"validate_click_or_hover_action", {"click", "A", "Add to Wish List"}},
                        {"validate_stop_action", {"say \"hi\"\\\n"}}});
  CHECK(print_label_function(f) ==
        "fn verify(trajectory):\n"
        "  require validate_click_or_hover_action(\"click\",\"A\",\"Add to Wish List\")\n"
        "  require validate_stop_action(\"say \\\"hi\\\"\\\\\\n\")\n");
}

TEST_CASE("bare enum tokens, comments and free spacing") {
  auto f = parse_label_function(
      "# leading comment\n"
      "fn verify(trajectory):\n"
      "\n"
      "  # key step\n"
      "  require validate_scroll_action ( down )  \n"
      "  require validate_click_or_hover_action(hover ,\"\", \"Menu\")");
  REQUIRE(f.guards.size() == 2);
  CHECK(f.guards[0].args == std::vector<std::string>{"down"});
  CHECK(f.guards[1].args == std::vector<std::string>{"hover", "", "Menu"});
}

TEST_CASE("print then parse is the identity on random label functions") {
  Gen g(101);
  for (int i = 0; i < 500; ++i) {
    LabelFunction f = awkward_lf(g);
    std::string text = print_label_function(f);
    LabelFunction back = parse_label_function(text);
    REQUIRE_MESSAGE(back == f, text);
    CHECK(print_label_function(back) == text);
  }
}

TEST_CASE("round-trip corpus matches the canonical prints") {
  auto dir = data_path("lf_corpus");
  int cases = 0;
  for (int i = 0; i < 50; ++i) {
    char name[8];
    std::snprintf(name, sizeof name, "%02d", i);
    auto src = slurp(dir / (std::string(name) + ".lf"));
    auto want = slurp(dir / (std::string(name) + ".canonical"));
    REQUIRE(!want.empty());
    auto f = parse_label_function(src);
    CHECK_MESSAGE(canonical_key(f) == want, name);
    // Canonical text is a fixed point.
    CHECK(canonical_key(parse_label_function(want)) == want);
    ++cases;
  }
  CHECK(cases == 50);
}

TEST_CASE("canonicalize normalizes and trims arguments only") {
  LabelFunction f = lf({{"validate_click_action", {"  Cafe\xCC\x81 \n"}}, {"validate_stop_action", {"b"}}});
  f.origin = LabelOrigin::expansion;
  auto c = canonicalize(f);
  CHECK(c.guards[0].args[0] == "Caf\xC3\xA9");
  CHECK(c.guards[1].args[0] == "b");
  CHECK(c.origin == LabelOrigin::expansion);
  CHECK(canonical_key(f) == canonical_key(c));
}

TEST_CASE("structural errors") {
  CHECK(code_of("fn verify(trajectory):\n") == Errc::empty_body);
  CHECK(code_of("fn verify(trajectory):\n  # only a comment\n\n") == Errc::empty_body);
  CHECK(code_of("fn verify(trajectory):\n  require validate_teleport(\"x\")\n") == Errc::unknown_api);
  CHECK(code_of("fn verify(trajectory):\n  require validate_click_action(\"a\",\"b\")\n") == Errc::arity_mismatch);
  CHECK(code_of("fn verify(trajectory):\n  require validate_type_action(\"a\")\n") == Errc::arity_mismatch);
  CHECK(code_of("fn verify(trajectory):\n  require validate_scroll_action(\"sideways\")\n") == Errc::bad_argument);
  CHECK(code_of("fn verify(trajectory):\n  require validate_click_or_hover_action(\"drag\",\"A\",\"x\")\n") ==
        Errc::bad_argument);
}

TEST_CASE("syntax errors carry a position") {
  CHECK(code_of("def verify(trajectory):\n  require validate_stop_action(\"x\")\n") == Errc::parse_error);
  CHECK(code_of("fn verify(trajectory):\n   require validate_stop_action(\"x\")\n") == Errc::parse_error);
  CHECK(code_of("fn verify(trajectory):\n require validate_stop_action(\"x\")\n") == Errc::parse_error);
  CHECK(code_of("fn verify(trajectory):\n  require validate_stop_action(\"x\"\n") == Errc::parse_error);
  CHECK(code_of("fn verify(trajectory):\n  require validate_stop_action(\"x)\n") == Errc::parse_error);
  CHECK(code_of("fn verify(trajectory):\n  require validate_stop_action(\"\\q\")\n") == Errc::parse_error);
  CHECK(code_of("fn verify(trajectory):\n  require validate_stop_action(\"x\") junk\n") == Errc::parse_error);
  CHECK(code_of("") == Errc::parse_error);
  try {
    parse_label_function("fn verify(trajectory):\n  require validate_stop_action(\"x\",)\n");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line() == 2);
    CHECK(e.column() > 1);
  }
}

TEST_CASE("stop answer guard passes on a matching stop") {
  auto f = parse_label_function("fn verify(trajectory):\n  require validate_stop_action(\"4200 calories\")\n");
  auto t = make_traj("t", "How many calories are in this item per container?",
                     {{ui({}), Action::scroll(Direction::down)}, {ui({}), Action::stop("4200 calories")}});
  auto r = evaluate(f, t);
  CHECK(r.passed);
  CHECK(r.completion_step() == 2);
  t.steps[1].action.answer = "4100 calories";
  CHECK_FALSE(evaluate(f, t).passed);
}

TEST_CASE("earliest match per guard and first failure index") {
  auto t = make_traj("t", "g",
                     {{ui({el("1", "A", "Pro Expense")}), Action::click("1")},
                      {ui({el("2", "DIV", "Pro Expense")}), Action::click("2")},
                      {ui({}), Action::stop("done")}});
  CHECK(evaluate_predicate({"validate_click_action", {"Pro Expense"}}, t) == 1);
  CHECK(evaluate_predicate({"validate_click_or_hover_action", {"click", "DIV", "Pro Expense"}}, t) == 2);
  CHECK(evaluate_predicate({"validate_click_or_hover_action", {"click", "", "Pro Expense"}}, t) == 1);
  CHECK_FALSE(evaluate_predicate({"validate_click_or_hover_action", {"hover", "", "Pro Expense"}}, t));
  // Matching ignores surrounding whitespace and Unicode composition.
  CHECK(evaluate_predicate({"validate_click_action", {" Pro Expense\n"}}, t) == 1);

  auto f = lf({{"validate_stop_action", {"done"}}, {"validate_click_action", {"nope"}},
               {"validate_click_action", {"Pro Expense"}}});
  auto r = evaluate(f, t);
  CHECK_FALSE(r.passed);
  CHECK(r.first_fail_index == 1);
  REQUIRE(r.match_steps.size() == 2);
  CHECK(r.match_steps[0] == 3);
  CHECK_FALSE(r.match_steps[1].has_value());

  // Guards are independent: order in the trajectory does not matter.
  auto g2 = lf({{"validate_stop_action", {"done"}}, {"validate_click_action", {"Pro Expense"}}});
  auto r2 = evaluate(g2, t);
  CHECK(r2.passed);
  CHECK(r2.completion_step() == 3);
}

TEST_CASE("missing referent raises a runtime error with the guard index") {
  auto t = make_traj("t", "g", {{ui({}), Action::scroll(Direction::down)}, {ui({el("1", "A", "x")}), Action::click("9")}});
  auto f = lf({{"validate_scroll_action", {"down"}}, {"validate_click_action", {"x"}}});
  try {
    evaluate(f, t);
    FAIL("expected PredicateRuntimeError");
  } catch (const PredicateRuntimeError& e) {
    CHECK(e.guard_index == std::optional<std::size_t>{1});
  }
}

TEST_CASE("evaluation agrees with the oracle on random instances") {
  Gen g(2024);
  int passed = 0;
  for (int i = 0; i < 1000; ++i) {
    auto t = g.trajectory(6);
    auto f = g.label_function(3);
    bool want = oracle_passes(f, t);
    auto got = evaluate(f, t);
    REQUIRE_MESSAGE(got.passed == want, print_label_function(f));
    for (std::size_t k = 0; k < got.match_steps.size(); ++k)
      CHECK(got.match_steps[k] == oracle_predicate(f.guards[k], t));
    passed += want;
  }
  // Both outcomes occur, so the comparison is not vacuous.
  CHECK(passed > 10);
  CHECK(passed < 990);
}

TEST_CASE("registry describes every builtin") {
  auto names = ApiRegistry::builtin().names();
  CHECK(names.size() == 8);
  auto d = ApiRegistry::builtin().describe();
  for (const auto& n : names) CHECK(d.find(n) != std::string::npos);
  CHECK_THROWS_AS(ApiRegistry::builtin().check_call({"nope", {}}), Error);
}

// ---------------------------------------------------------------------------
TEST_CASE("reference generated label functions map, parse and pass") {
  const auto& cases = case_studies();
  REQUIRE(cases.size() == 4);
  for (const auto& c : cases) {
    CAPTURE(c.name);
    auto text = map_generated_code(c.python);
    CHECK(text == c.dsl);
    auto f = parse_label_function(text);
    CHECK(print_label_function(f) == text);
    if (c.trajectory.env_feedback) CHECK(*c.trajectory.env_feedback);
    CHECK(evaluate(f, c.trajectory).passed);
  }
  // Where the matching step falls in the hand-built traces.
  CHECK(evaluate(parse_label_function(cases[2].dsl), cases[2].trajectory).completion_step() == 2);
  CHECK(evaluate(parse_label_function(cases[3].dsl), cases[3].trajectory).completion_step() == 1);
}

TEST_CASE("code mapping rules") {
  // DSL text passes through untouched.
  std::string dsl = "fn verify(trajectory):\n  require validate_stop_action(\"x\")\n";
  CHECK(map_generated_code(dsl) == dsl);
  const auto& named = case_studies()[3].python;
  CHECK(map_generated_code("```python\n" + named + "```\n") == map_generated_code(named));
  // Double quotes, escapes and a keyword on a later argument.
  CHECK(map_generated_code("def verify_function(trajectory):\n"
                           "    if not validate_stop_action(trajectory, answer=\"It\\'s \\\"ok\\\"\"):\n"
                           "        return False\n") ==
        "fn verify(trajectory):\n  require validate_stop_action(\"It's \\\"ok\\\"\")\n");
  // One-line guard bodies.
  CHECK(map_generated_code("if not validate_open_app(trajectory, 'Clock'): return False\n") ==
        "fn verify(trajectory):\n  require validate_open_app(\"Clock\")\n");

  auto line_of = [](const std::string& code) {
    try {
      map_generated_code(code);
    } catch (const ParseError& e) {
      return e.line();
    }
    return -1;
  };
  CHECK(line_of("def verify_function(trajectory):\n    x = 1\n") == 2);
  CHECK(line_of("def verify_function(trajectory):\n"
                "    if not validate_stop_action(trajectory, 'a') and validate_open_app(trajectory, 'b'):\n") == 2);
  CHECK(line_of("    if not validate_stop_action(traj, 'a'):\n") == 1);
  CHECK(line_of("    if not validate_stop_action(trajectory, 'a'\n") == 1);
  CHECK(line_of("def verify_function(trajectory):\n    return True\n") == 1);
}

TEST_CASE("wishlist predicate agrees with the simulated wishlist") {
  const auto& w = sim::builtin_world();
  std::set<std::string> items;
  for (const auto& t : w.tasks)
    if (t.success.kind == sim::Condition::Kind::list_contains) items.insert(t.success.value);
  REQUIRE(items.size() == 6);

  int checked = 0;
  auto compare = [&](const Trajectory& traj, const sim::WorldState& end) {
    auto it = end.lists.find("wishlist");
    for (const auto& item : items) {
      bool in_list = it != end.lists.end() &&
                     std::find(it->second.begin(), it->second.end(), item) != it->second.end();
      bool pred = evaluate_predicate({"validate_item_in_wishlist", {item}}, traj).has_value();
      CHECK_MESSAGE(pred == in_list, traj.task_id << " / " << item);
      ++checked;
    }
  };
  for (const auto& task : w.tasks)
    for (const auto& route : task.routes) {
      std::vector<Action> acts;
      for (const auto& s : route.steps) acts.push_back(s.action);
      sim::WorldState end;
      auto traj = sim::replay(w, task, acts, TrajectorySource::sampled, &end);
      compare(traj, end);
    }
  CHECK(checked > 0);
}
