#include <doctest.h>

#include "selftrain/description.hpp"
#include "selftrain/error.hpp"
#include "selftrain/trajectory_io.hpp"
#include "test_support.hpp"

using namespace selftrain;
using namespace testsupport;

TEST_CASE("click on a link uses the link template") {
  Step s{1, ui({el("42", "A", "Add to Wish List")}), Action::click("42")};
  CHECK(extract_description(s).text == "Click the link 'Add to Wish List'");
  CHECK(extract_description(s).step_t == 1);
}

TEST_CASE("stop with an empty answer keeps the empty quotes") {
  Step s{1, ui({}), Action::stop("")};
  CHECK(extract_description(s).text == "Stop the task with answer: ''");
}

TEST_CASE("type into a text field names the field") {
  Step s{1, ui({el("7", "INPUT", "Search apps, web and more")}), Action::type("7", "Clock")};
  CHECK(extract_description(s).text == "Type text 'Clock' into the target text field 'Search apps, web and more'");
}

TEST_CASE("unknown tags fall back to the generic element word") {
  Step s{1, ui({el("3", "android.widget.TextView", "Pro Expense")}), Action::click("3")};
  CHECK(extract_description(s).text == "Click on a UI element 'Pro Expense'");
  Step h{1, ui({el("3", "DIV", "Menu")}), Action::hover("3")};
  CHECK(extract_description(h).text == "Hover over a UI element 'Menu'");
  Step b{1, ui({el("3", "BUTTON", "Go")}), Action::hover("3")};
  CHECK(extract_description(b).text == "Hover over the button 'Go'");
}

TEST_CASE("every action kind has a template") {
  UiState st = ui({el("1", "BUTTON", "OK")});
  CHECK(extract_description({1, st, Action::click("1")}).text == "Click the button 'OK'");
  CHECK(extract_description({1, st, Action::scroll(Direction::down)}).text == "Scroll down");
  CHECK(extract_description({1, st, Action::open_app("Clock")}).text == "Open the app 'Clock'");
  CHECK(extract_description({1, st, Action::navigate("http://x/y")}).text == "Navigate to 'http://x/y'");
  for (auto kind : kAllActionKinds) {
    bool ok = true;
    CHECK_NOTHROW((void)TemplateTable::builtin().pattern(kind, true));
    CHECK(ok);
  }
}

TEST_CASE("element text is rendered verbatim") {
  Step s{1, ui({el("1", "A", "  Mixed CASE  ")}), Action::click("1")};
  CHECK(extract_description(s).text == "Click the link '  Mixed CASE  '");
}

TEST_CASE("unresolved target and malformed action are reported") {
  Step missing{1, ui({el("1", "A", "x")}), Action::click("2")};
  CHECK_THROWS_AS(extract_description(missing), Error);
  try {
    extract_description(missing);
  } catch (const Error& e) {
    CHECK(e.code() == Errc::unresolved_target);
  }
  Step bad{1, ui({el("1", "A", "x")}), Action{}};
  bad.action.kind = ActionKind::click;  // no target
  try {
    extract_description(bad);
    FAIL("expected malformed_action");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::malformed_action);
  }
}

TEST_CASE("describe_trajectory preserves length and order") {
  auto t = make_traj("t", "g",
                     {{ui({el("1", "A", "a")}), Action::click("1")},
                      {ui({}), Action::scroll(Direction::up)},
                      {ui({}), Action::stop("done")}});
  auto d = describe_trajectory(t);
  REQUIRE(d.size() == 3);
  CHECK(d[0].step_t == 1);
  CHECK(d[1].step_t == 2);
  CHECK(d[2].step_t == 3);
  CHECK(d[2].text == "Stop the task with answer: 'done'");
  CHECK(describe_trajectory(make_traj("t", "g", {})).empty());
}

TEST_CASE("describe_trajectory errors name the step") {
  auto t = make_traj("t", "g", {{ui({}), Action::scroll(Direction::up)}, {ui({}), Action::click("nope")}});
  try {
    describe_trajectory(t);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("step 2") != std::string::npos);
  }
}

TEST_CASE("fixture trajectory matches the golden descriptions") {
  auto traj = io::load_trajectory(data_path("shop-add-wishlist.jsonl"));
  auto golden = slurp(data_path("shop-add-wishlist.descriptions.txt"));
  std::string got;
  for (const auto& d : describe_trajectory(traj)) got += d.text + "\n";
  CHECK(got == golden);
}

TEST_CASE("validate_trajectory rules") {
  auto ok = io::load_trajectory(data_path("shop-add-wishlist.jsonl"));
  CHECK(validate_trajectory(ok).empty());

  std::vector<std::pair<UiState, Action>> steps;
  for (int i = 0; i < 5; ++i) steps.push_back({ui({}), Action::scroll(Direction::down)});
  steps[1].second = Action::stop("early");
  auto v = validate_trajectory(make_traj("t", "g", steps));
  REQUIRE(v.size() == 1);
  CHECK(v[0].rule == "stop-not-final");
  CHECK(v[0].step == 2);

  auto dup = make_traj("t", "g", {{ui({el("1", "A", "a"), el("1", "A", "b")}), Action::click("1")}});
  auto dv = validate_trajectory(dup);
  REQUIRE(dv.size() == 1);
  CHECK(dv[0].rule == "dup-element-id");

  auto empty_expert = make_traj("t", "g", {}, TrajectorySource::expert);
  REQUIRE(validate_trajectory(empty_expert).size() == 1);
  CHECK(validate_trajectory(empty_expert)[0].rule == "empty-expert");
  CHECK(validate_trajectory(make_traj("t", "g", {})).empty());

  auto bad_index = make_traj("t", "g", {{ui({}), Action::stop("")}});
  bad_index.steps[0].t = 3;
  CHECK(validate_trajectory(bad_index).at(0).rule == "step-index");

  auto bbox = make_traj("t", "g", {{ui({el("1", "A", "a")}), Action::click("1")}});
  bbox.steps[0].state.elements[0].bbox = BBox{0, 0, 0, 5};
  CHECK(validate_trajectory(bbox).at(0).rule == "bad-bbox");
}

TEST_CASE("action field rules") {
  Action a = Action::click("1");
  CHECK(action_field_errors(a).empty());
  a.answer = "x";
  CHECK(action_field_errors(a) == std::vector<std::string>{"unexpected answer"});
  Action s;
  s.kind = ActionKind::scroll;
  CHECK(action_field_errors(s) == std::vector<std::string>{"missing direction"});
}

TEST_CASE("JSONL round trip and unknown fields") {
  auto t = make_traj("task/1", "Goal é", {{ui({el("1", "A", "x")}, "http://a"), Action::click("1")},
                                               {ui({}), Action::stop("")}},
                     TrajectorySource::pseudo_expert, false);
  t.steps[0].state.elements[0].bbox = BBox{1, 2, 3, 4};
  t.steps[0].state.app_name = "Shop";
  auto text = io::write_jsonl(t);
  CHECK(io::read_jsonl(text) == t);
  CHECK(io::write_jsonl(io::read_jsonl(text)) == text);

  std::string extra =
      "{\"task_id\":\"a\",\"goal\":\"g\",\"source\":\"sampled\",\"env_feedback\":null,\"junk\":1}\n"
      "{\"t\":1,\"state\":{\"elements\":[],\"extra\":true},\"action\":{\"kind\":\"stop\",\"answer\":\"\"}}\n";
  auto r = io::read_jsonl(extra);
  CHECK(r.task_id == "a");
  CHECK_FALSE(r.env_feedback.has_value());
  CHECK(io::write_jsonl(r).find("junk") == std::string::npos);
}

TEST_CASE("JSONL format errors") {
  CHECK_THROWS_AS(io::read_jsonl("not json\n"), Error);
  CHECK_THROWS_AS(io::read_jsonl("{\"task_id\":\"a\",\"goal\":\"g\",\"source\":\"nope\"}\n"), Error);
  CHECK_THROWS_AS(io::load_trajectory("/nonexistent/file.jsonl"), Error);
}

TEST_CASE("extraction is deterministic") {
  Step s{1, ui({el("1", "A", "x")}), Action::click("1")};
  CHECK(extract_description(s).text == extract_description(s).text);
}
