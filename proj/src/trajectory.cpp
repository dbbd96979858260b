#include "selftrain/trajectory.hpp"

#include <set>

namespace selftrain {

const Element* UiState::find(std::string_view id) const {
  for (const auto& e : elements)
    if (e.id == id) return &e;
  return nullptr;
}

std::string_view to_string(ActionKind kind) {
  switch (kind) {
    case ActionKind::click: return "click";
    case ActionKind::hover: return "hover";
    case ActionKind::type: return "type";
    case ActionKind::scroll: return "scroll";
    case ActionKind::open_app: return "open_app";
    case ActionKind::navigate: return "navigate";
    case ActionKind::stop: return "stop";
  }
  return "?";
}

std::optional<ActionKind> action_kind_from(std::string_view s) {
  for (auto k : kAllActionKinds)
    if (to_string(k) == s) return k;
  return std::nullopt;
}

std::string_view to_string(Direction d) {
  switch (d) {
    case Direction::up: return "up";
    case Direction::down: return "down";
    case Direction::left: return "left";
    case Direction::right: return "right";
  }
  return "?";
}

std::optional<Direction> direction_from(std::string_view s) {
  for (auto d : {Direction::up, Direction::down, Direction::left, Direction::right})
    if (to_string(d) == s) return d;
  return std::nullopt;
}

std::string_view to_string(TrajectorySource s) {
  switch (s) {
    case TrajectorySource::expert: return "expert";
    case TrajectorySource::sampled: return "sampled";
    case TrajectorySource::pseudo_expert: return "pseudo_expert";
  }
  return "?";
}

std::optional<TrajectorySource> trajectory_source_from(std::string_view s) {
  for (auto v : {TrajectorySource::expert, TrajectorySource::sampled, TrajectorySource::pseudo_expert})
    if (to_string(v) == s) return v;
  return std::nullopt;
}

Action Action::click(std::string target) {
  Action a;
  a.kind = ActionKind::click;
  a.target_id = std::move(target);
  return a;
}

Action Action::hover(std::string target) {
  Action a;
  a.kind = ActionKind::hover;
  a.target_id = std::move(target);
  return a;
}

Action Action::type(std::string target, std::string text) {
  Action a;
  a.kind = ActionKind::type;
  a.target_id = std::move(target);
  a.text = std::move(text);
  return a;
}

Action Action::scroll(Direction d) {
  Action a;
  a.kind = ActionKind::scroll;
  a.direction = d;
  return a;
}

Action Action::open_app(std::string app) {
  Action a;
  a.kind = ActionKind::open_app;
  a.app = std::move(app);
  return a;
}

Action Action::navigate(std::string url) {
  Action a;
  a.kind = ActionKind::navigate;
  a.url = std::move(url);
  return a;
}

Action Action::stop(std::string answer) {
  Action a;
  a.kind = ActionKind::stop;
  a.answer = std::move(answer);
  return a;
}

std::vector<std::string> action_field_errors(const Action& a) {
  const bool want_target = a.targets_element();
  const bool want_text = a.kind == ActionKind::type;
  const bool want_answer = a.kind == ActionKind::stop;
  const bool want_direction = a.kind == ActionKind::scroll;
  const bool want_app = a.kind == ActionKind::open_app;
  const bool want_url = a.kind == ActionKind::navigate;

  std::vector<std::string> errs;
  auto check = [&](bool want, bool have, const char* name) {
    if (want && !have) errs.push_back(std::string("missing ") + name);
    if (!want && have) errs.push_back(std::string("unexpected ") + name);
  };
  check(want_target, a.target_id.has_value(), "target_id");
  check(want_text, a.text.has_value(), "text");
  check(want_answer, a.answer.has_value(), "answer");
  check(want_direction, a.direction.has_value(), "direction");
  check(want_app, a.app.has_value(), "app");
  check(want_url, a.url.has_value(), "url");
  if (want_target && a.target_id && a.target_id->empty()) errs.push_back("empty target_id");
  return errs;
}

const Step* Trajectory::final_stop() const {
  if (!steps.empty() && steps.back().action.kind == ActionKind::stop) return &steps.back();
  return nullptr;
}

std::vector<Violation> validate_trajectory(const Trajectory& traj) {
  std::vector<Violation> out;
  if (traj.steps.empty() && traj.source == TrajectorySource::expert)
    out.push_back({std::nullopt, "empty-expert", "expert trajectories must contain at least one step"});

  int stops = 0;
  for (std::size_t i = 0; i < traj.steps.size(); ++i) {
    const Step& step = traj.steps[i];
    const int expected = static_cast<int>(i) + 1;
    if (step.t != expected)
      out.push_back({expected, "step-index",
                     "expected t=" + std::to_string(expected) + ", found " + std::to_string(step.t)});

    std::set<std::string_view> ids;
    for (const auto& e : step.state.elements) {
      if (e.id.empty()) out.push_back({expected, "empty-element-id", "element with empty id"});
      else if (!ids.insert(e.id).second)
        out.push_back({expected, "dup-element-id", "duplicate element id '" + e.id + "'"});
      if (e.bbox && (e.bbox->w <= 0 || e.bbox->h <= 0 || e.bbox->x < 0 || e.bbox->y < 0))
        out.push_back({expected, "bad-bbox", "element '" + e.id + "' has an invalid bbox"});
    }

    auto errs = action_field_errors(step.action);
    if (!errs.empty()) {
      std::string detail;
      for (const auto& e : errs) detail += (detail.empty() ? "" : ", ") + e;
      out.push_back({expected, "malformed-action", detail});
    }

    if (step.action.kind == ActionKind::stop) {
      ++stops;
      if (stops > 1) out.push_back({expected, "multiple-stop", "more than one stop action"});
      else if (i + 1 != traj.steps.size())
        out.push_back({expected, "stop-not-final", "stop action is not the final step"});
    }
  }
  return out;
}

}  // namespace selftrain
