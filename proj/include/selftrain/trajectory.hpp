#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace selftrain {

struct BBox {
  int x = 0;
  int y = 0;
  int w = 0;
  int h = 0;
  bool operator==(const BBox&) const = default;
};

/// One Set-of-Marks element of an observation.
struct Element {
  std::string id;
  std::string tag;
  std::string text;
  std::optional<BBox> bbox;
  bool operator==(const Element&) const = default;
};

struct UiState {
  std::vector<Element> elements;
  std::optional<std::string> url;
  std::optional<std::string> app_name;
  std::optional<std::string> screenshot_ref;

  const Element* find(std::string_view id) const;
  bool operator==(const UiState&) const = default;
};

enum class ActionKind { click, hover, type, scroll, open_app, navigate, stop };
enum class Direction { up, down, left, right };

inline constexpr ActionKind kAllActionKinds[] = {ActionKind::click,    ActionKind::hover,
                                                 ActionKind::type,     ActionKind::scroll,
                                                 ActionKind::open_app, ActionKind::navigate,
                                                 ActionKind::stop};

std::string_view to_string(ActionKind kind);
std::optional<ActionKind> action_kind_from(std::string_view s);
std::string_view to_string(Direction d);
std::optional<Direction> direction_from(std::string_view s);

/// An agent action. Exactly the fields demanded by `kind` are set; the
/// named constructors always produce well-formed actions.
struct Action {
  ActionKind kind = ActionKind::stop;
  std::optional<std::string> target_id;
  std::optional<std::string> text;
  std::optional<std::string> answer;
  std::optional<Direction> direction;
  std::optional<std::string> app;
  std::optional<std::string> url;

  static Action click(std::string target);
  static Action hover(std::string target);
  static Action type(std::string target, std::string text);
  static Action scroll(Direction d);
  static Action open_app(std::string app);
  static Action navigate(std::string url);
  static Action stop(std::string answer);

  bool targets_element() const {
    return kind == ActionKind::click || kind == ActionKind::hover || kind == ActionKind::type;
  }
  bool operator==(const Action&) const = default;
};

/// Names of the Action fields that are wrong for its kind (missing or extra).
std::vector<std::string> action_field_errors(const Action& a);

struct Step {
  int t = 1;
  UiState state;
  Action action;
  bool operator==(const Step&) const = default;
};

enum class TrajectorySource { expert, sampled, pseudo_expert };
std::string_view to_string(TrajectorySource s);
std::optional<TrajectorySource> trajectory_source_from(std::string_view s);

struct Trajectory {
  std::string task_id;
  std::string goal;
  std::vector<Step> steps;
  TrajectorySource source = TrajectorySource::sampled;
  std::optional<bool> env_feedback;

  const Step* final_stop() const;
  bool operator==(const Trajectory&) const = default;
};

struct Violation {
  std::optional<int> step;  // 1-based step index, absent for trajectory-level rules
  std::string rule;
  std::string detail;
};

/// Empty iff every trajectory, step, element and action invariant holds.
/// Rules: step-index, stop-not-final, multiple-stop, dup-element-id,
/// empty-element-id, bad-bbox, malformed-action, empty-expert.
std::vector<Violation> validate_trajectory(const Trajectory& traj);

}  // namespace selftrain
