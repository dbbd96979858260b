#include "selftrain/api_registry.hpp"

#include <algorithm>

#include "selftrain/error.hpp"
#include "selftrain/text.hpp"

namespace selftrain {

namespace {

constexpr std::string_view kAddToWishList = "Add to Wish List";

bool same_text(std::string_view a, std::string_view b) { return text::normalize(a) == text::normalize(b); }

// Resolves the referent element of an element-targeting action.
const Element& referent(const Step& step) {
  const Element* el = step.state.find(*step.action.target_id);
  if (!el)
    throw PredicateRuntimeError("step " + std::to_string(step.t) + ": target id '" + *step.action.target_id +
                                "' not present in state");
  return *el;
}

template <typename Pred>
std::optional<int> first_step(const Trajectory& traj, Pred&& pred) {
  for (const auto& step : traj.steps)
    if (pred(step)) return step.t;
  return std::nullopt;
}

std::optional<int> click_action(std::span<const std::string> args, const Trajectory& traj) {
  return first_step(traj, [&](const Step& s) {
    return s.action.kind == ActionKind::click && same_text(referent(s).text, args[0]);
  });
}

std::optional<int> click_or_hover_action(std::span<const std::string> args, const Trajectory& traj) {
  const ActionKind kind = text::normalize(args[0]) == "hover" ? ActionKind::hover : ActionKind::click;
  const std::string tag = text::normalize(args[1]);
  return first_step(traj, [&](const Step& s) {
    if (s.action.kind != kind) return false;
    const Element& el = referent(s);
    return (tag.empty() || text::normalize(el.tag) == tag) && same_text(el.text, args[2]);
  });
}

std::optional<int> type_action(std::span<const std::string> args, const Trajectory& traj) {
  return first_step(traj, [&](const Step& s) {
    return s.action.kind == ActionKind::type && same_text(*s.action.text, args[0]) &&
           same_text(referent(s).text, args[1]);
  });
}

std::optional<int> stop_action(std::span<const std::string> args, const Trajectory& traj) {
  return first_step(traj, [&](const Step& s) {
    return s.action.kind == ActionKind::stop && same_text(*s.action.answer, args[0]);
  });
}

// Trajectory-visible wishlist semantics: the step clicks the "Add to Wish List"
// control while the item is displayed in the same state.
std::optional<int> item_in_wishlist(std::span<const std::string> args, const Trajectory& traj) {
  return first_step(traj, [&](const Step& s) {
    if (s.action.kind != ActionKind::click) return false;
    const Element& el = referent(s);
    if (!same_text(el.text, kAddToWishList)) return false;
    return std::any_of(s.state.elements.begin(), s.state.elements.end(), [&](const Element& e) {
      return e.id != el.id && same_text(e.text, args[0]);
    });
  });
}

std::optional<int> scroll_action(std::span<const std::string> args, const Trajectory& traj) {
  return first_step(traj, [&](const Step& s) {
    return s.action.kind == ActionKind::scroll && to_string(*s.action.direction) == text::normalize(args[0]);
  });
}

std::optional<int> open_app(std::span<const std::string> args, const Trajectory& traj) {
  return first_step(traj, [&](const Step& s) {
    return s.action.kind == ActionKind::open_app && same_text(*s.action.app, args[0]);
  });
}

std::optional<int> navigate(std::span<const std::string> args, const Trajectory& traj) {
  const std::string needle = text::normalize(args[0]);
  return first_step(traj, [&](const Step& s) {
    return s.action.kind == ActionKind::navigate && text::nfc(*s.action.url).find(needle) != std::string::npos;
  });
}

ApiRegistry make_builtin() {
  const ArgSpec text_arg_text{"text", ArgKind::text, {}};
  ApiRegistry r;
  r.add({"validate_click_action", {text_arg_text}, click_action,
         "True if the trajectory clicks an element whose text equals `text`."});
  r.add({"validate_click_or_hover_action",
         {{"action", ArgKind::enumeration, {"click", "hover"}}, {"tag", ArgKind::text, {}}, text_arg_text},
         click_or_hover_action,
         "True if the trajectory performs `action` on an element with role `tag` and text `text`; "
         "an empty tag matches any role."});
  r.add({"validate_type_action", {{"text", ArgKind::text, {}}, {"target_text_field", ArgKind::text, {}}},
         type_action, "True if `text` is typed into the field whose text is `target_text_field`."});
  r.add({"validate_stop_action", {{"answer", ArgKind::text, {}}}, stop_action,
         "True if the trajectory stops with exactly `answer`."});
  r.add({"validate_item_in_wishlist", {{"item_text", ArgKind::text, {}}}, item_in_wishlist,
         "True if 'Add to Wish List' is clicked while `item_text` is displayed."});
  r.add({"validate_scroll_action", {{"direction", ArgKind::enumeration, {"up", "down", "left", "right"}}},
         scroll_action, "True if the trajectory scrolls in `direction`."});
  r.add({"validate_open_app", {{"app_name", ArgKind::text, {}}}, open_app,
         "True if the app `app_name` is opened."});
  r.add({"validate_navigate", {{"url_substring", ArgKind::text, {}}}, navigate,
         "True if the trajectory navigates to a URL containing `url_substring`."});
  return r;
}

}  // namespace

const ApiRegistry& ApiRegistry::builtin() {
  static const ApiRegistry registry = make_builtin();
  return registry;
}

void ApiRegistry::add(ApiEntry entry) {
  auto name = entry.name;
  entries_.insert_or_assign(std::move(name), std::move(entry));
}

const ApiEntry* ApiRegistry::find(std::string_view name) const {
  auto it = entries_.find(name);
  return it == entries_.end() ? nullptr : &it->second;
}

void ApiRegistry::check_call(const PredicateCall& call) const {
  const ApiEntry* entry = find(call.api);
  if (!entry) throw Error(Errc::unknown_api, "unknown API '" + call.api + "'");
  if (call.args.size() != entry->args.size())
    throw Error(Errc::arity_mismatch, call.api + " takes " + std::to_string(entry->args.size()) +
                                          " argument(s), got " + std::to_string(call.args.size()));
  for (std::size_t i = 0; i < call.args.size(); ++i) {
    const ArgSpec& spec = entry->args[i];
    if (spec.kind != ArgKind::enumeration) continue;
    auto v = text::normalize(call.args[i]);
    if (std::find(spec.allowed.begin(), spec.allowed.end(), v) == spec.allowed.end())
      throw Error(Errc::bad_argument, call.api + ": '" + call.args[i] + "' is not a valid " + spec.name);
  }
}

std::string ApiRegistry::describe() const {
  std::string out;
  for (const auto& [name, entry] : entries_) {
    out += name + "(trajectory";
    for (const auto& a : entry.args) {
      out += ", " + a.name;
      if (a.kind == ArgKind::enumeration) {
        out += ": one of {";
        for (std::size_t i = 0; i < a.allowed.size(); ++i) out += (i ? ", '" : "'") + a.allowed[i] + "'";
        out += "}";
      }
    }
    out += ") -> bool: " + entry.doc + "\n";
  }
  return out;
}

std::vector<std::string> ApiRegistry::names() const {
  std::vector<std::string> out;
  for (const auto& [name, _] : entries_) out.push_back(name);
  return out;
}

}  // namespace selftrain
