#pragma once

#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "selftrain/label_function.hpp"
#include "selftrain/trajectory.hpp"

namespace selftrain {

enum class ArgKind { text, enumeration };

struct ArgSpec {
  std::string name;
  ArgKind kind = ArgKind::text;
  std::vector<std::string> allowed;  // enumeration values
};

/// Returns the earliest 1-based step index at which the predicate holds.
/// May throw PredicateRuntimeError when the trajectory lacks data it needs.
using PredicateFn = std::function<std::optional<int>(std::span<const std::string>, const Trajectory&)>;

struct ApiEntry {
  std::string name;
  std::vector<ArgSpec> args;
  PredicateFn eval;
  std::string doc;
};

/// The predicate API set label functions may call. Immutable once built.
class ApiRegistry {
 public:
  /// validate_click_action, validate_click_or_hover_action,
  /// validate_type_action, validate_stop_action, validate_item_in_wishlist,
  /// validate_scroll_action, validate_open_app, validate_navigate.
  static const ApiRegistry& builtin();

  void add(ApiEntry entry);
  const ApiEntry* find(std::string_view name) const;

  /// Throws Error(unknown_api), Error(arity_mismatch) or Error(bad_argument).
  void check_call(const PredicateCall& call) const;

  /// Python-style signature listing, one per line; fills <<API_FUNCTIONS>>.
  std::string describe() const;

  std::vector<std::string> names() const;

 private:
  std::map<std::string, ApiEntry, std::less<>> entries_;
};

}  // namespace selftrain
