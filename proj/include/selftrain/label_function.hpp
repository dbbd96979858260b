#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace selftrain {

class ApiRegistry;

struct PredicateCall {
  std::string api;
  std::vector<std::string> args;
  bool operator==(const PredicateCall&) const = default;
};

enum class LabelOrigin { expert, expansion, mock };
std::string_view to_string(LabelOrigin o);

/// An ordered conjunction of predicate calls: the trajectory passes iff every
/// guard finds a matching step.
///
/// Equality is structural over the guards only; origin and source_desc are
/// provenance and do not survive printing.
struct LabelFunction {
  std::vector<PredicateCall> guards;
  LabelOrigin origin = LabelOrigin::expert;
  std::optional<std::string> source_desc;

  bool operator==(const LabelFunction& o) const { return guards == o.guards; }
};

/// Concrete syntax:
///
///     fn verify(trajectory):
///       require validate_stop_action("4200 calories")
///
/// Exactly two spaces of indentation per guard. Arguments are double-quoted
/// strings (escapes \" \\ \n) or bare enum tokens; whitespace around
/// parentheses and commas is free. Blank lines and `#` lines are skipped.
///
/// Throws ParseError, Error(unknown_api), Error(arity_mismatch),
/// Error(bad_argument) or Error(empty_body).
LabelFunction parse_label_function(std::string_view text, const ApiRegistry& registry);
LabelFunction parse_label_function(std::string_view text);

/// Canonical text: header, one guard per line, every argument double-quoted,
/// no trailing whitespace, single trailing newline.
std::string print_label_function(const LabelFunction& lf);

/// NFC-normalizes and trims every argument. Guard order is kept.
LabelFunction canonicalize(const LabelFunction& lf);

/// print(canonicalize(lf)); the vertex identity key in strategy graphs.
std::string canonical_key(const LabelFunction& lf);

std::string quote_dsl_string(std::string_view s);

}  // namespace selftrain
