#pragma once

#include <string>
#include <string_view>

namespace selftrain {

/// Maps a generated Python verification function onto label-function DSL
/// text. Each `if not api(trajectory, ...):` becomes one `require api(...)`:
/// the leading trajectory argument is dropped, keyword names are discarded
/// and string literals keep their value. Imports, the def line, comments,
/// code fences, `return` statements and the trailing `result = ...` call are
/// ignored. Anything else (and/or, nesting, assignments) is rejected.
///
/// Text that already starts with the DSL header is returned unchanged.
/// Throws ParseError with the offending line.
std::string map_generated_code(std::string_view code);

}  // namespace selftrain
