#pragma once

#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace selftrain::text {

/// Unicode NFC normalization. Invalid UTF-8 is passed through unchanged.
std::string nfc(std::string_view s);

/// Strips leading/trailing Unicode whitespace.
std::string trim(std::string_view s);

/// nfc followed by trim; the comparison key for every string match in the
/// label DSL and the identity key for strategy-graph vertices.
std::string normalize(std::string_view s);

/// Lowercase ASCII alphanumeric runs. Non-ASCII bytes are kept inside tokens.
std::vector<std::string> tokenize(std::string_view s);

/// Tokens of `s` minus the given stopwords.
std::vector<std::string> content_tokens(std::string_view s, const std::set<std::string>& stopwords);

/// Parses a newline-separated word list; blank lines and `#` comments skipped.
std::set<std::string> word_list(std::string_view data);

bool starts_with_icase(std::string_view s, std::string_view prefix);

}  // namespace selftrain::text
