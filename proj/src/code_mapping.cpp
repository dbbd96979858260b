#include "selftrain/code_mapping.hpp"

#include <cctype>
#include <vector>

#include "selftrain/error.hpp"
#include "selftrain/label_function.hpp"

namespace selftrain {

namespace {

constexpr std::string_view kDslHeader = "fn verify(";

bool is_ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool is_ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

std::string_view strip(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

bool starts_with_word(std::string_view s, std::string_view word) {
  return s.starts_with(word) && (s.size() == word.size() || !is_ident_char(s[word.size()]));
}

// Cursor over one `if not ...:` line; columns are 1-based for errors.
class LineParser {
 public:
  LineParser(std::string_view line, int line_no, std::size_t indent)
      : s_(line), line_no_(line_no), indent_(indent) {}

  PredicateCall parse_guard() {
    expect_word("if");
    expect_word("not");
    PredicateCall call;
    call.api = ident();
    skip_ws();
    expect('(');
    bool first = true;
    skip_ws();
    if (peek() == ')') fail("call has no arguments");
    while (true) {
      skip_ws();
      std::string value = argument(first);
      if (!first) call.args.push_back(std::move(value));
      first = false;
      skip_ws();
      if (peek() == ',') {
        ++pos_;
        continue;
      }
      expect(')');
      break;
    }
    skip_ws();
    expect(':');
    skip_ws();
    std::string_view rest = s_.substr(pos_);
    if (!rest.empty() && rest.front() != '#' && strip(rest) != "return False")
      fail("unexpected text after ':'");
    return call;
  }

 private:
  [[noreturn]] void fail(const std::string& msg) const {
    throw ParseError(line_no_, static_cast<int>(indent_ + pos_ + 1), msg);
  }
  char peek() const { return pos_ < s_.size() ? s_[pos_] : '\0'; }
  void skip_ws() {
    while (pos_ < s_.size() && (s_[pos_] == ' ' || s_[pos_] == '\t')) ++pos_;
  }
  void expect(char c) {
    if (peek() != c) fail(std::string("expected '") + c + "'");
    ++pos_;
  }
  void expect_word(std::string_view w) {
    skip_ws();
    if (!starts_with_word(s_.substr(pos_), w)) fail("expected '" + std::string(w) + "'");
    pos_ += w.size();
  }
  std::string ident() {
    skip_ws();
    if (!is_ident_start(peek())) fail("expected identifier");
    std::size_t start = pos_;
    while (is_ident_char(peek())) ++pos_;
    return std::string(s_.substr(start, pos_ - start));
  }

  // The first positional argument must be the trajectory variable.
  std::string argument(bool first) {
    if (first) {
      std::string name = ident();
      if (name != "trajectory") fail("first argument must be 'trajectory'");
      return name;
    }
    if (is_ident_start(peek())) {
      std::size_t save = pos_;
      std::string name = ident();
      skip_ws();
      if (peek() == '=') {
        ++pos_;
        skip_ws();
        return value();
      }
      pos_ = save;
    }
    return value();
  }

  std::string value() {
    char q = peek();
    if (q == '\'' || q == '"') return string_literal(q);
    if (is_ident_char(q)) {
      std::size_t start = pos_;
      while (is_ident_char(peek())) ++pos_;
      return std::string(s_.substr(start, pos_ - start));
    }
    fail("expected a string literal or bare token");
  }

  std::string string_literal(char q) {
    ++pos_;
    std::string out;
    while (true) {
      if (pos_ >= s_.size()) fail("unterminated string literal");
      char c = s_[pos_++];
      if (c == q) return out;
      if (c != '\\') {
        out.push_back(c);
        continue;
      }
      if (pos_ >= s_.size()) fail("unterminated escape");
      char e = s_[pos_++];
      switch (e) {
        case 'n': out.push_back('\n'); break;
        case 't': out.push_back('\t'); break;
        case 'r': out.push_back('\r'); break;
        case '\\':
        case '\'':
        case '"': out.push_back(e); break;
        default: fail(std::string("unsupported escape '\\") + e + "'");
      }
    }
  }

  std::string_view s_;
  int line_no_;
  std::size_t indent_;
  std::size_t pos_ = 0;
};

bool ignorable(std::string_view t) {
  return t.empty() || t.front() == '#' || t.starts_with("```") || starts_with_word(t, "from") ||
         starts_with_word(t, "import") || t.starts_with("def verify_function(") || t == "return True" ||
         t == "return False" || t.starts_with("result = verify_function(");
}

}  // namespace

std::string map_generated_code(std::string_view code) {
  std::vector<std::string_view> lines;
  for (std::size_t start = 0; start <= code.size();) {
    std::size_t end = code.find('\n', start);
    if (end == std::string_view::npos) end = code.size();
    std::string_view line = code.substr(start, end - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.push_back(line);
    start = end + 1;
  }
  for (auto line : lines) {
    auto t = strip(line);
    if (t.empty() || t.starts_with("```")) continue;
    if (t.starts_with(kDslHeader)) return std::string(code);
    break;
  }

  LabelFunction lf;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    std::string_view line = lines[i];
    std::size_t indent = 0;
    while (indent < line.size() && (line[indent] == ' ' || line[indent] == '\t')) ++indent;
    std::string_view t = strip(line);
    if (ignorable(t)) continue;
    int line_no = static_cast<int>(i + 1);
    if (!starts_with_word(t, "if")) throw ParseError(line_no, static_cast<int>(indent + 1), "unsupported statement");
    LineParser p(line.substr(indent), line_no, indent);
    lf.guards.push_back(p.parse_guard());
  }
  if (lf.guards.empty()) throw ParseError(1, 1, "no guard found in generated code");
  return print_label_function(lf);
}

}  // namespace selftrain
