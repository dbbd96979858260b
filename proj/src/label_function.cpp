#include "selftrain/label_function.hpp"

#include <cctype>

#include "selftrain/api_registry.hpp"
#include "selftrain/error.hpp"
#include "selftrain/text.hpp"

namespace selftrain {

std::string_view to_string(LabelOrigin o) {
  switch (o) {
    case LabelOrigin::expert: return "expert";
    case LabelOrigin::expansion: return "expansion";
    case LabelOrigin::mock: return "mock";
  }
  return "?";
}

namespace {

constexpr std::string_view kHeader = "fn verify(trajectory):";
constexpr std::string_view kIndent = "  ";
constexpr std::string_view kRequire = "require";

bool is_ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool is_ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }
bool is_blank(char c) { return c == ' ' || c == '\t'; }

// Cursor over one guard line; columns are 1-based byte offsets.
class LineParser {
 public:
  LineParser(std::string_view line, int lineno) : line_(line), lineno_(lineno) {}

  PredicateCall parse_guard() {
    if (line_.substr(0, kIndent.size()) != kIndent || line_.size() <= kIndent.size() || is_blank(line_[kIndent.size()]))
      fail(1, "expected a guard indented by exactly two spaces");
    pos_ = kIndent.size();
    if (line_.substr(pos_, kRequire.size()) != kRequire) fail(pos_ + 1, "expected 'require'");
    pos_ += kRequire.size();
    if (pos_ >= line_.size() || !is_blank(line_[pos_])) fail(pos_ + 1, "expected whitespace after 'require'");
    skip_blanks();

    PredicateCall call;
    call.api = identifier("API name");
    skip_blanks();
    expect('(');
    skip_blanks();
    if (peek() == ')') {
      ++pos_;
    } else {
      while (true) {
        skip_blanks();
        call.args.push_back(argument());
        skip_blanks();
        if (peek() == ',') {
          ++pos_;
          continue;
        }
        expect(')');
        break;
      }
    }
    skip_blanks();
    if (pos_ != line_.size()) fail(pos_ + 1, "unexpected trailing characters");
    return call;
  }

 private:
  char peek() const { return pos_ < line_.size() ? line_[pos_] : '\0'; }

  void skip_blanks() {
    while (pos_ < line_.size() && is_blank(line_[pos_])) ++pos_;
  }

  void expect(char c) {
    if (peek() != c) fail(pos_ + 1, std::string("expected '") + c + "'");
    ++pos_;
  }

  std::string identifier(const char* what) {
    if (!is_ident_start(peek())) fail(pos_ + 1, std::string("expected ") + what);
    auto start = pos_;
    while (pos_ < line_.size() && is_ident_char(line_[pos_])) ++pos_;
    return std::string(line_.substr(start, pos_ - start));
  }

  std::string argument() {
    if (peek() == '"') return quoted();
    if (!is_ident_char(peek())) fail(pos_ + 1, "expected a quoted string or an enum token");
    auto start = pos_;
    while (pos_ < line_.size() && is_ident_char(line_[pos_])) ++pos_;
    return std::string(line_.substr(start, pos_ - start));
  }

  std::string quoted() {
    auto open = pos_++;
    std::string out;
    while (pos_ < line_.size()) {
      char c = line_[pos_++];
      if (c == '"') return out;
      if (c != '\\') {
        out.push_back(c);
        continue;
      }
      if (pos_ >= line_.size()) break;
      char e = line_[pos_++];
      switch (e) {
        case '"': out.push_back('"'); break;
        case '\\': out.push_back('\\'); break;
        case 'n': out.push_back('\n'); break;
        default: fail(pos_ - 1, std::string("unknown escape '\\") + e + "'");
      }
    }
    fail(open + 1, "unterminated string");
  }

  [[noreturn]] void fail(std::size_t col, const std::string& msg) const {
    throw ParseError(lineno_, static_cast<int>(col), msg);
  }

  std::string_view line_;
  int lineno_;
  std::size_t pos_ = 0;
};

bool is_skippable(std::string_view line) {
  auto first = line.find_first_not_of(" \t");
  return first == std::string_view::npos || line[first] == '#';
}

std::string_view rstrip(std::string_view s) {
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

}  // namespace

LabelFunction parse_label_function(std::string_view text, const ApiRegistry& registry) {
  LabelFunction lf;
  bool header_seen = false;
  int lineno = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    start = end + 1;
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (is_skippable(line)) {
      if (end == text.size()) break;
      continue;
    }
    if (!header_seen) {
      if (rstrip(line) != kHeader) {
        std::size_t col = 0;
        while (col < line.size() && col < kHeader.size() && line[col] == kHeader[col]) ++col;
        throw ParseError(lineno, static_cast<int>(col) + 1, "expected header 'fn verify(trajectory):'");
      }
      header_seen = true;
    } else {
      PredicateCall call = LineParser(line, lineno).parse_guard();
      try {
        registry.check_call(call);
      } catch (const Error& e) {
        throw Error(e.code(), "line " + std::to_string(lineno) + ": " + e.what());
      }
      lf.guards.push_back(std::move(call));
    }
    if (end == text.size()) break;
  }
  if (!header_seen) throw ParseError(lineno == 0 ? 1 : lineno, 1, "missing header 'fn verify(trajectory):'");
  if (lf.guards.empty()) throw Error(Errc::empty_body, "label function has no guards");
  return lf;
}

LabelFunction parse_label_function(std::string_view text) {
  return parse_label_function(text, ApiRegistry::builtin());
}

std::string quote_dsl_string(std::string_view s) {
  std::string out = "\"";
  for (char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      default: out.push_back(c);
    }
  }
  out.push_back('"');
  return out;
}

std::string print_label_function(const LabelFunction& lf) {
  std::string out(kHeader);
  out.push_back('\n');
  for (const auto& g : lf.guards) {
    out += kIndent;
    out += kRequire;
    out.push_back(' ');
    out += g.api;
    out.push_back('(');
    for (std::size_t i = 0; i < g.args.size(); ++i) {
      if (i) out.push_back(',');
      out += quote_dsl_string(g.args[i]);
    }
    out += ")\n";
  }
  return out;
}

LabelFunction canonicalize(const LabelFunction& lf) {
  LabelFunction out = lf;
  for (auto& g : out.guards)
    for (auto& a : g.args) a = text::normalize(a);
  return out;
}

std::string canonical_key(const LabelFunction& lf) { return print_label_function(canonicalize(lf)); }

}  // namespace selftrain
