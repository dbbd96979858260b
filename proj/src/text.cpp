#include "selftrain/text.hpp"

#include <unicode/normalizer2.h>
#include <unicode/uchar.h>
#include <unicode/unistr.h>

#include <cctype>
#include <sstream>

namespace selftrain::text {

std::string nfc(std::string_view s) {
  UErrorCode status = U_ZERO_ERROR;
  const icu::Normalizer2* norm = icu::Normalizer2::getNFCInstance(status);
  if (U_FAILURE(status)) return std::string(s);
  auto src = icu::UnicodeString::fromUTF8(icu::StringPiece(s.data(), static_cast<int32_t>(s.size())));
  if (norm->isNormalized(src, status) && U_SUCCESS(status)) return std::string(s);
  status = U_ZERO_ERROR;
  icu::UnicodeString out = norm->normalize(src, status);
  if (U_FAILURE(status)) return std::string(s);
  std::string result;
  out.toUTF8String(result);
  return result;
}

std::string trim(std::string_view s) {
  auto u = icu::UnicodeString::fromUTF8(icu::StringPiece(s.data(), static_cast<int32_t>(s.size())));
  int32_t begin = 0;
  int32_t end = u.length();
  while (begin < end) {
    UChar32 c = u.char32At(begin);
    if (!u_isUWhiteSpace(c)) break;
    begin = u.moveIndex32(begin, 1);
  }
  while (end > begin) {
    int32_t prev = u.moveIndex32(end, -1);
    if (!u_isUWhiteSpace(u.char32At(prev))) break;
    end = prev;
  }
  if (begin == 0 && end == u.length()) return std::string(s);
  std::string result;
  u.tempSubStringBetween(begin, end).toUTF8String(result);
  return result;
}

std::string normalize(std::string_view s) { return trim(nfc(s)); }

std::vector<std::string> tokenize(std::string_view s) {
  std::vector<std::string> out;
  std::string cur;
  for (unsigned char c : s) {
    if (std::isalnum(c) || c >= 0x80) {
      cur.push_back(static_cast<char>(std::tolower(c)));
    } else if (!cur.empty()) {
      out.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

std::vector<std::string> content_tokens(std::string_view s, const std::set<std::string>& stopwords) {
  std::vector<std::string> out;
  for (auto& tok : tokenize(s))
    if (!stopwords.contains(tok)) out.push_back(std::move(tok));
  return out;
}

std::set<std::string> word_list(std::string_view data) {
  std::set<std::string> words;
  std::istringstream in{std::string(data)};
  std::string line;
  while (std::getline(in, line)) {
    auto w = trim(line);
    if (w.empty() || w.front() == '#') continue;
    for (auto& c : w) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    words.insert(w);
  }
  return words;
}

bool starts_with_icase(std::string_view s, std::string_view prefix) {
  if (s.size() < prefix.size()) return false;
  for (std::size_t i = 0; i < prefix.size(); ++i) {
    if (std::tolower(static_cast<unsigned char>(s[i])) != std::tolower(static_cast<unsigned char>(prefix[i])))
      return false;
  }
  return true;
}

}  // namespace selftrain::text
