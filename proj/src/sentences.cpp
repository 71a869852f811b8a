#include "dataforge/sentences.hpp"

#include <cctype>

namespace dataforge {

namespace {

bool is_terminator(char c) { return c == '.' || c == '?' || c == '!'; }

// Length of a closing quote/bracket at i, 0 if none.
std::size_t closing_at(std::string_view s, std::size_t i) {
  if (i >= s.size()) return 0;
  const char c = s[i];
  if (c == '"' || c == '\'' || c == ')' || c == ']') return 1;
  // U+201D and U+2019
  if (s.substr(i, 3) == "\xE2\x80\x9D" || s.substr(i, 3) == "\xE2\x80\x99") return 3;
  return 0;
}

bool opens_sentence(std::string_view s, std::size_t i) {
  if (i >= s.size()) return false;
  const auto c = static_cast<unsigned char>(s[i]);
  if (std::isupper(c) || std::isdigit(c) || c == '"' || c == '\'' || c == '(') return true;
  // U+201C and U+2018
  return s.substr(i, 3) == "\xE2\x80\x9C" || s.substr(i, 3) == "\xE2\x80\x98";
}

}  // namespace

std::vector<std::size_t> sentence_ends(std::string_view s) {
  std::vector<std::size_t> ends;
  std::size_t i = 0;
  while (i < s.size()) {
    if (!is_terminator(s[i])) {
      ++i;
      continue;
    }
    std::size_t j = i + 1;
    while (j < s.size() && is_terminator(s[j])) ++j;
    while (std::size_t n = closing_at(s, j)) j += n;
    std::size_t k = j;
    while (k < s.size() && std::isspace(static_cast<unsigned char>(s[k]))) ++k;
    if (k > j && opens_sentence(s, k)) {
      ends.push_back(j);
      i = k;
    } else {
      i = j;
    }
  }
  if (!s.empty()) ends.push_back(s.size());
  return ends;
}

std::vector<std::string> split_sentences(std::string_view text) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (const auto end : sentence_ends(text)) {
    out.emplace_back(text.substr(start, end - start));
    start = end;
  }
  return out;
}

}  // namespace dataforge
