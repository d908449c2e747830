#include "bioqa/text.hpp"

#include <algorithm>

namespace bioqa {

bool is_ascii_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

bool is_ascii_punct(char c) {
  unsigned char u = static_cast<unsigned char>(c);
  return (u >= 0x21 && u <= 0x2f) || (u >= 0x3a && u <= 0x40) || (u >= 0x5b && u <= 0x60) ||
         (u >= 0x7b && u <= 0x7e);
}

bool is_ascii_digit(char c) {
  return c >= '0' && c <= '9';
}

bool is_ascii_alpha(char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z');
}

bool is_ascii_upper(char c) {
  return c >= 'A' && c <= 'Z';
}

char ascii_lower(char c) {
  return is_ascii_upper(c) ? static_cast<char>(c - 'A' + 'a') : c;
}

std::string to_lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), ascii_lower);
  return out;
}

std::vector<std::size_t> find_all_ci(std::string_view haystack, std::string_view needle) {
  std::vector<std::size_t> out;
  if (needle.empty() || needle.size() > haystack.size()) return out;
  const std::string h = to_lower(haystack);
  const std::string n = to_lower(needle);
  std::size_t pos = 0;
  while ((pos = h.find(n, pos)) != std::string::npos) {
    out.push_back(pos);
    ++pos;
  }
  return out;
}

std::optional<std::size_t> find_ci(std::string_view haystack, std::string_view needle) {
  if (needle.empty() || needle.size() > haystack.size()) return std::nullopt;
  const std::string h = to_lower(haystack);
  const std::string n = to_lower(needle);
  std::size_t pos = h.find(n);
  if (pos == std::string::npos) return std::nullopt;
  return pos;
}

std::string collapse_whitespace(std::string_view s, std::vector<std::size_t>* out_map) {
  std::string out;
  out.reserve(s.size());
  if (out_map) out_map->clear();
  std::size_t i = 0;
  const std::size_t n = s.size();
  while (i < n && is_ascii_space(s[i])) ++i;
  bool pending_space = false;
  std::size_t pending_from = 0;
  for (; i < n; ++i) {
    if (is_ascii_space(s[i])) {
      if (!pending_space) {
        pending_space = true;
        pending_from = i;
      }
      continue;
    }
    if (pending_space) {
      out.push_back(' ');
      if (out_map) out_map->push_back(pending_from);
      pending_space = false;
    }
    out.push_back(s[i]);
    if (out_map) out_map->push_back(i);
  }
  return out;
}

namespace {

// Marks positions lying inside matched '(' ')' pairs. Unmatched parens do
// not create a region.
std::vector<bool> inside_matched_parens(std::string_view text) {
  const std::size_t n = text.size();
  std::vector<int> delta(n + 1, 0);
  std::vector<std::size_t> stack;
  for (std::size_t i = 0; i < n; ++i) {
    if (text[i] == '(') {
      stack.push_back(i);
    } else if (text[i] == ')' && !stack.empty()) {
      std::size_t open = stack.back();
      stack.pop_back();
      delta[open] += 1;
      delta[i + 1] -= 1;
    }
  }
  std::vector<bool> inside(n, false);
  int depth = 0;
  for (std::size_t i = 0; i < n; ++i) {
    depth += delta[i];
    inside[i] = depth > 0;
  }
  return inside;
}

}  // namespace

std::vector<CharSpan> split_sentences(std::string_view text) {
  std::vector<CharSpan> out;
  const std::size_t n = text.size();
  const std::vector<bool> inside = inside_matched_parens(text);

  std::size_t start = 0;
  while (start < n && is_ascii_space(text[start])) ++start;

  for (std::size_t i = start; i < n; ++i) {
    char c = text[i];
    if ((c != '.' && c != '!' && c != '?') || inside[i]) continue;
    std::size_t j = i + 1;
    if (j >= n || !is_ascii_space(text[j])) continue;
    while (j < n && is_ascii_space(text[j])) ++j;
    if (j >= n || !(is_ascii_upper(text[j]) || is_ascii_digit(text[j]))) continue;
    out.push_back({start, i + 1});
    start = j;
    i = j - 1;
  }

  if (start < n) {
    std::size_t end = n;
    while (end > start && is_ascii_space(text[end - 1])) --end;
    if (end > start) out.push_back({start, end});
  }
  return out;
}

std::string normalize_answer_key(std::string_view s) {
  return collapse_whitespace(to_lower(s));
}

std::string normalize_for_match(std::string_view s) {
  std::string t = collapse_whitespace(to_lower(s));
  std::size_t b = 0, e = t.size();
  while (b < e && (is_ascii_space(t[b]) || is_ascii_punct(t[b]))) ++b;
  while (e > b && (is_ascii_space(t[e - 1]) || is_ascii_punct(t[e - 1]))) --e;
  return t.substr(b, e - b);
}

}  // namespace bioqa
