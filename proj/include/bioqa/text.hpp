#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace bioqa {

// Character interval [start, end) into a host string.
struct CharSpan {
  std::size_t start = 0;
  std::size_t end = 0;

  std::size_t length() const { return end - start; }
  bool operator==(const CharSpan&) const = default;
};

// Locale-free ASCII classification; bytes >= 0x80 are treated as plain
// word characters so UTF-8 passes through untouched.
bool is_ascii_space(char c);
bool is_ascii_punct(char c);
bool is_ascii_digit(char c);
bool is_ascii_alpha(char c);
bool is_ascii_upper(char c);
char ascii_lower(char c);

std::string to_lower(std::string_view s);

// All start offsets of case-insensitive matches of needle in haystack,
// ascending; overlapping matches count.
std::vector<std::size_t> find_all_ci(std::string_view haystack, std::string_view needle);

std::optional<std::size_t> find_ci(std::string_view haystack, std::string_view needle);

// Trims and collapses whitespace runs to single spaces. When out_map is
// given it receives, per output character, the index of the originating
// character in s (a space maps to the first whitespace char of its run).
std::string collapse_whitespace(std::string_view s, std::vector<std::size_t>* out_map = nullptr);

// Sentence segmentation: a sentence ends at '.', '!' or '?' that is followed
// by whitespace and then an uppercase letter or digit. Terminators inside
// matched round parentheses never end a sentence. Spans exclude the
// whitespace between sentences and cover the text otherwise.
std::vector<CharSpan> split_sentences(std::string_view text);

// Dedup key used when merging answer candidates: casefold + collapse
// internal whitespace. Distinct surface forms with one key are one answer.
std::string normalize_answer_key(std::string_view s);

// Comparison form for metrics: casefold, whitespace-collapsed, surrounding
// punctuation and whitespace stripped.
std::string normalize_for_match(std::string_view s);

}  // namespace bioqa
