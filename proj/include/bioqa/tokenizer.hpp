#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "bioqa/text.hpp"
#include "bioqa/vocab.hpp"

namespace bioqa {

// Lowercased word-level token with its span in the original text.
// Punctuation characters become standalone pre-tokens.
struct PreToken {
  std::string text;
  std::size_t start = 0;
  std::size_t end = 0;
};

std::vector<PreToken> pretokenize(std::string_view text);

// A WordPiece with its character span in the original (uncased) text.
struct Piece {
  std::string token;
  std::size_t start = 0;
  std::size_t end = 0;
};

// Greedy longest-match-first subword split. Continuation pieces carry
// "##"; words with no decomposition collapse to [UNK].
std::vector<std::string> wordpiece(std::string_view text, const Vocab& vocab);
std::vector<Piece> wordpiece_with_spans(std::string_view text, const Vocab& vocab);

// One fixed-length window over a question-passage pair:
// [CLS] question [SEP] passage-window [SEP] [PAD]*.
struct Feature {
  std::string pair_id;
  int window_index = 0;
  std::vector<int> input_ids;    // length max_seq_len
  std::vector<int> segment_ids;  // 0 on [CLS]+question+[SEP] and padding, 1 on passage+[SEP]
  // Per position, the passage-token character span into the original
  // context; specials, question tokens and padding carry nullopt.
  std::vector<std::optional<CharSpan>> token_char_spans;
  int valid_len = 0;  // positions before padding
  std::optional<int> start_position;
  std::optional<int> end_position;
  std::optional<int> yes_label;

  // true on positions a span may start or end on
  std::vector<bool> passage_mask() const;
};

struct SpanSupervision {
  std::size_t answer_start = 0;  // char offset into context
  std::string answer_text;
};

struct EncodeOptions {
  int max_seq_len = 384;
  int doc_stride = 128;
};

struct EncodeResult {
  std::vector<Feature> features;
  bool span_mapped = false;  // some window carries the supervised span
};

// Splits long passages into overlapping windows advancing by doc_stride
// passage tokens. With span supervision, windows that cannot represent the
// exact answer span are dropped and span_mapped reports whether any window
// could; without supervision every window is kept.
EncodeResult encode_pair(const std::string& pair_id, std::string_view question,
                         std::string_view context, const Vocab& vocab, const EncodeOptions& opt,
                         const std::optional<SpanSupervision>& span = std::nullopt,
                         const std::optional<int>& yes_label = std::nullopt);

// Inverse alignment: the context substring covered by passage-token
// positions [start, end] of this feature. Throws on non-passage positions
// or start > end.
std::string token_span_to_text(const Feature& feature, std::string_view context, int start,
                               int end);

}  // namespace bioqa
