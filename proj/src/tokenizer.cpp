#include "bioqa/tokenizer.hpp"

#include <algorithm>

#include "bioqa/errors.hpp"

namespace bioqa {

namespace {
constexpr std::size_t kMaxWordChars = 100;  // longer words collapse to [UNK]
}

std::vector<PreToken> pretokenize(std::string_view text) {
  std::vector<PreToken> out;
  std::size_t i = 0;
  const std::size_t n = text.size();
  while (i < n) {
    if (is_ascii_space(text[i])) {
      ++i;
      continue;
    }
    if (is_ascii_punct(text[i])) {
      out.push_back({std::string(1, ascii_lower(text[i])), i, i + 1});
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < n && !is_ascii_space(text[j]) && !is_ascii_punct(text[j])) ++j;
    out.push_back({to_lower(text.substr(i, j - i)), i, j});
    i = j;
  }
  return out;
}

namespace {

// Greedy longest-match-first decomposition of one lowercased word.
// Returns false when some suffix has no piece in the vocab.
bool split_word(const PreToken& word, const Vocab& vocab, std::vector<Piece>& out) {
  if (int id = vocab.id(word.text); id >= 0) {
    out.push_back({word.text, word.start, word.end});
    return true;
  }
  if (word.text.size() > kMaxWordChars) return false;
  std::vector<Piece> pieces;
  std::size_t pos = 0;
  const std::size_t len = word.text.size();
  while (pos < len) {
    std::size_t end = len;
    std::string found;
    while (end > pos) {
      std::string sub = word.text.substr(pos, end - pos);
      if (pos > 0) sub = "##" + sub;
      if (vocab.id(sub) >= 0) {
        found = std::move(sub);
        break;
      }
      --end;
    }
    if (found.empty()) return false;
    pieces.push_back({std::move(found), word.start + pos, word.start + end});
    pos = end;
  }
  out.insert(out.end(), pieces.begin(), pieces.end());
  return true;
}

std::vector<Piece> tokenize_with_spans(std::string_view text, const Vocab& vocab) {
  std::vector<Piece> out;
  for (const PreToken& word : pretokenize(text)) {
    if (!split_word(word, vocab, out)) out.push_back({"[UNK]", word.start, word.end});
  }
  return out;
}

}  // namespace

std::vector<std::string> wordpiece(std::string_view text, const Vocab& vocab) {
  std::vector<std::string> out;
  for (auto& piece : tokenize_with_spans(text, vocab)) out.push_back(std::move(piece.token));
  return out;
}

std::vector<Piece> wordpiece_with_spans(std::string_view text, const Vocab& vocab) {
  return tokenize_with_spans(text, vocab);
}

std::vector<bool> Feature::passage_mask() const {
  std::vector<bool> mask(input_ids.size(), false);
  for (std::size_t i = 0; i < token_char_spans.size(); ++i)
    if (token_char_spans[i]) mask[i] = true;
  return mask;
}

EncodeResult encode_pair(const std::string& pair_id, std::string_view question,
                         std::string_view context, const Vocab& vocab, const EncodeOptions& opt,
                         const std::optional<SpanSupervision>& span,
                         const std::optional<int>& yes_label) {
  const std::vector<std::string> q_tokens = wordpiece(question, vocab);
  const std::vector<Piece> ctx = wordpiece_with_spans(context, vocab);

  const int q_len = static_cast<int>(q_tokens.size());
  const int budget = opt.max_seq_len - q_len - 3;
  if (budget < 1)
    throw Error("encode_pair: max_seq_len " + std::to_string(opt.max_seq_len) +
                " leaves no room for the passage (question has " + std::to_string(q_len) +
                " tokens)");
  if (opt.doc_stride < 1 || opt.doc_stride >= budget)
    throw Error("encode_pair: doc_stride " + std::to_string(opt.doc_stride) +
                " must be in [1, window budget " + std::to_string(budget) + ")");

  // supervised char span -> passage token span, exact boundaries required
  int sup_start_tok = -1, sup_end_tok = -1;
  if (span) {
    const std::size_t a_start = span->answer_start;
    const std::size_t a_end = a_start + span->answer_text.size();
    for (std::size_t t = 0; t < ctx.size(); ++t) {
      if (ctx[t].start == a_start && sup_start_tok < 0) sup_start_tok = static_cast<int>(t);
      if (ctx[t].end == a_end) sup_end_tok = static_cast<int>(t);
    }
    if (sup_start_tok < 0 || sup_end_tok < sup_start_tok) {
      sup_start_tok = sup_end_tok = -1;  // tokenization cannot represent the span
    }
  }

  const int total = static_cast<int>(ctx.size());
  std::vector<int> window_starts;
  int s = 0;
  while (true) {
    window_starts.push_back(s);
    if (s + budget >= total) break;
    s += opt.doc_stride;
  }

  EncodeResult result;
  for (std::size_t w = 0; w < window_starts.size(); ++w) {
    const int w_start = window_starts[w];
    const int w_len = std::min(budget, total - w_start);

    Feature f;
    f.pair_id = pair_id;
    f.window_index = static_cast<int>(w);
    f.input_ids.assign(opt.max_seq_len, vocab.pad_id());
    f.segment_ids.assign(opt.max_seq_len, 0);
    f.token_char_spans.assign(opt.max_seq_len, std::nullopt);

    int pos = 0;
    f.input_ids[pos++] = vocab.cls_id();
    for (const auto& t : q_tokens) {
      int id = vocab.id(t);
      f.input_ids[pos++] = id >= 0 ? id : vocab.unk_id();
    }
    f.input_ids[pos++] = vocab.sep_id();
    const int passage_base = pos;
    for (int t = 0; t < w_len; ++t) {
      const Piece& piece = ctx[w_start + t];
      int id = vocab.id(piece.token);
      f.input_ids[pos] = id >= 0 ? id : vocab.unk_id();
      f.segment_ids[pos] = 1;
      f.token_char_spans[pos] = CharSpan{piece.start, piece.end};
      ++pos;
    }
    f.input_ids[pos] = vocab.sep_id();
    f.segment_ids[pos] = 1;
    ++pos;
    f.valid_len = pos;
    f.yes_label = yes_label;

    if (span) {
      const bool in_window = sup_start_tok >= w_start && sup_end_tok < w_start + w_len &&
                             sup_start_tok >= 0;
      if (!in_window) continue;  // training window without the answer
      f.start_position = passage_base + (sup_start_tok - w_start);
      f.end_position = passage_base + (sup_end_tok - w_start);
      result.span_mapped = true;
    }
    result.features.push_back(std::move(f));
  }
  return result;
}

std::string token_span_to_text(const Feature& feature, std::string_view context, int start,
                               int end) {
  if (start > end) throw Error("token_span_to_text: start > end");
  if (start < 0 || end >= static_cast<int>(feature.token_char_spans.size()))
    throw Error("token_span_to_text: position out of range");
  const auto& s = feature.token_char_spans[start];
  const auto& e = feature.token_char_spans[end];
  if (!s || !e)
    throw Error("token_span_to_text: position " + std::to_string(!s ? start : end) +
                " is not a passage token");
  return std::string(context.substr(s->start, e->end - s->start));
}

}  // namespace bioqa
