#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "bioqa/heads.hpp"
#include "bioqa/tokenizer.hpp"

namespace bioqa {

struct SpanPrediction {
  std::string text;
  double probability = 0.0;  // p_start[start] * p_end[end]
  int start_token = 0;
  int end_token = 0;
  std::string pair_id;
  int window_index = 0;
};

// Total order used everywhere spans are ranked: probability descending,
// then earlier start, then shorter span, then earlier window.
bool span_before(const SpanPrediction& a, const SpanPrediction& b);

// Top-k spans by p_start[i] * p_end[j] over valid i <= j < i +
// max_answer_tokens. Duplicate texts keep only their highest-probability
// instance; deduplication happens before the cut to k.
std::vector<SpanPrediction> nbest(const SpanDistributions& dists, const Feature& feature,
                                  std::string_view context, int k, int max_answer_tokens);

// Merges the per-window n-best lists of one pair: concatenate, dedup by
// text keeping the max probability, re-sort descending.
std::vector<SpanPrediction> multi_window_collapse(
    const std::vector<std::vector<SpanPrediction>>& per_window);

// One externally computed record per feature window, JSON-lines:
//   {"pair_id": ..., "window_index": ..., "start_logits": [...],
//    "end_logits": [...], "cls_logit": ...}
struct LogitsRecord {
  std::string pair_id;
  int window_index = 0;
  std::vector<double> start_logits;
  std::vector<double> end_logits;
  double cls_logit = 0.0;
};

using LogitsMap = std::map<std::pair<std::string, int>, LogitsRecord>;

LogitsMap read_logits_jsonl(const std::filesystem::path& path);

// Applies the heads' masked softmax to replayed logits.
SpanDistributions replay_span_distributions(const LogitsRecord& rec,
                                            const std::vector<bool>& valid_mask);

}  // namespace bioqa
