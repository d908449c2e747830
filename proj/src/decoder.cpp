#include "bioqa/decoder.hpp"

#include <algorithm>
#include <fstream>
#include <unordered_set>

#include <json.hpp>

#include "bioqa/errors.hpp"

namespace bioqa {

using nlohmann::json;

bool span_before(const SpanPrediction& a, const SpanPrediction& b) {
  if (a.probability != b.probability) return a.probability > b.probability;
  if (a.start_token != b.start_token) return a.start_token < b.start_token;
  const int alen = a.end_token - a.start_token;
  const int blen = b.end_token - b.start_token;
  if (alen != blen) return alen < blen;
  return a.window_index < b.window_index;
}

std::vector<SpanPrediction> nbest(const SpanDistributions& dists, const Feature& feature,
                                  std::string_view context, int k, int max_answer_tokens) {
  if (k < 1) throw Error("nbest: k must be >= 1");
  if (max_answer_tokens < 1) throw Error("nbest: max_answer_tokens must be >= 1");
  const int L = static_cast<int>(dists.p_start.size());
  const std::vector<bool> valid = feature.passage_mask();
  if (static_cast<int>(valid.size()) != L) throw Error("nbest: feature/distribution mismatch");

  std::vector<SpanPrediction> all;
  for (int i = 0; i < L; ++i) {
    if (!valid[i]) continue;
    const int j_max = std::min(L - 1, i + max_answer_tokens - 1);
    for (int j = i; j <= j_max; ++j) {
      if (!valid[j]) continue;
      SpanPrediction p;
      p.probability = dists.p_start[i] * dists.p_end[j];
      p.start_token = i;
      p.end_token = j;
      p.pair_id = feature.pair_id;
      p.window_index = feature.window_index;
      p.text = token_span_to_text(feature, context, i, j);
      all.push_back(std::move(p));
    }
  }
  std::stable_sort(all.begin(), all.end(), span_before);

  std::vector<SpanPrediction> out;
  std::unordered_set<std::string> seen;
  for (auto& p : all) {
    if (!seen.insert(p.text).second) continue;
    out.push_back(std::move(p));
    if (static_cast<int>(out.size()) == k) break;
  }
  return out;
}

std::vector<SpanPrediction> multi_window_collapse(
    const std::vector<std::vector<SpanPrediction>>& per_window) {
  std::vector<SpanPrediction> all;
  for (const auto& w : per_window) {
    for (const auto& p : w) {
      if (!all.empty() && p.pair_id != all.front().pair_id)
        throw Error("multi_window_collapse: mixed pair ids");
      all.push_back(p);
    }
  }
  std::stable_sort(all.begin(), all.end(), span_before);
  std::vector<SpanPrediction> out;
  std::unordered_set<std::string> seen;
  for (auto& p : all)
    if (seen.insert(p.text).second) out.push_back(std::move(p));
  return out;
}

LogitsMap read_logits_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("logits: cannot open " + path.string());
  LogitsMap out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ParseError("logits: bad JSON at " + path.string() + ":" + std::to_string(lineno) +
                       ": " + e.what());
    }
    LogitsRecord rec;
    rec.pair_id = j.at("pair_id").get<std::string>();
    rec.window_index = j.value("window_index", 0);
    rec.start_logits = j.at("start_logits").get<std::vector<double>>();
    rec.end_logits = j.at("end_logits").get<std::vector<double>>();
    rec.cls_logit = j.value("cls_logit", 0.0);
    if (rec.start_logits.size() != rec.end_logits.size())
      throw ParseError("logits: start/end length mismatch at " + path.string() + ":" +
                       std::to_string(lineno));
    out[{rec.pair_id, rec.window_index}] = std::move(rec);
  }
  return out;
}

SpanDistributions replay_span_distributions(const LogitsRecord& rec,
                                            const std::vector<bool>& valid_mask) {
  if (rec.start_logits.size() != valid_mask.size())
    throw Error("logits: record for " + rec.pair_id + " window " +
                std::to_string(rec.window_index) + " has " +
                std::to_string(rec.start_logits.size()) + " logits, feature expects " +
                std::to_string(valid_mask.size()));
  SpanDistributions d;
  d.p_start = masked_softmax(rec.start_logits, valid_mask);
  d.p_end = masked_softmax(rec.end_logits, valid_mask);
  return d;
}

}  // namespace bioqa
