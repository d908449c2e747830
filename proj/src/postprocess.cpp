#include "bioqa/postprocess.hpp"

#include <algorithm>
#include <map>
#include <numeric>

#include "bioqa/errors.hpp"
#include "bioqa/text.hpp"

namespace bioqa {

namespace {

bool candidate_before(const Candidate& a, const Candidate& b) {
  if (a.probability != b.probability) return a.probability > b.probability;
  return a.text < b.text;
}

// Dedup by normalized key keeping the max probability; on a probability
// tie the earlier entry keeps its surface form.
std::vector<Candidate> dedup_and_sort(const std::vector<Candidate>& cands) {
  std::map<std::string, Candidate> best;
  for (const auto& c : cands) {
    const std::string key = normalize_answer_key(c.text);
    if (key.empty()) continue;
    auto it = best.find(key);
    if (it == best.end())
      best.emplace(key, c);
    else if (c.probability > it->second.probability)
      it->second = c;
  }
  std::vector<Candidate> out;
  out.reserve(best.size());
  for (auto& [key, c] : best) out.push_back(std::move(c));
  std::sort(out.begin(), out.end(), candidate_before);
  return out;
}

bool balanced_parens(std::string_view s) {
  int depth = 0;
  for (char c : s) {
    if (c == '(') ++depth;
    if (c == ')') {
      --depth;
      if (depth < 0) return false;
    }
  }
  return depth == 0;
}

// True when the whole text is one matched "(...)" pair.
bool wrapped_in_parens(std::string_view s) {
  if (s.size() < 2 || s.front() != '(' || s.back() != ')') return false;
  int depth = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '(') ++depth;
    if (s[i] == ')') {
      --depth;
      if (depth == 0) return i + 1 == s.size();
    }
  }
  return false;
}

std::string strip_answer(std::string_view s) {
  std::string_view t = s;
  while (true) {
    std::string_view before = t;
    while (!t.empty() && (is_ascii_space(t.front()) || t.front() == ',')) t.remove_prefix(1);
    while (!t.empty() && (is_ascii_space(t.back()) || t.back() == ',')) t.remove_suffix(1);
    if (wrapped_in_parens(t)) {
      t.remove_prefix(1);
      t.remove_suffix(1);
    }
    if (t == before) break;
  }
  return std::string(t);
}

}  // namespace

MergedAnswers merge(const std::string& question_id,
                    const std::vector<std::vector<Candidate>>& per_pair) {
  std::vector<Candidate> all;
  for (const auto& pair : per_pair) all.insert(all.end(), pair.begin(), pair.end());
  MergedAnswers m;
  m.question_id = question_id;
  m.candidates = dedup_and_sort(all);
  return m;
}

std::optional<int> extract_answer_count(std::string_view q) {
  static const std::map<std::string, int, std::less<>> words = {
      {"one", 1}, {"two", 2},   {"three", 3}, {"four", 4}, {"five", 5},
      {"six", 6}, {"seven", 7}, {"eight", 8}, {"nine", 9}, {"ten", 10}};
  const std::size_t n = q.size();
  auto attached = [&](std::size_t i, std::size_t j) {
    // adjacency to letters, digits or hyphens disqualifies a match
    if (i > 0) {
      char p = q[i - 1];
      if (is_ascii_alpha(p) || is_ascii_digit(p) || p == '-') return true;
    }
    if (j < n) {
      char c = q[j];
      if (is_ascii_alpha(c) || is_ascii_digit(c) || c == '-') return true;
    }
    return false;
  };
  std::size_t i = 0;
  while (i < n) {
    if (is_ascii_digit(q[i])) {
      std::size_t j = i;
      while (j < n && is_ascii_digit(q[j])) ++j;
      if (!attached(i, j) && j - i <= 6) {
        int value = 0;
        for (std::size_t k = i; k < j; ++k) value = value * 10 + (q[k] - '0');
        if (value > 0) return value;
      }
      i = j;
    } else if (is_ascii_alpha(q[i])) {
      std::size_t j = i;
      while (j < n && is_ascii_alpha(q[j])) ++j;
      if (!attached(i, j)) {
        auto it = words.find(to_lower(q.substr(i, j - i)));
        if (it != words.end()) return it->second;
      }
      i = j;
    } else {
      ++i;
    }
  }
  return std::nullopt;
}

std::vector<Candidate> filter_candidates(std::vector<Candidate> cands) {
  std::vector<Candidate> kept;
  kept.reserve(cands.size());
  for (auto& c : cands) {
    if (!balanced_parens(c.text)) continue;
    std::string stripped = strip_answer(c.text);
    if (stripped.empty()) continue;
    kept.push_back({std::move(stripped), c.probability});
  }
  return dedup_and_sort(kept);
}

std::vector<std::string> select_factoid(const MergedAnswers& m) {
  std::vector<std::string> out;
  for (const auto& c : m.candidates) {
    out.push_back(c.text);
    if (out.size() == 5) break;
  }
  return out;
}

ListSelection select_list(const MergedAnswers& m, double threshold, std::optional<int> count) {
  if (threshold <= 0.0 || threshold >= 1.0)
    throw Error("select_list: threshold must be in (0, 1)");
  ListSelection sel;
  if (count) {
    const int want = std::max(1, *count);
    for (const auto& c : m.candidates) {
      sel.answers.push_back(c.text);
      if (static_cast<int>(sel.answers.size()) == want) break;
    }
    return sel;
  }
  for (const auto& c : m.candidates)
    if (c.probability > threshold) sel.answers.push_back(c.text);
  if (sel.answers.empty() && !m.candidates.empty()) {
    sel.answers.push_back(m.candidates.front().text);
    sel.used_fallback = true;
  }
  return sel;
}

std::string decide_yesno(const std::vector<double>& pair_probabilities) {
  if (pair_probabilities.empty()) throw Error("decide_yesno: no pair probabilities");
  const double mean = std::accumulate(pair_probabilities.begin(), pair_probabilities.end(), 0.0) /
                      static_cast<double>(pair_probabilities.size());
  return mean >= 0.5 ? "yes" : "no";
}

MergedAnswers ensemble_merged(const std::vector<MergedAnswers>& per_model) {
  if (per_model.empty()) throw Error("ensemble: no models");
  const double n = static_cast<double>(per_model.size());

  struct Entry {
    double sum = 0.0;
    Candidate best;  // highest single-model probability, for the surface form
  };
  std::map<std::string, Entry> by_key;
  for (const auto& model : per_model) {
    for (const auto& c : model.candidates) {
      const std::string key = normalize_answer_key(c.text);
      if (key.empty()) continue;
      Entry& e = by_key[key];
      e.sum += c.probability;
      if (e.best.text.empty() || c.probability > e.best.probability) e.best = c;
    }
  }
  MergedAnswers out;
  out.question_id = per_model.front().question_id;
  for (auto& [key, e] : by_key) out.candidates.push_back({e.best.text, e.sum / n});
  std::sort(out.candidates.begin(), out.candidates.end(), candidate_before);
  return out;
}

double ensemble_yes_probability(const std::vector<double>& per_model_means) {
  if (per_model_means.empty()) throw Error("ensemble: no models");
  return std::accumulate(per_model_means.begin(), per_model_means.end(), 0.0) /
         static_cast<double>(per_model_means.size());
}

}  // namespace bioqa
