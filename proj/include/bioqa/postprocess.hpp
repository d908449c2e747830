#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace bioqa {

struct Candidate {
  std::string text;
  double probability = 0.0;
};

// Per-question candidate list, unique texts, probability descending.
struct MergedAnswers {
  std::string question_id;
  std::vector<Candidate> candidates;
};

// Cross-passage merge: union the per-pair candidate lists, combine
// duplicates (casefolded, whitespace-collapsed keys) by max probability
// keeping the best-scored surface form, sort descending (ties by text).
MergedAnswers merge(const std::string& question_id,
                    const std::vector<std::vector<Candidate>>& per_pair);

// First standalone number in the question: a digit run or a spelled-out
// one..ten with no letter, digit or hyphen attached on either side.
std::optional<int> extract_answer_count(std::string_view question);

// Drops candidates with unbalanced round brackets, then repeatedly strips
// wrapping "(...)" pairs plus leading/trailing commas and whitespace,
// drops emptied texts, and re-deduplicates keeping the max probability.
std::vector<Candidate> filter_candidates(std::vector<Candidate> cands);

// Top five candidates, rank one being the final answer.
std::vector<std::string> select_factoid(const MergedAnswers& m);

struct ListSelection {
  std::vector<std::string> answers;
  bool used_fallback = false;  // threshold produced nothing, top-1 emitted
};

// count present: the top-count candidates regardless of threshold;
// otherwise every candidate with probability strictly above threshold,
// falling back to the single best when none clears it.
ListSelection select_list(const MergedAnswers& m, double threshold,
                          std::optional<int> count = std::nullopt);

// Mean of the per-pair yes probabilities, cut at 0.5.
std::string decide_yesno(const std::vector<double>& pair_probabilities);

// Model ensembling: per answer text the arithmetic mean over models, an
// absent answer contributing zero.
MergedAnswers ensemble_merged(const std::vector<MergedAnswers>& per_model);
double ensemble_yes_probability(const std::vector<double>& per_model_means);

}  // namespace bioqa
