#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "bioqa/abstracts.hpp"
#include "bioqa/bioasq.hpp"

namespace bioqa {

enum class Strategy { snippet_asis, full_abstract, appended_snippet };

const char* to_string(Strategy s);
std::optional<Strategy> strategy_from_string(std::string_view s);

struct StrategyConfig {
  Strategy strategy = Strategy::snippet_asis;
  int n_append = 1;  // sentences added on each side under appended_snippet
};

struct AnswerSpan {
  std::string text;          // context substring, original casing
  std::size_t answer_start;  // character offset into context
};

// One question-passage unit in SQuAD-style form. pair_id is
// "<question id>#<passage ordinal>#<match ordinal>".
struct QAPair {
  std::string pair_id;
  std::string question_id;
  std::string question;
  std::string context;
  std::vector<AnswerSpan> answers;
  std::optional<std::string> yesno_label;  // "yes" | "no"
  QType qtype = QType::factoid;
};

std::string make_pair_id(const std::string& question_id, std::size_t passage, std::size_t match);
std::string question_id_of_pair(const std::string& pair_id);

struct BuildStats {
  std::size_t pairs = 0;
  std::size_t snippets_not_found = 0;    // snippet not locatable in its abstract
  std::size_t dropped_unanswerable = 0;  // factoid/list passage without any gold answer
};

// All start offsets of case-insensitive matches of answer in context.
std::vector<std::size_t> locate_answer_occurrences(std::string_view context,
                                                   std::string_view answer);

// Builds question-passage pairs for one question under the given strategy.
// training=true attaches supervision (answer offsets / yes-no labels) and
// drops factoid/list passages with no gold answer; training=false emits one
// unlabeled pair per passage. store may be null for snippet_asis.
std::vector<QAPair> build_pairs(const BioASQQuestion& q, const StrategyConfig& cfg,
                                AbstractStore* store, bool training,
                                BuildStats* stats = nullptr);

// Balances yes/no labels by downsampling the majority class uniformly at
// random under seed; input order is preserved. Throws when a class is absent.
std::vector<QAPair> undersample_yesno(const std::vector<QAPair>& pairs, std::uint64_t seed);

// SQuAD-format JSON. Factoid/list pairs emit the v1.1 shape; yes/no pairs
// the v2.0 shape with is_impossible yes->false / no->true plus the literal
// label in "bioasq_label". training=true rejects factoid/list pairs without
// answers. Pairs must be homogeneous in qtype; empty_qtype stamps the qtype
// field when there are no pairs to take it from.
std::string to_squad_json(const std::vector<QAPair>& pairs, bool training,
                          QType empty_qtype = QType::factoid);

struct SquadData {
  std::vector<QAPair> pairs;
  QType qtype = QType::factoid;
  bool has_labels = false;
};

SquadData from_squad_json(std::string_view json_text);
SquadData load_squad_file(const std::filesystem::path& path);

}  // namespace bioqa
