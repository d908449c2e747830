#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "bioqa/bioasq.hpp"

namespace bioqa {

struct GoldQuestion {
  std::string id;
  QType qtype = QType::factoid;
  std::vector<std::vector<std::string>> answer_sets;  // factoid/list synonym sets
  std::optional<std::string> yesno;                   // "yes" | "no"
};

struct GoldStandard {
  std::vector<GoldQuestion> questions;
  static GoldStandard from_bioasq(const ParsedQuestions& parsed);
};

// System output parsed from a BioASQ-submission-shaped answers file.
struct Predictions {
  std::map<std::string, std::vector<std::string>> ranked;  // factoid + list answers, in order
  std::map<std::string, std::string> yesno;
  static Predictions from_submission_json(std::string_view json_text);
  static Predictions from_file(const std::filesystem::path& path);
};

struct FactoidScores {
  double strict_acc = 0.0;
  double lenient_acc = 0.0;
  double mrr = 0.0;
  std::size_t questions = 0;
};

struct ListScores {
  double mean_precision = 0.0;
  double mean_recall = 0.0;
  double mean_f1 = 0.0;
  std::size_t questions = 0;
};

struct YesNoScores {
  double macro_f1 = 0.0;
  double accuracy = 0.0;
  std::size_t questions = 0;
};

struct FactoidRow {
  std::string id;
  int match_rank = 0;  // 1-based, 0 = no match in top 5
};
struct ListRow {
  std::string id;
  double precision = 0.0, recall = 0.0, f1 = 0.0;
};
struct YesNoRow {
  std::string id;
  std::string gold, predicted;
};

struct EvalReport {
  std::optional<FactoidScores> factoid;
  std::optional<ListScores> list;
  std::optional<YesNoScores> yesno;
  std::vector<FactoidRow> factoid_rows;
  std::vector<ListRow> list_rows;
  std::vector<YesNoRow> yesno_rows;
  std::vector<std::string> warnings;

  std::string to_json() const;
  std::string to_text() const;
};

// A prediction matches a gold synonym under the documented normalization
// (casefold, collapse whitespace, strip surrounding punctuation).
bool answers_match(std::string_view predicted, std::string_view gold);

FactoidScores factoid_metrics(const std::map<std::string, std::vector<std::string>>& preds,
                              const GoldStandard& gold,
                              std::vector<FactoidRow>* rows = nullptr,
                              std::vector<std::string>* warnings = nullptr);

// Greedy one-to-one matching: each predicted text consumes at most one gold
// synonym set.
ListScores list_metrics(const std::map<std::string, std::vector<std::string>>& preds,
                        const GoldStandard& gold, std::vector<ListRow>* rows = nullptr,
                        std::vector<std::string>* warnings = nullptr);

YesNoScores yesno_metrics(const std::map<std::string, std::string>& preds,
                          const GoldStandard& gold, std::vector<YesNoRow>* rows = nullptr,
                          std::vector<std::string>* warnings = nullptr);

EvalReport evaluate(const Predictions& preds, const GoldStandard& gold);

// Question-count weighted combination of per-batch reports.
EvalReport micro_average(const std::vector<EvalReport>& reports);

}  // namespace bioqa
