#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "bioqa/checkpoint.hpp"
#include "bioqa/decoder.hpp"
#include "bioqa/ingest.hpp"
#include "bioqa/postprocess.hpp"

namespace bioqa {

struct PredictConfig {
  QType qtype = QType::factoid;
  int k = 20;
  int max_answer_tokens = 30;
  double threshold = 0.42;
  EncodeOptions encode;
  int jobs = 1;
};

struct QuestionPrediction {
  std::string id;
  QType qtype = QType::factoid;
  std::string question;
  MergedAnswers merged;  // cross-passage merged + filtered candidates
  std::vector<std::string> final_answers;
  std::optional<int> count_hint;
  bool list_fallback = false;
  double yes_probability = 0.0;
  std::string yesno_answer;
  std::vector<std::string> pair_ids;
};

// Runs encode -> span/cls scores -> n-best -> window collapse -> merge ->
// filter -> selection for every question in pairs. Exactly one of model /
// replay must be set. Questions are processed independently (cfg.jobs
// threads) and returned sorted by question id.
std::vector<QuestionPrediction> run_predict(const std::vector<QAPair>& pairs, const Vocab& vocab,
                                            const ModelParams* model, const LogitsMap* replay,
                                            const PredictConfig& cfg);

// Averages per-model merged candidates (absent answers contribute zero) and
// yes probabilities, then re-runs answer selection.
std::vector<QuestionPrediction> run_ensemble(
    const std::vector<std::vector<QuestionPrediction>>& models, double threshold);

// BioASQ-submission-shaped answers file.
void write_answers_json(const std::filesystem::path& path,
                        const std::vector<QuestionPrediction>& preds);

// Audit record: per-question merged candidates with probabilities; also the
// ensemble interchange format.
void write_nbest_json(const std::filesystem::path& path,
                      const std::vector<QuestionPrediction>& preds);
std::vector<QuestionPrediction> read_nbest_json(const std::filesystem::path& path);

}  // namespace bioqa
