#include "bioqa/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "bioqa/errors.hpp"
#include "bioqa/text.hpp"

namespace bioqa {

using nlohmann::json;

namespace {

SpanDistributions window_distributions(const Feature& f, const ModelParams* model,
                                       const LogitsMap* replay) {
  if (model) {
    EncoderOutput out = encoder_forward(model->encoder, f);
    return span_distributions(out, model->heads, f.passage_mask());
  }
  auto it = replay->find({f.pair_id, f.window_index});
  if (it == replay->end())
    throw Error("logits: no record for pair " + f.pair_id + " window " +
                std::to_string(f.window_index));
  return replay_span_distributions(it->second, f.passage_mask());
}

double window_yes_probability(const Feature& f, const ModelParams* model,
                              const LogitsMap* replay) {
  if (model) {
    EncoderOutput out = encoder_forward(model->encoder, f);
    return yes_probability(out, model->heads);
  }
  auto it = replay->find({f.pair_id, f.window_index});
  if (it == replay->end())
    throw Error("logits: no record for pair " + f.pair_id + " window " +
                std::to_string(f.window_index));
  return 1.0 / (1.0 + std::exp(-it->second.cls_logit));
}

QuestionPrediction predict_question(const std::string& qid,
                                    const std::vector<const QAPair*>& pairs, const Vocab& vocab,
                                    const ModelParams* model, const LogitsMap* replay,
                                    const PredictConfig& cfg) {
  QuestionPrediction qp;
  qp.id = qid;
  qp.qtype = cfg.qtype;
  qp.question = pairs.front()->question;

  if (cfg.qtype == QType::yesno) {
    std::vector<double> pair_probs;
    for (const QAPair* p : pairs) {
      qp.pair_ids.push_back(p->pair_id);
      EncodeResult enc = encode_pair(p->pair_id, p->question, p->context, vocab, cfg.encode);
      double sum = 0.0;
      for (const Feature& f : enc.features) sum += window_yes_probability(f, model, replay);
      if (!enc.features.empty()) pair_probs.push_back(sum / enc.features.size());
    }
    qp.yes_probability = pair_probs.empty()
                             ? 0.0
                             : std::accumulate(pair_probs.begin(), pair_probs.end(), 0.0) /
                                   pair_probs.size();
    qp.yesno_answer = pair_probs.empty() ? "no" : decide_yesno(pair_probs);
    return qp;
  }

  std::vector<std::vector<Candidate>> per_pair;
  for (const QAPair* p : pairs) {
    qp.pair_ids.push_back(p->pair_id);
    EncodeResult enc = encode_pair(p->pair_id, p->question, p->context, vocab, cfg.encode);
    std::vector<std::vector<SpanPrediction>> per_window;
    for (const Feature& f : enc.features) {
      SpanDistributions dists = window_distributions(f, model, replay);
      per_window.push_back(nbest(dists, f, p->context, cfg.k, cfg.max_answer_tokens));
    }
    std::vector<Candidate> cands;
    for (const SpanPrediction& sp : multi_window_collapse(per_window))
      cands.push_back({sp.text, sp.probability});
    per_pair.push_back(std::move(cands));
  }

  MergedAnswers merged = merge(qid, per_pair);
  merged.candidates = filter_candidates(std::move(merged.candidates));
  qp.merged = std::move(merged);

  if (cfg.qtype == QType::factoid) {
    qp.final_answers = select_factoid(qp.merged);
  } else {
    qp.count_hint = extract_answer_count(qp.question);
    ListSelection sel = select_list(qp.merged, cfg.threshold, qp.count_hint);
    qp.final_answers = std::move(sel.answers);
    qp.list_fallback = sel.used_fallback;
  }
  return qp;
}

}  // namespace

std::vector<QuestionPrediction> run_predict(const std::vector<QAPair>& pairs, const Vocab& vocab,
                                            const ModelParams* model, const LogitsMap* replay,
                                            const PredictConfig& cfg) {
  if ((model == nullptr) == (replay == nullptr))
    throw Error("run_predict: exactly one of model / logits replay must be given");

  std::map<std::string, std::vector<const QAPair*>> by_question;
  for (const QAPair& p : pairs) by_question[p.question_id].push_back(&p);

  std::vector<std::pair<const std::string*, const std::vector<const QAPair*>*>> work;
  work.reserve(by_question.size());
  for (const auto& [qid, qpairs] : by_question) work.emplace_back(&qid, &qpairs);

  std::vector<QuestionPrediction> results(work.size());
  const int jobs = std::max(1, std::min<int>(cfg.jobs, static_cast<int>(work.size())));

  if (jobs == 1) {
    for (std::size_t i = 0; i < work.size(); ++i)
      results[i] = predict_question(*work[i].first, *work[i].second, vocab, model, replay, cfg);
  } else {
    std::vector<std::thread> threads;
    std::vector<std::exception_ptr> errors(jobs);
    for (int t = 0; t < jobs; ++t) {
      threads.emplace_back([&, t]() {
        try {
          for (std::size_t i = t; i < work.size(); i += jobs)
            results[i] =
                predict_question(*work[i].first, *work[i].second, vocab, model, replay, cfg);
        } catch (...) {
          errors[t] = std::current_exception();
        }
      });
    }
    for (auto& th : threads) th.join();
    for (auto& e : errors)
      if (e) std::rethrow_exception(e);
  }
  return results;  // by_question was id-ordered, so results are too
}

std::vector<QuestionPrediction> run_ensemble(
    const std::vector<std::vector<QuestionPrediction>>& models, double threshold) {
  if (models.empty()) throw Error("ensemble: no models");

  std::map<std::string, std::vector<const QuestionPrediction*>> by_id;
  for (const auto& model : models)
    for (const auto& qp : model) by_id[qp.id].push_back(&qp);

  std::vector<QuestionPrediction> out;
  for (const auto& [id, entries] : by_id) {
    const QuestionPrediction& first = *entries.front();
    for (const auto* e : entries)
      if (e->qtype != first.qtype)
        throw Error("ensemble: question " + id + " has conflicting qtypes across models");

    QuestionPrediction qp;
    qp.id = id;
    qp.qtype = first.qtype;
    qp.question = first.question;

    if (qp.qtype == QType::yesno) {
      std::vector<double> means;
      for (const auto* e : entries) means.push_back(e->yes_probability);
      qp.yes_probability = ensemble_yes_probability(means);
      qp.yesno_answer = qp.yes_probability >= 0.5 ? "yes" : "no";
      out.push_back(std::move(qp));
      continue;
    }

    // absent answers contribute zero, so average over the full model count
    std::vector<MergedAnswers> merged_lists;
    for (const auto* e : entries) merged_lists.push_back(e->merged);
    for (std::size_t i = entries.size(); i < models.size(); ++i)
      merged_lists.push_back(MergedAnswers{id, {}});
    qp.merged = ensemble_merged(merged_lists);

    if (qp.qtype == QType::factoid) {
      qp.final_answers = select_factoid(qp.merged);
    } else {
      qp.count_hint = first.count_hint ? first.count_hint : extract_answer_count(qp.question);
      ListSelection sel = select_list(qp.merged, threshold, qp.count_hint);
      qp.final_answers = std::move(sel.answers);
      qp.list_fallback = sel.used_fallback;
    }
    out.push_back(std::move(qp));
  }
  return out;
}

void write_answers_json(const std::filesystem::path& path,
                        const std::vector<QuestionPrediction>& preds) {
  json questions = json::array();
  for (const auto& qp : preds) {
    json jq;
    jq["id"] = qp.id;
    jq["type"] = to_string(qp.qtype);
    switch (qp.qtype) {
      case QType::factoid: {
        jq["exact_answer"] = qp.final_answers;
        break;
      }
      case QType::list: {
        json lists = json::array();
        for (const auto& a : qp.final_answers) lists.push_back(json::array({a}));
        jq["exact_answer"] = std::move(lists);
        break;
      }
      case QType::yesno: {
        jq["exact_answer"] = qp.yesno_answer;
        break;
      }
    }
    questions.push_back(std::move(jq));
  }
  json root;
  root["questions"] = std::move(questions);
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << root.dump(1) << "\n";
}

void write_nbest_json(const std::filesystem::path& path,
                      const std::vector<QuestionPrediction>& preds) {
  json questions = json::array();
  for (const auto& qp : preds) {
    json jq;
    jq["id"] = qp.id;
    jq["qtype"] = to_string(qp.qtype);
    jq["question"] = qp.question;
    json cands = json::array();
    for (const auto& c : qp.merged.candidates)
      cands.push_back({{"text", c.text}, {"probability", c.probability}});
    jq["candidates"] = std::move(cands);
    if (qp.qtype == QType::yesno) jq["yes_probability"] = qp.yes_probability;
    if (qp.count_hint) jq["count_hint"] = *qp.count_hint;
    if (qp.list_fallback) jq["list_fallback"] = true;
    jq["pairs"] = qp.pair_ids;
    questions.push_back(std::move(jq));
  }
  json root;
  root["questions"] = std::move(questions);
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << root.dump(1) << "\n";
}

std::vector<QuestionPrediction> read_nbest_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path.string());
  json root;
  try {
    root = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError("invalid nbest JSON in " + path.string() + ": " + e.what());
  }
  std::vector<QuestionPrediction> out;
  for (const auto& jq : root.at("questions")) {
    QuestionPrediction qp;
    qp.id = jq.value("id", "");
    auto qt = qtype_from_string(jq.value("qtype", ""));
    if (!qt) throw ParseError("nbest entry " + qp.id + ": missing qtype");
    qp.qtype = *qt;
    qp.question = jq.value("question", "");
    qp.merged.question_id = qp.id;
    if (jq.contains("candidates"))
      for (const auto& jc : jq["candidates"])
        qp.merged.candidates.push_back(
            {jc.value("text", ""), jc.value("probability", 0.0)});
    qp.yes_probability = jq.value("yes_probability", 0.0);
    if (jq.contains("count_hint")) qp.count_hint = jq["count_hint"].get<int>();
    out.push_back(std::move(qp));
  }
  return out;
}

}  // namespace bioqa
