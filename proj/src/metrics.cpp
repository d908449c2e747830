#include "bioqa/metrics.hpp"

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <json.hpp>

#include "bioqa/errors.hpp"
#include "bioqa/text.hpp"

namespace bioqa {

using nlohmann::json;

GoldStandard GoldStandard::from_bioasq(const ParsedQuestions& parsed) {
  GoldStandard gold;
  for (const auto& q : parsed.questions) {
    GoldQuestion g;
    g.id = q.id;
    g.qtype = q.qtype;
    g.answer_sets = q.exact_answers;
    g.yesno = q.yesno_answer;
    gold.questions.push_back(std::move(g));
  }
  return gold;
}

Predictions Predictions::from_submission_json(std::string_view json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("invalid answers JSON: ") + e.what());
  }
  if (!doc.is_object() || !doc.contains("questions"))
    throw ParseError("invalid answers JSON: missing \"questions\"");

  Predictions out;
  for (const auto& jq : doc["questions"]) {
    const std::string id = jq.value("id", "");
    if (!jq.contains("exact_answer")) continue;
    const json& ea = jq["exact_answer"];
    if (ea.is_string()) {
      out.yesno[id] = to_lower(ea.get<std::string>());
      continue;
    }
    std::vector<std::string> ranked;
    if (ea.is_array()) {
      for (const auto& item : ea) {
        if (item.is_string()) {
          ranked.push_back(item.get<std::string>());
        } else if (item.is_array()) {
          for (const auto& inner : item)
            if (inner.is_string()) {
              ranked.push_back(inner.get<std::string>());
              break;  // a list answer is a single-element synonym wrapper
            }
        }
      }
    }
    out.ranked[id] = std::move(ranked);
  }
  return out;
}

Predictions Predictions::from_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return from_submission_json(ss.str());
}

bool answers_match(std::string_view predicted, std::string_view gold) {
  return normalize_for_match(predicted) == normalize_for_match(gold);
}

namespace {

bool matches_any_synonym(std::string_view pred, const std::vector<std::string>& set) {
  return std::any_of(set.begin(), set.end(),
                     [&](const std::string& syn) { return answers_match(pred, syn); });
}

bool matches_any_set(std::string_view pred, const std::vector<std::vector<std::string>>& sets) {
  return std::any_of(sets.begin(), sets.end(),
                     [&](const auto& set) { return matches_any_synonym(pred, set); });
}

void warn_missing(std::vector<std::string>* warnings, const std::string& id) {
  if (warnings) warnings->push_back("question " + id + " missing from predictions, scored 0");
}

}  // namespace

FactoidScores factoid_metrics(const std::map<std::string, std::vector<std::string>>& preds,
                              const GoldStandard& gold, std::vector<FactoidRow>* rows,
                              std::vector<std::string>* warnings) {
  FactoidScores s;
  double strict = 0.0, lenient = 0.0, mrr = 0.0;
  for (const auto& g : gold.questions) {
    if (g.qtype != QType::factoid) continue;
    ++s.questions;
    int rank = 0;
    auto it = preds.find(g.id);
    if (it == preds.end()) {
      warn_missing(warnings, g.id);
    } else {
      const auto& ranked = it->second;
      for (std::size_t r = 0; r < ranked.size() && r < 5; ++r) {
        if (matches_any_set(ranked[r], g.answer_sets)) {
          rank = static_cast<int>(r) + 1;
          break;
        }
      }
    }
    if (rows) rows->push_back({g.id, rank});
    if (rank == 1) strict += 1.0;
    if (rank >= 1) {
      lenient += 1.0;
      mrr += 1.0 / rank;
    }
  }
  if (s.questions > 0) {
    s.strict_acc = strict / s.questions;
    s.lenient_acc = lenient / s.questions;
    s.mrr = mrr / s.questions;
  }
  return s;
}

ListScores list_metrics(const std::map<std::string, std::vector<std::string>>& preds,
                        const GoldStandard& gold, std::vector<ListRow>* rows,
                        std::vector<std::string>* warnings) {
  ListScores s;
  double sum_p = 0.0, sum_r = 0.0, sum_f1 = 0.0;
  for (const auto& g : gold.questions) {
    if (g.qtype != QType::list) continue;
    ++s.questions;
    double p = 0.0, r = 0.0, f1 = 0.0;
    auto it = preds.find(g.id);
    if (it == preds.end()) {
      warn_missing(warnings, g.id);
    } else if (!it->second.empty() && !g.answer_sets.empty()) {
      std::vector<bool> used(g.answer_sets.size(), false);
      std::size_t matched = 0;
      for (const auto& pred : it->second) {
        for (std::size_t k = 0; k < g.answer_sets.size(); ++k) {
          if (used[k]) continue;
          if (matches_any_synonym(pred, g.answer_sets[k])) {
            used[k] = true;
            ++matched;
            break;
          }
        }
      }
      p = static_cast<double>(matched) / it->second.size();
      r = static_cast<double>(matched) / g.answer_sets.size();
      f1 = (p + r > 0.0) ? 2.0 * p * r / (p + r) : 0.0;
    }
    if (rows) rows->push_back({g.id, p, r, f1});
    sum_p += p;
    sum_r += r;
    sum_f1 += f1;
  }
  if (s.questions > 0) {
    s.mean_precision = sum_p / s.questions;
    s.mean_recall = sum_r / s.questions;
    s.mean_f1 = sum_f1 / s.questions;
  }
  return s;
}

YesNoScores yesno_metrics(const std::map<std::string, std::string>& preds,
                          const GoldStandard& gold, std::vector<YesNoRow>* rows,
                          std::vector<std::string>* warnings) {
  YesNoScores s;
  // confusion counts per class; a missing prediction counts as the wrong class
  std::size_t tp_yes = 0, fp_yes = 0, fn_yes = 0;
  std::size_t tp_no = 0, fp_no = 0, fn_no = 0;
  std::size_t correct = 0;
  for (const auto& g : gold.questions) {
    if (g.qtype != QType::yesno || !g.yesno) continue;
    ++s.questions;
    std::string pred;
    auto it = preds.find(g.id);
    if (it == preds.end()) {
      warn_missing(warnings, g.id);
      pred = (*g.yesno == "yes") ? "no" : "yes";
    } else {
      pred = it->second;
    }
    if (rows) rows->push_back({g.id, *g.yesno, pred});
    const bool gold_yes = *g.yesno == "yes";
    const bool pred_yes = pred == "yes";
    if (pred == *g.yesno) ++correct;
    if (gold_yes && pred_yes) ++tp_yes;
    if (!gold_yes && pred_yes) ++fp_yes;
    if (gold_yes && !pred_yes) ++fn_yes;
    if (!gold_yes && !pred_yes) ++tp_no;
    if (gold_yes && !pred_yes) ++fp_no;
    if (!gold_yes && pred_yes) ++fn_no;
  }
  auto f1_of = [](std::size_t tp, std::size_t fp, std::size_t fn) {
    const double p = (tp + fp) ? static_cast<double>(tp) / (tp + fp) : 0.0;
    const double r = (tp + fn) ? static_cast<double>(tp) / (tp + fn) : 0.0;
    return (p + r > 0.0) ? 2.0 * p * r / (p + r) : 0.0;
  };
  if (s.questions > 0) {
    s.macro_f1 = (f1_of(tp_yes, fp_yes, fn_yes) + f1_of(tp_no, fp_no, fn_no)) / 2.0;
    s.accuracy = static_cast<double>(correct) / s.questions;
  }
  return s;
}

EvalReport evaluate(const Predictions& preds, const GoldStandard& gold) {
  EvalReport report;
  // a type is scored when the answers file covers at least one of its gold
  // questions; within a scored type, missing questions count as all-wrong
  bool has_factoid = false, has_list = false, has_yesno = false;
  for (const auto& g : gold.questions) {
    if (g.qtype == QType::factoid) has_factoid |= preds.ranked.count(g.id) > 0;
    if (g.qtype == QType::list) has_list |= preds.ranked.count(g.id) > 0;
    if (g.qtype == QType::yesno) has_yesno |= preds.yesno.count(g.id) > 0;
  }
  if (has_factoid)
    report.factoid = factoid_metrics(preds.ranked, gold, &report.factoid_rows, &report.warnings);
  if (has_list)
    report.list = list_metrics(preds.ranked, gold, &report.list_rows, &report.warnings);
  if (has_yesno)
    report.yesno = yesno_metrics(preds.yesno, gold, &report.yesno_rows, &report.warnings);
  return report;
}

EvalReport micro_average(const std::vector<EvalReport>& reports) {
  EvalReport out;
  double f_n = 0, f_sacc = 0, f_lacc = 0, f_mrr = 0;
  double l_n = 0, l_p = 0, l_r = 0, l_f1 = 0;
  double y_n = 0, y_f1 = 0, y_acc = 0;
  for (const auto& r : reports) {
    if (r.factoid) {
      f_n += r.factoid->questions;
      f_sacc += r.factoid->strict_acc * r.factoid->questions;
      f_lacc += r.factoid->lenient_acc * r.factoid->questions;
      f_mrr += r.factoid->mrr * r.factoid->questions;
    }
    if (r.list) {
      l_n += r.list->questions;
      l_p += r.list->mean_precision * r.list->questions;
      l_r += r.list->mean_recall * r.list->questions;
      l_f1 += r.list->mean_f1 * r.list->questions;
    }
    if (r.yesno) {
      y_n += r.yesno->questions;
      y_f1 += r.yesno->macro_f1 * r.yesno->questions;
      y_acc += r.yesno->accuracy * r.yesno->questions;
    }
    out.factoid_rows.insert(out.factoid_rows.end(), r.factoid_rows.begin(),
                            r.factoid_rows.end());
    out.list_rows.insert(out.list_rows.end(), r.list_rows.begin(), r.list_rows.end());
    out.yesno_rows.insert(out.yesno_rows.end(), r.yesno_rows.begin(), r.yesno_rows.end());
    out.warnings.insert(out.warnings.end(), r.warnings.begin(), r.warnings.end());
  }
  if (f_n > 0)
    out.factoid = FactoidScores{f_sacc / f_n, f_lacc / f_n, f_mrr / f_n,
                                static_cast<std::size_t>(f_n)};
  if (l_n > 0)
    out.list =
        ListScores{l_p / l_n, l_r / l_n, l_f1 / l_n, static_cast<std::size_t>(l_n)};
  if (y_n > 0)
    out.yesno = YesNoScores{y_f1 / y_n, y_acc / y_n, static_cast<std::size_t>(y_n)};
  return out;
}

std::string EvalReport::to_json() const {
  json root;
  if (factoid) {
    root["factoid"] = {{"strict_accuracy", factoid->strict_acc},
                       {"lenient_accuracy", factoid->lenient_acc},
                       {"mrr", factoid->mrr},
                       {"questions", factoid->questions}};
    json rows = json::array();
    for (const auto& r : factoid_rows) rows.push_back({{"id", r.id}, {"match_rank", r.match_rank}});
    root["factoid"]["per_question"] = std::move(rows);
  }
  if (list) {
    root["list"] = {{"mean_precision", list->mean_precision},
                    {"mean_recall", list->mean_recall},
                    {"mean_f1", list->mean_f1},
                    {"questions", list->questions}};
    json rows = json::array();
    for (const auto& r : list_rows)
      rows.push_back(
          {{"id", r.id}, {"precision", r.precision}, {"recall", r.recall}, {"f1", r.f1}});
    root["list"]["per_question"] = std::move(rows);
  }
  if (yesno) {
    root["yesno"] = {{"macro_f1", yesno->macro_f1},
                     {"accuracy", yesno->accuracy},
                     {"questions", yesno->questions}};
    json rows = json::array();
    for (const auto& r : yesno_rows)
      rows.push_back({{"id", r.id}, {"gold", r.gold}, {"predicted", r.predicted}});
    root["yesno"]["per_question"] = std::move(rows);
  }
  root["warnings"] = warnings;
  return root.dump(1);
}

std::string EvalReport::to_text() const {
  std::ostringstream os;
  os << std::fixed << std::setprecision(4);
  if (factoid) {
    os << "factoid  n=" << std::setw(5) << factoid->questions
       << "  SAcc=" << factoid->strict_acc << "  LAcc=" << factoid->lenient_acc
       << "  MRR=" << factoid->mrr << "\n";
  }
  if (list) {
    os << "list     n=" << std::setw(5) << list->questions << "  P=" << list->mean_precision
       << "     R=" << list->mean_recall << "     F1=" << list->mean_f1 << "\n";
  }
  if (yesno) {
    os << "yesno    n=" << std::setw(5) << yesno->questions << "  macroF1=" << yesno->macro_f1
       << "  acc=" << yesno->accuracy << "\n";
  }
  for (const auto& w : warnings) os << "warning: " << w << "\n";
  return os.str();
}

}  // namespace bioqa
