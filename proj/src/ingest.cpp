#include "bioqa/ingest.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <random>
#include <sstream>

#include <json.hpp>

#include "bioqa/errors.hpp"
#include "bioqa/text.hpp"

namespace bioqa {

using nlohmann::json;

const char* to_string(Strategy s) {
  switch (s) {
    case Strategy::snippet_asis: return "snippet_asis";
    case Strategy::full_abstract: return "full_abstract";
    case Strategy::appended_snippet: return "appended_snippet";
  }
  return "?";
}

std::optional<Strategy> strategy_from_string(std::string_view s) {
  if (s == "snippet_asis") return Strategy::snippet_asis;
  if (s == "full_abstract") return Strategy::full_abstract;
  if (s == "appended_snippet") return Strategy::appended_snippet;
  return std::nullopt;
}

std::string make_pair_id(const std::string& question_id, std::size_t passage, std::size_t match) {
  return question_id + "#" + std::to_string(passage) + "#" + std::to_string(match);
}

std::string question_id_of_pair(const std::string& pair_id) {
  std::size_t last = pair_id.rfind('#');
  if (last == std::string::npos) return pair_id;
  std::size_t prev = pair_id.rfind('#', last - 1);
  if (prev == std::string::npos) return pair_id;
  return pair_id.substr(0, prev);
}

std::vector<std::size_t> locate_answer_occurrences(std::string_view context,
                                                   std::string_view answer) {
  return find_all_ci(context, answer);
}

namespace {

struct Occurrence {
  std::size_t start;
  std::size_t length;
};

// Every occurrence of every synonym, one entry per distinct start offset
// (the first synonym to claim an offset wins), ascending.
std::vector<Occurrence> all_occurrences(std::string_view context,
                                        const std::vector<std::vector<std::string>>& sets) {
  std::map<std::size_t, std::size_t> by_start;
  for (const auto& set : sets)
    for (const auto& syn : set)
      for (std::size_t pos : find_all_ci(context, syn))
        by_start.emplace(pos, syn.size());
  std::vector<Occurrence> out;
  out.reserve(by_start.size());
  for (auto [start, len] : by_start) out.push_back({start, len});
  return out;
}

// The first occurrence of each synonym, deduplicated by start offset.
std::vector<Occurrence> first_occurrence_per_synonym(
    std::string_view region, const std::vector<std::vector<std::string>>& sets) {
  std::map<std::size_t, std::size_t> by_start;
  for (const auto& set : sets)
    for (const auto& syn : set)
      if (auto pos = find_ci(region, syn)) by_start.emplace(*pos, syn.size());
  std::vector<Occurrence> out;
  out.reserve(by_start.size());
  for (auto [start, len] : by_start) out.push_back({start, len});
  return out;
}

struct SnippetLocation {
  bool found = false;
  bool verbatim = false;
  CharSpan span;  // into Abstract::full_text
};

SnippetLocation locate_snippet(const Abstract& ab, const std::string& snippet_text) {
  SnippetLocation loc;
  std::size_t pos = ab.full_text.find(snippet_text);
  if (pos != std::string::npos) {
    loc.found = true;
    loc.verbatim = true;
    loc.span = {pos, pos + snippet_text.size()};
    return loc;
  }
  // whitespace drift: retry on collapsed text, mapping back to raw offsets
  std::vector<std::size_t> map;
  const std::string norm_full = collapse_whitespace(ab.full_text, &map);
  const std::string norm_snip = collapse_whitespace(snippet_text);
  if (norm_snip.empty()) return loc;
  auto norm_pos = find_ci(norm_full, norm_snip);
  if (!norm_pos) return loc;
  loc.found = true;
  loc.span = {map[*norm_pos], map[*norm_pos + norm_snip.size() - 1] + 1};
  return loc;
}

// Smallest sentence window that covers span and holds min(2*n_append + k,
// total) sentences, borrowing from the other side at text boundaries.
CharSpan extend_to_sentences(const Abstract& ab, CharSpan span, int n_append) {
  const auto& sents = ab.sentence_spans;
  if (sents.empty()) return {0, ab.full_text.size()};
  const long total = static_cast<long>(sents.size());
  long first = total - 1;
  for (long i = 0; i < total; ++i)
    if (sents[i].end > span.start) {
      first = i;
      break;
    }
  long last = 0;
  for (long i = total - 1; i >= 0; --i)
    if (sents[i].start < span.end) {
      last = i;
      break;
    }
  if (last < first) last = first;
  long lo = first - n_append;
  long hi = last + n_append;
  if (lo < 0) {
    hi += -lo;
    lo = 0;
  }
  if (hi >= total) {
    lo -= hi - (total - 1);
    hi = total - 1;
    if (lo < 0) lo = 0;
  }
  CharSpan ext{sents[lo].start, sents[hi].end};
  // keep the located snippet fully inside the passage
  ext.start = std::min(ext.start, span.start);
  ext.end = std::max(ext.end, span.end);
  return ext;
}

}  // namespace

std::vector<QAPair> build_pairs(const BioASQQuestion& q, const StrategyConfig& cfg,
                                AbstractStore* store, bool training, BuildStats* stats) {
  BuildStats local;
  BuildStats& st = stats ? *stats : local;
  const bool span_type = q.qtype != QType::yesno;

  if (training && !span_type && !q.yesno_answer)
    throw Error("question " + q.id + ": yesno question without gold label in training mode");
  if (training && span_type && q.exact_answers.empty())
    throw Error("question " + q.id + ": no exact answers in training mode");
  if (cfg.strategy != Strategy::snippet_asis && !store)
    throw Error("strategy " + std::string(to_string(cfg.strategy)) + " requires an abstract store");

  std::vector<QAPair> out;
  auto emit = [&](std::size_t passage, std::size_t match, std::string context,
                  std::vector<AnswerSpan> answers) {
    QAPair p;
    p.pair_id = make_pair_id(q.id, passage, match);
    p.question_id = q.id;
    p.question = q.body;
    p.context = std::move(context);
    p.answers = std::move(answers);
    p.qtype = q.qtype;
    if (!span_type && training) p.yesno_label = q.yesno_answer;
    out.push_back(std::move(p));
  };
  auto spans_from = [&](const std::string& context, const std::vector<Occurrence>& occ,
                        std::size_t base) {
    std::vector<AnswerSpan> spans;
    spans.reserve(occ.size());
    for (const auto& o : occ)
      spans.push_back({context.substr(base + o.start, o.length), base + o.start});
    return spans;
  };

  for (std::size_t pi = 0; pi < q.snippets.size(); ++pi) {
    const Snippet& sn = q.snippets[pi];

    if (cfg.strategy == Strategy::snippet_asis) {
      if (!training || !span_type) {
        emit(pi, 0, sn.text, {});
        continue;
      }
      auto occ = all_occurrences(sn.text, q.exact_answers);
      if (occ.empty()) {
        ++st.dropped_unanswerable;
        continue;
      }
      auto spans = spans_from(sn.text, occ, 0);
      for (std::size_t mi = 0; mi < spans.size(); ++mi) emit(pi, mi, sn.text, {spans[mi]});
      continue;
    }

    const Abstract& ab = store->get(sn.pmid);

    if (cfg.strategy == Strategy::full_abstract) {
      const std::string& context = ab.full_text;
      if (!training || !span_type) {
        emit(pi, 0, context, {});
        continue;
      }
      auto loc = locate_snippet(ab, sn.text);
      std::vector<AnswerSpan> spans;
      if (loc.found) {
        // offset addition: in-snippet answer offset + snippet offset
        std::string_view region(context.data() + loc.span.start, loc.span.length());
        spans = spans_from(context, first_occurrence_per_synonym(region, q.exact_answers),
                           loc.span.start);
      } else {
        ++st.snippets_not_found;
        spans = spans_from(context, first_occurrence_per_synonym(context, q.exact_answers), 0);
      }
      if (spans.empty()) {
        ++st.dropped_unanswerable;
        continue;
      }
      for (std::size_t mi = 0; mi < spans.size(); ++mi) emit(pi, mi, context, {spans[mi]});
      continue;
    }

    // appended_snippet
    auto loc = locate_snippet(ab, sn.text);
    if (!loc.found) {
      ++st.snippets_not_found;
      if (!training || !span_type) {
        emit(pi, 0, sn.text, {});  // cannot extend, keep the snippet itself
        continue;
      }
      auto anchors = first_occurrence_per_synonym(ab.full_text, q.exact_answers);
      if (anchors.empty()) {
        ++st.dropped_unanswerable;
        continue;
      }
      loc.found = true;
      loc.span = {anchors[0].start, anchors[0].start + anchors[0].length};
    }
    CharSpan ext = extend_to_sentences(ab, loc.span, cfg.n_append);
    std::string context = ab.full_text.substr(ext.start, ext.end - ext.start);
    if (!training || !span_type) {
      emit(pi, 0, std::move(context), {});
      continue;
    }
    std::string_view region(ab.full_text.data() + loc.span.start, loc.span.length());
    auto occ = first_occurrence_per_synonym(region, q.exact_answers);
    std::vector<AnswerSpan> spans;
    spans.reserve(occ.size());
    for (const auto& o : occ) {
      std::size_t rel = loc.span.start + o.start - ext.start;
      spans.push_back({context.substr(rel, o.length), rel});
    }
    if (spans.empty()) {
      ++st.dropped_unanswerable;
      continue;
    }
    for (std::size_t mi = 0; mi < spans.size(); ++mi) emit(pi, mi, context, {spans[mi]});
  }

  st.pairs += out.size();
  return out;
}

std::vector<QAPair> undersample_yesno(const std::vector<QAPair>& pairs, std::uint64_t seed) {
  std::vector<std::size_t> yes_idx, no_idx;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    if (pairs[i].qtype != QType::yesno || !pairs[i].yesno_label)
      throw Error("undersample_yesno: pair " + pairs[i].pair_id + " is not a labeled yesno pair");
    (*pairs[i].yesno_label == "yes" ? yes_idx : no_idx).push_back(i);
  }
  if (yes_idx.empty() || no_idx.empty())
    throw Error("undersample_yesno: cannot balance, one class is absent");

  const std::size_t keep = std::min(yes_idx.size(), no_idx.size());
  std::vector<std::size_t>& majority = yes_idx.size() > no_idx.size() ? yes_idx : no_idx;
  std::mt19937_64 rng(seed);
  for (std::size_t i = 0; i < keep; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, majority.size() - 1);
    std::swap(majority[i], majority[pick(rng)]);
  }
  std::vector<bool> kept(pairs.size(), false);
  const std::vector<std::size_t>& minority = yes_idx.size() > no_idx.size() ? no_idx : yes_idx;
  for (std::size_t i : minority) kept[i] = true;
  for (std::size_t i = 0; i < keep; ++i) kept[majority[i]] = true;

  std::vector<QAPair> out;
  out.reserve(2 * keep);
  for (std::size_t i = 0; i < pairs.size(); ++i)
    if (kept[i]) out.push_back(pairs[i]);
  return out;
}

std::string to_squad_json(const std::vector<QAPair>& pairs, bool training, QType empty_qtype) {
  json root;
  if (pairs.empty()) {
    root["version"] = empty_qtype == QType::yesno ? "v2.0" : "v1.1";
    root["qtype"] = to_string(empty_qtype);
    root["data"] = json::array();
    return root.dump(1);
  }
  const QType qt = pairs[0].qtype;
  for (const auto& p : pairs)
    if (p.qtype != qt) throw Error("to_squad_json: pairs are not homogeneous in qtype");

  root["version"] = qt == QType::yesno ? "v2.0" : "v1.1";
  root["qtype"] = to_string(qt);
  json paragraphs = json::array();
  for (const auto& p : pairs) {
    json qa;
    qa["id"] = p.pair_id;
    qa["question"] = p.question;
    json answers = json::array();
    if (qt != QType::yesno) {
      if (training && p.answers.empty())
        throw Error("to_squad_json: pair " + p.pair_id + " has no answers in training mode");
      for (const auto& a : p.answers)
        answers.push_back({{"text", a.text}, {"answer_start", a.answer_start}});
    }
    qa["answers"] = std::move(answers);
    if (qt == QType::yesno && p.yesno_label) {
      qa["is_impossible"] = (*p.yesno_label == "no");  // yes -> false, no -> true
      qa["bioasq_label"] = *p.yesno_label;
    }
    json para;
    para["context"] = p.context;
    para["qas"] = json::array({std::move(qa)});
    paragraphs.push_back(std::move(para));
  }
  json entry;
  entry["title"] = "BioASQ";
  entry["paragraphs"] = std::move(paragraphs);
  root["data"] = json::array({std::move(entry)});
  return root.dump(1);
}

SquadData from_squad_json(std::string_view json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("invalid SQuAD JSON: ") + e.what());
  }
  if (!doc.is_object() || !doc.contains("data"))
    throw ParseError("invalid SQuAD JSON: missing \"data\"");
  SquadData out;
  if (doc.contains("qtype")) {
    auto qt = qtype_from_string(doc["qtype"].get<std::string>());
    if (!qt) throw ParseError("invalid SQuAD JSON: unknown qtype");
    out.qtype = *qt;
  } else if (doc.value("version", "") == "v2.0") {
    out.qtype = QType::yesno;
  } else {
    throw ParseError("invalid SQuAD JSON: missing \"qtype\"");
  }

  for (const auto& entry : doc["data"]) {
    if (!entry.contains("paragraphs")) continue;
    for (const auto& para : entry["paragraphs"]) {
      const std::string context = para.value("context", "");
      for (const auto& qa : para["qas"]) {
        QAPair p;
        p.pair_id = qa.value("id", "");
        p.question_id = question_id_of_pair(p.pair_id);
        p.question = qa.value("question", "");
        p.context = context;
        p.qtype = out.qtype;
        if (qa.contains("answers")) {
          for (const auto& a : qa["answers"]) {
            AnswerSpan span;
            span.text = a.value("text", "");
            span.answer_start = a.value("answer_start", 0UL);
            p.answers.push_back(std::move(span));
          }
        }
        if (out.qtype == QType::yesno) {
          if (qa.contains("bioasq_label")) {
            p.yesno_label = qa["bioasq_label"].get<std::string>();
          } else if (qa.contains("is_impossible")) {
            p.yesno_label = qa["is_impossible"].get<bool>() ? "no" : "yes";
          }
        }
        out.has_labels = out.has_labels || !p.answers.empty() || p.yesno_label.has_value();
        out.pairs.push_back(std::move(p));
      }
    }
  }
  return out;
}

SquadData load_squad_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return from_squad_json(ss.str());
}

}  // namespace bioqa
