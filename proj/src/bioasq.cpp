#include "bioqa/bioasq.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "bioqa/errors.hpp"
#include "bioqa/text.hpp"

namespace bioqa {

using nlohmann::json;

const char* to_string(QType t) {
  switch (t) {
    case QType::factoid: return "factoid";
    case QType::list: return "list";
    case QType::yesno: return "yesno";
  }
  return "?";
}

std::optional<QType> qtype_from_string(std::string_view s) {
  if (s == "factoid") return QType::factoid;
  if (s == "list") return QType::list;
  if (s == "yesno") return QType::yesno;
  return std::nullopt;
}

std::string pmid_from_url(std::string_view url) {
  std::size_t pos = url.rfind('/');
  std::string_view tail = (pos == std::string_view::npos) ? url : url.substr(pos + 1);
  return std::string(tail);
}

namespace {

// exact_answer comes in several shapes across BioASQ releases: an array of
// strings (factoid synonyms), an array of arrays (one synonym set per list
// answer), or a bare string. Normalizes to synonym sets.
std::vector<std::vector<std::string>> parse_exact_answers(const json& ea, QType qtype) {
  std::vector<std::vector<std::string>> sets;
  if (ea.is_string()) {
    std::string s = ea.get<std::string>();
    if (!s.empty()) sets.push_back({std::move(s)});
    return sets;
  }
  if (!ea.is_array()) return sets;
  std::vector<std::string> loose;
  for (const auto& item : ea) {
    if (item.is_array()) {
      std::vector<std::string> set;
      for (const auto& syn : item)
        if (syn.is_string() && !syn.get<std::string>().empty()) set.push_back(syn.get<std::string>());
      if (!set.empty()) sets.push_back(std::move(set));
    } else if (item.is_string() && !item.get<std::string>().empty()) {
      loose.push_back(item.get<std::string>());
    }
  }
  if (!loose.empty()) {
    if (qtype == QType::factoid) {
      // loose strings on a factoid question are synonyms of the one answer
      sets.insert(sets.begin(), std::move(loose));
    } else {
      for (auto& s : loose) sets.push_back({std::move(s)});
    }
  }
  return sets;
}

}  // namespace

ParsedQuestions parse_bioasq(std::string_view json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("invalid BioASQ JSON: ") + e.what());
  }
  if (!doc.is_object() || !doc.contains("questions") || !doc["questions"].is_array())
    throw ParseError("invalid BioASQ JSON: expected top-level \"questions\" array");

  ParsedQuestions out;
  for (const auto& jq : doc["questions"]) {
    if (!jq.is_object()) {
      out.stats.warnings.push_back("skipping non-object question entry");
      continue;
    }
    const std::string id = jq.value("id", "");
    const std::string type = jq.value("type", "");
    if (type == "summary") {
      ++out.stats.summary_skipped;
      continue;
    }
    auto qtype = qtype_from_string(type);
    if (!qtype) {
      out.stats.warnings.push_back("question " + id + ": unknown type \"" + type + "\", skipped");
      continue;
    }

    BioASQQuestion q;
    q.id = id;
    q.body = jq.value("body", "");
    q.qtype = *qtype;

    if (jq.contains("exact_answer")) {
      const json& ea = jq["exact_answer"];
      if (q.qtype == QType::yesno) {
        if (ea.is_string()) {
          std::string label = to_lower(ea.get<std::string>());
          if (label == "yes" || label == "no") q.yesno_answer = label;
        }
      } else {
        q.exact_answers = parse_exact_answers(ea, q.qtype);
      }
    }

    if (jq.contains("snippets") && jq["snippets"].is_array()) {
      for (const auto& js : jq["snippets"]) {
        Snippet s;
        s.text = js.value("text", "");
        if (s.text.empty()) {
          out.stats.warnings.push_back("question " + id + ": empty snippet skipped");
          continue;
        }
        s.pmid = pmid_from_url(js.value("document", ""));
        s.begin_section = js.value("beginSection", "");
        s.offset_in_begin_section = js.value("offsetInBeginSection", -1L);
        q.snippets.push_back(std::move(s));
      }
    }
    if (jq.contains("documents") && jq["documents"].is_array()) {
      for (const auto& jd : jq["documents"])
        if (jd.is_string()) q.document_pmids.push_back(pmid_from_url(jd.get<std::string>()));
    }

    switch (q.qtype) {
      case QType::factoid: ++out.stats.factoid; break;
      case QType::list: ++out.stats.list; break;
      case QType::yesno: ++out.stats.yesno; break;
    }
    out.questions.push_back(std::move(q));
  }
  return out;
}

ParsedQuestions parse_bioasq_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_bioasq(ss.str());
}

}  // namespace bioqa
