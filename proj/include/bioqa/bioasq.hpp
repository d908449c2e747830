#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace bioqa {

enum class QType { factoid, list, yesno };

const char* to_string(QType t);
std::optional<QType> qtype_from_string(std::string_view s);

struct Snippet {
  std::string text;
  std::string pmid;
  std::string begin_section;
  long offset_in_begin_section = -1;
};

// One challenge question. exact_answers holds synonym sets: a factoid
// question has one set of synonyms, a list question one set per expected
// answer. Yes/no questions carry yesno_answer instead.
struct BioASQQuestion {
  std::string id;
  std::string body;
  QType qtype = QType::factoid;
  std::vector<std::vector<std::string>> exact_answers;
  std::optional<std::string> yesno_answer;  // "yes" | "no"
  std::vector<Snippet> snippets;
  std::vector<std::string> document_pmids;
};

struct ParseStats {
  std::size_t factoid = 0;
  std::size_t list = 0;
  std::size_t yesno = 0;
  std::size_t summary_skipped = 0;
  std::vector<std::string> warnings;
};

struct ParsedQuestions {
  std::vector<BioASQQuestion> questions;
  ParseStats stats;
};

// Parses a BioASQ challenge JSON document ({"questions": [...]}). Summary
// questions are skipped and counted; unknown question types are skipped
// with a per-question warning. Throws ParseError on malformed input.
ParsedQuestions parse_bioasq(std::string_view json_text);
ParsedQuestions parse_bioasq_file(const std::filesystem::path& path);

// "http://www.ncbi.nlm.nih.gov/pubmed/23687635" -> "23687635". A value
// without '/' is returned as-is.
std::string pmid_from_url(std::string_view url);

}  // namespace bioqa
