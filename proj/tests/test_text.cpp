#include <doctest.h>

#include "bioqa/text.hpp"

using namespace bioqa;

TEST_CASE("find_all_ci finds every case-insensitive occurrence") {
  CHECK(find_all_ci("ABC causes XYZ.", "XYZ") == std::vector<std::size_t>{11});
  CHECK(find_all_ci("X and X", "X") == std::vector<std::size_t>{0, 6});
  CHECK(find_all_ci("nothing here", "absent").empty());
  CHECK(find_all_ci("aAaA", "aa") == std::vector<std::size_t>{0, 1, 2});
  CHECK(find_all_ci("BRCA1 and brca1", "BrCa1") == std::vector<std::size_t>{0, 10});
}

TEST_CASE("collapse_whitespace trims and maps back to the source") {
  std::vector<std::size_t> map;
  CHECK(collapse_whitespace("  a \t b\n", &map) == "a b");
  REQUIRE(map.size() == 3);
  CHECK(map[0] == 2);  // 'a'
  CHECK(map[1] == 3);  // first ws of the run
  CHECK(map[2] == 6);  // 'b'
  CHECK(collapse_whitespace("") == "");
  CHECK(collapse_whitespace("   ") == "");
  CHECK(collapse_whitespace("one two") == "one two");
}

TEST_CASE("split_sentences on the hand-segmented fixture") {
  // title "A.", body "B c. D e." -> full text "A. B c. D e."
  auto spans = split_sentences("A. B c. D e.");
  REQUIRE(spans.size() == 3);
  CHECK(spans[0] == CharSpan{0, 2});
  CHECK(spans[1] == CharSpan{3, 7});
  CHECK(spans[2] == CharSpan{8, 12});
}

TEST_CASE("split_sentences needs whitespace plus uppercase or digit") {
  auto spans = split_sentences("Version 2.5 is out. It works! 3 bugs fixed? Yes.");
  REQUIRE(spans.size() == 4);
  CHECK(spans[0] == CharSpan{0, 19});
  CHECK(spans[1] == CharSpan{20, 29});
  CHECK(spans[2] == CharSpan{30, 43});
  CHECK(spans[3] == CharSpan{44, 48});
}

TEST_CASE("split_sentences never breaks inside matched parentheses") {
  auto spans = split_sentences("Alpha (see Fig. 2) beta. Gamma.");
  REQUIRE(spans.size() == 2);
  CHECK(spans[0] == CharSpan{0, 24});
  CHECK(spans[1] == CharSpan{25, 31});

  // an unmatched '(' creates no region
  auto stray = split_sentences("Alpha (broken. Beta here.");
  REQUIRE(stray.size() == 2);
}

TEST_CASE("split_sentences covers text without trailing whitespace") {
  auto spans = split_sentences("  One sentence only   ");
  REQUIRE(spans.size() == 1);
  CHECK(spans[0] == CharSpan{2, 19});
  CHECK(split_sentences("").empty());
  CHECK(split_sentences("   ").empty());
}

TEST_CASE("normalize_answer_key casefolds and collapses whitespace only") {
  CHECK(normalize_answer_key("Diamond-Blackfan  anemia") == "diamond-blackfan anemia");
  // near-duplicates with different surface punctuation stay distinct
  CHECK(normalize_answer_key("DBA") != normalize_answer_key("Diamond-Blackfan anemia (DBA)"));
}

TEST_CASE("normalize_for_match strips surrounding punctuation too") {
  CHECK(normalize_for_match("  (P53)  ") == "p53");
  CHECK(normalize_for_match("Diamond-Blackfan Anemia") == "diamond-blackfan anemia");
  CHECK(normalize_for_match("\"intravenous drug abuse\"") == "intravenous drug abuse");
  CHECK(normalize_for_match("p53.") == "p53");
  CHECK(normalize_for_match("...") == "");
}
