#include <doctest.h>

#include "bioqa/errors.hpp"
#include "bioqa/postprocess.hpp"

using namespace bioqa;

TEST_CASE("merge combines duplicates by max probability") {
  auto m = merge("q1", {{{"JBP1", 0.6}}, {{"JBP1", 0.4}}});
  REQUIRE(m.candidates.size() == 1);
  CHECK(m.candidates[0].text == "JBP1");
  CHECK(m.candidates[0].probability == 0.6);

  // single pair: identity up to sorting
  auto single = merge("q1", {{{"b", 0.2}, {"a", 0.9}}});
  REQUIRE(single.candidates.size() == 2);
  CHECK(single.candidates[0].text == "a");

  // disjoint candidates: union, sorted
  auto disjoint = merge("q1", {{{"x", 0.5}}, {{"y", 0.7}}});
  REQUIRE(disjoint.candidates.size() == 2);
  CHECK(disjoint.candidates[0].text == "y");
}

TEST_CASE("merge deduplicates on the normalized key, keeping the best surface form") {
  auto m = merge("q1", {{{"P53  protein", 0.3}}, {{"p53 protein", 0.8}}});
  REQUIRE(m.candidates.size() == 1);
  CHECK(m.candidates[0].text == "p53 protein");
  CHECK(m.candidates[0].probability == 0.8);

  // near-duplicate surface forms with different punctuation stay separate
  auto distinct = merge("q1", {{{"DBA", 0.5}, {"Diamond-Blackfan anemia (DBA)", 0.4}}});
  CHECK(distinct.candidates.size() == 2);
}

TEST_CASE("merge is idempotent") {
  auto once = merge("q1", {{{"a", 0.9}, {"b", 0.3}}, {{"a", 0.2}, {"c", 0.3}}});
  auto twice = merge("q1", {once.candidates});
  REQUIRE(once.candidates.size() == twice.candidates.size());
  for (std::size_t i = 0; i < once.candidates.size(); ++i) {
    CHECK(once.candidates[i].text == twice.candidates[i].text);
    CHECK(once.candidates[i].probability == twice.candidates[i].probability);
  }
}

TEST_CASE("extract_answer_count finds a standalone request size") {
  CHECK(extract_answer_count("Please list 6 symptoms of Scarlet fever") == 6);
  CHECK(extract_answer_count("What causes puffy hand syndrome?") == std::nullopt);
  // an embedded digit must not match
  CHECK(extract_answer_count("Which 3 genes regulate X in IL-6 signaling?") == 3);
  CHECK(extract_answer_count("What does IL-6 signaling do?") == std::nullopt);
}

TEST_CASE("extract_answer_count: spelled-out numbers and adjacency rules") {
  CHECK(extract_answer_count("List three diseases caused by X") == 3);
  CHECK(extract_answer_count("Name TEN examples") == 10);
  CHECK(extract_answer_count("Is a three-fold increase typical?") == std::nullopt);
  CHECK(extract_answer_count("Does p53 bind DNA?") == std::nullopt);
  CHECK(extract_answer_count("List 12 drugs, or 6 classes") == 12);  // first match wins
  CHECK(extract_answer_count("What about a 0 result?") == std::nullopt);
}

TEST_CASE("filter_candidates: unbalanced parentheses are removed") {
  auto out = filter_candidates({{"(BRCA1", 0.9}, {"p53", 0.5}});
  REQUIRE(out.size() == 1);
  CHECK(out[0].text == "p53");
  auto out2 = filter_candidates({{"BRCA1)", 0.9}, {"a)(b", 0.8}});
  CHECK(out2.empty());
}

TEST_CASE("filter_candidates: wrapping parens and edge commas are stripped") {
  auto out = filter_candidates({{"(p53)", 0.9}, {",BRCA1,", 0.5}});
  REQUIRE(out.size() == 2);
  CHECK(out[0].text == "p53");
  CHECK(out[1].text == "BRCA1");

  // balanced but not wrapping: unchanged (appears in real predictions)
  auto fga = filter_candidates({{"fibrinogen A alpha chain (FGA)", 0.7}});
  REQUIRE(fga.size() == 1);
  CHECK(fga[0].text == "fibrinogen A alpha chain (FGA)");
}

TEST_CASE("filter_candidates: strips nested wrappers to a fixed point") {
  auto out = filter_candidates({{" ((p53)) ,", 0.4}});
  REQUIRE(out.size() == 1);
  CHECK(out[0].text == "p53");
  // emptied answers are dropped
  CHECK(filter_candidates({{"()", 0.4}, {",,", 0.2}}).empty());
}

TEST_CASE("filter_candidates re-deduplicates after stripping") {
  auto out = filter_candidates({{"(p53)", 0.3}, {"p53", 0.6}});
  REQUIRE(out.size() == 1);
  CHECK(out[0].probability == 0.6);
  // filtered output stays balanced and clean
  for (const auto& c : out) {
    CHECK(c.text.find("(") == std::string::npos);
    CHECK(c.text.front() != ',');
    CHECK(c.text.back() != ',');
  }
}

TEST_CASE("select_factoid returns at most five ranked texts") {
  MergedAnswers m;
  m.question_id = "q";
  m.candidates = {{"a", 0.9}, {"b", 0.5}};
  CHECK(select_factoid(m) == std::vector<std::string>{"a", "b"});

  m.candidates.clear();
  for (int i = 0; i < 7; ++i)
    m.candidates.push_back({"c" + std::to_string(i), 1.0 - 0.1 * i});
  CHECK(select_factoid(m).size() == 5);

  m.candidates.clear();
  CHECK(select_factoid(m).empty());
}

TEST_CASE("select_factoid tie-break is deterministic") {
  auto m = merge("q", {{{"beta", 0.5}, {"alpha", 0.5}}});
  auto top = select_factoid(m);
  REQUIRE(top.size() == 2);
  CHECK(top[0] == "alpha");  // equal probability, text ascending
}

TEST_CASE("select_list thresholds at 0.42 by default behavior") {
  MergedAnswers m;
  m.question_id = "q";
  m.candidates = {{"a", 0.9}, {"b", 0.5}, {"c", 0.3}};
  auto sel = select_list(m, 0.42);
  CHECK(sel.answers == std::vector<std::string>{"a", "b"});
  CHECK_FALSE(sel.used_fallback);
}

TEST_CASE("select_list with an extracted count caps the answers") {
  MergedAnswers m;
  m.question_id = "q";
  for (int i = 0; i < 9; ++i) m.candidates.push_back({"a" + std::to_string(i), 0.9 - 0.05 * i});
  auto sel = select_list(m, 0.42, 6);
  CHECK(sel.answers.size() == 6);
  auto more = select_list(m, 0.42, 20);
  CHECK(more.answers.size() == 9);  // min(count, #candidates)
}

TEST_CASE("select_list falls back to top-1 when nothing clears the threshold") {
  MergedAnswers m;
  m.question_id = "q";
  m.candidates = {{"a", 0.2}, {"b", 0.1}};
  auto sel = select_list(m, 0.42);
  CHECK(sel.answers == std::vector<std::string>{"a"});
  CHECK(sel.used_fallback);
  CHECK_THROWS_AS(select_list(m, 1.5), Error);
}

TEST_CASE("decide_yesno averages then cuts at one half") {
  CHECK(decide_yesno({0.9, 0.8}) == "yes");
  CHECK(decide_yesno({0.2}) == "no");
  CHECK(decide_yesno({0.4, 0.7}) == "yes");  // mean 0.55
  CHECK(decide_yesno({0.7, 0.4}) == "yes");  // permutation invariant
  CHECK(decide_yesno({0.5}) == "yes");       // boundary
  CHECK_THROWS_AS(decide_yesno({}), Error);
}

TEST_CASE("ensemble averages with absent answers contributing zero") {
  MergedAnswers m1{"q", {{"a", 0.8}, {"b", 0.9}}};
  MergedAnswers m2{"q", {{"a", 0.4}}};
  auto e = ensemble_merged({m1, m2});
  REQUIRE(e.candidates.size() == 2);
  CHECK(e.candidates[0].text == "a");
  CHECK(e.candidates[0].probability == doctest::Approx(0.6));
  CHECK(e.candidates[1].text == "b");
  CHECK(e.candidates[1].probability == doctest::Approx(0.45));

  // single model: identity
  auto id = ensemble_merged({m1});
  REQUIRE(id.candidates.size() == 2);
  CHECK(id.candidates[0].text == "b");
  CHECK(id.candidates[0].probability == doctest::Approx(0.9));

  CHECK_THROWS_AS(ensemble_merged({}), Error);
  CHECK(ensemble_yes_probability({0.6, 0.8}) == doctest::Approx(0.7));
  CHECK_THROWS_AS(ensemble_yes_probability({}), Error);
}
