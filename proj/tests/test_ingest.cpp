#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <set>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "bioqa/abstracts.hpp"
#include "bioqa/bioasq.hpp"
#include "bioqa/errors.hpp"
#include "bioqa/ingest.hpp"

using namespace bioqa;

namespace {

const char* kSyntheticBioasq = R"JSON({
  "questions": [
    {
      "id": "q1",
      "type": "factoid",
      "body": "What causes puffy hand syndrome?",
      "exact_answer": ["intravenous drug abuse"],
      "documents": ["http://www.ncbi.nlm.nih.gov/pubmed/11111111"],
      "snippets": [
        {"text": "Puffy hand syndrome is a complication of intravenous drug abuse.",
         "document": "http://www.ncbi.nlm.nih.gov/pubmed/11111111",
         "offsetInBeginSection": 0, "beginSection": "abstract"},
        {"text": "No relevant content here.",
         "document": "http://www.ncbi.nlm.nih.gov/pubmed/22222222",
         "offsetInBeginSection": 0, "beginSection": "abstract"}
      ]
    },
    {
      "id": "q2",
      "type": "yesno",
      "body": "Is the sky blue?",
      "exact_answer": "yes",
      "snippets": [
        {"text": "The sky is blue.", "document": "pubmed/33333333"},
        {"text": "Sky color discussion.", "document": "pubmed/33333333"},
        {"text": "Blue is a color.", "document": "pubmed/44444444"}
      ]
    },
    {
      "id": "q3",
      "type": "summary",
      "body": "Summarize something."
    }
  ]
})JSON";

BioASQQuestion make_factoid(const std::string& id,
                            std::vector<std::vector<std::string>> answers,
                            std::vector<Snippet> snippets) {
  BioASQQuestion q;
  q.id = id;
  q.body = "What is it?";
  q.qtype = QType::factoid;
  q.exact_answers = std::move(answers);
  q.snippets = std::move(snippets);
  return q;
}

}  // namespace

TEST_CASE("parse_bioasq on an empty question array") {
  auto parsed = parse_bioasq(R"({"questions": []})");
  CHECK(parsed.questions.empty());
  CHECK(parsed.stats.factoid == 0);
}

TEST_CASE("parse_bioasq on the synthetic fixture") {
  auto parsed = parse_bioasq(kSyntheticBioasq);
  REQUIRE(parsed.questions.size() == 2);
  CHECK(parsed.stats.factoid == 1);
  CHECK(parsed.stats.yesno == 1);
  CHECK(parsed.stats.summary_skipped == 1);

  const auto& q1 = parsed.questions[0];
  CHECK(q1.id == "q1");
  CHECK(q1.qtype == QType::factoid);
  REQUIRE(q1.snippets.size() == 2);
  CHECK(q1.snippets[0].pmid == "11111111");
  REQUIRE(q1.exact_answers.size() == 1);
  CHECK(q1.exact_answers[0][0] == "intravenous drug abuse");
  CHECK(q1.document_pmids == std::vector<std::string>{"11111111"});

  const auto& q2 = parsed.questions[1];
  CHECK(q2.qtype == QType::yesno);
  REQUIRE(q2.yesno_answer.has_value());
  CHECK(*q2.yesno_answer == "yes");
  CHECK(q2.exact_answers.empty());
  CHECK(q2.snippets.size() == 3);
}

TEST_CASE("parse_bioasq rejects malformed JSON and unknown types") {
  CHECK_THROWS_AS(parse_bioasq("{not json"), ParseError);
  CHECK_THROWS_AS(parse_bioasq(R"({"nope": 1})"), ParseError);
  auto parsed = parse_bioasq(
      R"({"questions": [{"id": "x", "type": "essay", "body": "?"}]})");
  CHECK(parsed.questions.empty());
  REQUIRE(parsed.stats.warnings.size() == 1);
  CHECK(parsed.stats.warnings[0].find("unknown type") != std::string::npos);
}

TEST_CASE("list exact_answer arrays of arrays become synonym sets") {
  auto parsed = parse_bioasq(R"({"questions": [{
    "id": "l1", "type": "list", "body": "Which?",
    "exact_answer": [["JBP1"], ["JBP2", "base J binding protein 2"], ["JGT"]]
  }]})");
  REQUIRE(parsed.questions.size() == 1);
  const auto& sets = parsed.questions[0].exact_answers;
  REQUIRE(sets.size() == 3);
  CHECK(sets[1].size() == 2);
}

TEST_CASE("make_abstract computes full_text and sentence spans") {
  Abstract a = make_abstract("1", "A.", "B c. D e.");
  CHECK(a.full_text == "A. B c. D e.");
  REQUIRE(a.sentence_spans.size() == 3);
  CHECK(a.sentence_spans[0] == CharSpan{0, 2});
  CHECK(a.sentence_spans[1] == CharSpan{3, 7});
  CHECK(a.sentence_spans[2] == CharSpan{8, 12});
}

TEST_CASE("cached store hits the cache without a fetcher") {
  const auto dir = std::filesystem::temp_directory_path() / "bioqa_cache_test";
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  {
    std::ofstream out(dir / "777.json");
    out << R"({"pmid": "777", "title": "T.", "body": "Body text."})";
  }
  CachedAbstractStore store(dir, nullptr);
  const Abstract& a = store.get("777");
  CHECK(a.full_text == "T. Body text.");
  // miss with no fetcher carries the pmid
  try {
    store.get("404404");
    FAIL("expected FetchError");
  } catch (const FetchError& e) {
    CHECK(e.pmid() == "404404");
  }
  std::filesystem::remove_all(dir);
}

TEST_CASE("cached store writes through the fetcher once") {
  const auto dir = std::filesystem::temp_directory_path() / "bioqa_cache_test2";
  std::filesystem::remove_all(dir);
  int calls = 0;
  {
    CachedAbstractStore store(dir, [&](const std::string& pmid) {
      ++calls;
      return std::make_pair(std::string("Title."), std::string("Body of ") + pmid + ".");
    });
    CHECK(store.get("555").full_text == "Title. Body of 555.");
    CHECK(store.get("555").full_text == "Title. Body of 555.");
    CHECK(calls == 1);
  }
  {
    CachedAbstractStore store(dir, nullptr);  // fresh store reads the disk cache
    CHECK(store.get("555").full_text == "Title. Body of 555.");
  }
  std::filesystem::remove_all(dir);
}

TEST_CASE("empty fetched body is an error") {
  const auto dir = std::filesystem::temp_directory_path() / "bioqa_cache_test3";
  std::filesystem::remove_all(dir);
  CachedAbstractStore store(dir, [](const std::string&) {
    return std::make_pair(std::string("T"), std::string());
  });
  CHECK_THROWS_AS(store.get("9"), FetchError);
  std::filesystem::remove_all(dir);
}

TEST_CASE("http fetcher talks to an efetch-style endpoint") {
  httplib::Server server;
  server.Get("/efetch", [](const httplib::Request& req, httplib::Response& res) {
    nlohmann::json j;
    j["pmid"] = req.get_param_value("id");
    j["title"] = "Served title.";
    j["body"] = "Served body for " + req.get_param_value("id") + ".";
    res.set_content(j.dump(), "application/json");
  });
  const int port = server.bind_to_any_port("127.0.0.1");
  if (port <= 0) {
    MESSAGE("cannot bind a loopback port here; skipping the live-server check");
    return;
  }
  std::thread serving([&]() { server.listen_after_bind(); });
  server.wait_until_ready();

  const auto dir = std::filesystem::temp_directory_path() / "bioqa_cache_http";
  std::filesystem::remove_all(dir);
  {
    auto fetcher = http_abstract_fetcher("http://127.0.0.1:" + std::to_string(port));
    CachedAbstractStore store(dir, fetcher);
    const Abstract& a = store.get("31337");
    CHECK(a.full_text == "Served title. Served body for 31337.");
    CHECK(std::filesystem::exists(dir / "31337.json"));
  }
  server.stop();
  serving.join();
  std::filesystem::remove_all(dir);
}

TEST_CASE("unreachable abstract service raises an error naming the pmid") {
  const auto dir = std::filesystem::temp_directory_path() / "bioqa_cache_offline";
  std::filesystem::remove_all(dir);
  auto fetcher =
      http_abstract_fetcher("http://127.0.0.1:9", std::chrono::milliseconds(200));
  CachedAbstractStore store(dir, fetcher);
  try {
    store.get("424242");
    FAIL("expected FetchError");
  } catch (const FetchError& e) {
    CHECK(e.pmid() == "424242");
    CHECK(std::string(e.what()).find("424242") != std::string::npos);
  }
  std::filesystem::remove_all(dir);
}

TEST_CASE("locate_answer_occurrences matches the spec examples") {
  CHECK(locate_answer_occurrences("ABC causes XYZ.", "XYZ") == std::vector<std::size_t>{11});
  CHECK(locate_answer_occurrences("X and X", "X") == std::vector<std::size_t>{0, 6});
  CHECK(locate_answer_occurrences("anything", "missing").empty());
}

TEST_CASE("snippet_asis: one pair per gold occurrence") {
  Snippet sn{"GeneA binds GeneA near genea.", "1", "abstract", 0};
  auto q = make_factoid("f1", {{"GeneA"}}, {sn});
  auto pairs = build_pairs(q, {Strategy::snippet_asis, 1}, nullptr, true);
  REQUIRE(pairs.size() == 3);  // offsets 0, 12, 23 (case-insensitive)
  std::set<std::size_t> starts;
  for (const auto& p : pairs) {
    REQUIRE(p.answers.size() == 1);
    starts.insert(p.answers[0].answer_start);
    // offset soundness: the stored text sits exactly at answer_start
    CHECK(p.context.substr(p.answers[0].answer_start, p.answers[0].text.size()) ==
          p.answers[0].text);
  }
  CHECK(starts == std::set<std::size_t>{0, 12, 23});
  CHECK(pairs[0].pair_id == "f1#0#0");
}

TEST_CASE("snippet_asis: yesno yields one labeled pair per snippet") {
  BioASQQuestion q;
  q.id = "y1";
  q.body = "Is it?";
  q.qtype = QType::yesno;
  q.yesno_answer = "no";
  q.snippets = {{"S one.", "1", "a", 0}, {"S two.", "1", "a", 0}, {"S three.", "2", "a", 0}};
  auto pairs = build_pairs(q, {Strategy::snippet_asis, 1}, nullptr, true);
  REQUIRE(pairs.size() == 3);
  for (const auto& p : pairs) {
    CHECK(p.answers.empty());
    REQUIRE(p.yesno_label.has_value());
    CHECK(*p.yesno_label == "no");
  }
}

TEST_CASE("snippet_asis: unanswerable passages are excluded and counted") {
  auto q = make_factoid("f2", {{"absent"}},
                        {{"Nothing to see here.", "1", "a", 0},
                         {"absent is present here.", "1", "a", 0}});
  BuildStats stats;
  auto pairs = build_pairs(q, {Strategy::snippet_asis, 1}, nullptr, true, &stats);
  CHECK(pairs.size() == 1);
  CHECK(stats.dropped_unanswerable == 1);
}

TEST_CASE("full_abstract: offset addition example from the offset oracle") {
  // full_text "T. S one ANS here. S2.", snippet found at 3, answer at 6 in snippet
  MemoryAbstractStore store;
  store.add(make_abstract("99", "T.", "S one ANS here. S2."));
  Snippet sn{"S one ANS here.", "99", "abstract", 0};
  auto q = make_factoid("f3", {{"ANS"}}, {sn});
  auto pairs = build_pairs(q, {Strategy::full_abstract, 1}, &store, true);
  REQUIRE(pairs.size() == 1);
  CHECK(pairs[0].context == "T. S one ANS here. S2.");
  REQUIRE(pairs[0].answers.size() == 1);
  CHECK(pairs[0].answers[0].answer_start == 9);
  CHECK(pairs[0].answers[0].text == "ANS");
  // independent full-text search agrees
  auto occ = locate_answer_occurrences(pairs[0].context, "ANS");
  CHECK(std::find(occ.begin(), occ.end(), 9UL) != occ.end());
}

TEST_CASE("full_abstract: whitespace-drifted snippet still resolves") {
  MemoryAbstractStore store;
  store.add(make_abstract("7", "Title.", "The answer GeneX lives here. Tail."));
  Snippet sn{"The  answer GeneX  lives here.", "7", "abstract", 0};  // extra spaces
  auto q = make_factoid("f4", {{"GeneX"}}, {sn});
  BuildStats stats;
  auto pairs = build_pairs(q, {Strategy::full_abstract, 1}, &store, true, &stats);
  REQUIRE(pairs.size() == 1);
  CHECK(stats.snippets_not_found == 0);
  const auto& a = pairs[0].answers[0];
  CHECK(pairs[0].context.substr(a.answer_start, a.text.size()) == "GeneX");
}

TEST_CASE("full_abstract: unlocatable snippet falls back to answer search") {
  MemoryAbstractStore store;
  store.add(make_abstract("8", "Title.", "GeneY appears once."));
  Snippet sn{"Completely different text.", "8", "abstract", 0};
  auto q = make_factoid("f5", {{"GeneY"}}, {sn});
  BuildStats stats;
  auto pairs = build_pairs(q, {Strategy::full_abstract, 1}, &store, true, &stats);
  CHECK(stats.snippets_not_found == 1);
  REQUIRE(pairs.size() == 1);
  const auto& a = pairs[0].answers[0];
  CHECK(pairs[0].context.substr(a.answer_start, a.text.size()) == "GeneY");
}

TEST_CASE("appended_snippet: window length and recomputed offsets") {
  // 5 sentences; snippet = sentence 2 (k=1), n_append=1 -> 3 sentences
  MemoryAbstractStore store;
  store.add(make_abstract("5", "S0 a.", "S1 b. S2 ANS c. S3 d. S4 e."));
  const Abstract& ab = store.get("5");
  REQUIRE(ab.sentence_spans.size() == 5);
  Snippet sn{"S2 ANS c.", "5", "abstract", 0};
  auto q = make_factoid("f6", {{"ANS"}}, {sn});
  auto pairs = build_pairs(q, {Strategy::appended_snippet, 1}, &store, true);
  REQUIRE(pairs.size() == 1);
  CHECK(pairs[0].context == "S1 b. S2 ANS c. S3 d.");
  const auto& a = pairs[0].answers[0];
  CHECK(pairs[0].context.substr(a.answer_start, a.text.size()) == "ANS");

  // strategy nesting: snippet text inside appended, appended inside full
  CHECK(pairs[0].context.find(sn.text) != std::string::npos);
  CHECK(ab.full_text.find(pairs[0].context) != std::string::npos);
}

TEST_CASE("appended_snippet: boundary snippets borrow sentences") {
  MemoryAbstractStore store;
  store.add(make_abstract("6", "First ANS here.", "Middle x. Last y."));
  Snippet sn{"First ANS here.", "6", "abstract", 0};
  auto q = make_factoid("f7", {{"ANS"}}, {sn});
  auto pairs = build_pairs(q, {Strategy::appended_snippet, 1}, &store, true);
  REQUIRE(pairs.size() == 1);
  // 2N + k = 3 of 3 total sentences
  CHECK(pairs[0].context == "First ANS here. Middle x. Last y.");
}

TEST_CASE("property: strategy nesting and appended sentence count") {
  std::mt19937_64 rng(61);
  const std::vector<std::string> pool = {"alpha", "beta", "gamma", "delta", "kappa", "sigma"};
  for (int trial = 0; trial < 50; ++trial) {
    const int n_sent = 3 + static_cast<int>(rng() % 5);
    std::vector<std::string> sentences;
    for (int s = 0; s < n_sent; ++s) {
      std::string sent = "S" + std::to_string(s);
      for (int w = 0; w < 3; ++w) sent += " " + pool[rng() % pool.size()];
      sent += ".";
      sentences.push_back(sent);
    }
    std::string body;
    for (int s = 1; s < n_sent; ++s) body += (s > 1 ? " " : "") + sentences[s];
    MemoryAbstractStore store;
    store.add(make_abstract("pm", sentences[0], body));
    const Abstract& ab = store.get("pm");
    REQUIRE(ab.sentence_spans.size() == static_cast<std::size_t>(n_sent));

    const int first = static_cast<int>(rng() % n_sent);
    const int k = 1 + static_cast<int>(rng() % 2);
    const int last = std::min(n_sent - 1, first + k - 1);
    const CharSpan snip{ab.sentence_spans[first].start, ab.sentence_spans[last].end};
    const std::string snippet = ab.full_text.substr(snip.start, snip.end - snip.start);
    const std::string answer = pool[rng() % pool.size()];
    if (!find_ci(snippet, answer)) continue;

    const int n_append = 1 + static_cast<int>(rng() % 2);
    BioASQQuestion q;
    q.id = "n" + std::to_string(trial);
    q.body = "what ?";
    q.qtype = QType::factoid;
    q.exact_answers = {{answer}};
    q.snippets = {{snippet, "pm", "abstract", 0}};

    auto asis = build_pairs(q, {Strategy::snippet_asis, n_append}, nullptr, true);
    auto appended = build_pairs(q, {Strategy::appended_snippet, n_append}, &store, true);
    auto full = build_pairs(q, {Strategy::full_abstract, n_append}, &store, true);
    REQUIRE(!appended.empty());
    REQUIRE(!full.empty());
    if (!asis.empty()) {
      // snippet passage nests inside the appended passage
      CHECK(appended[0].context.find(asis[0].context) != std::string::npos);
    }
    CHECK(full[0].context.find(appended[0].context) != std::string::npos);
    CHECK(full[0].context == ab.full_text);

    // appended passage holds exactly min(2 n_append + k, total) sentences
    const int covered = last - first + 1;
    const int want = std::min(2 * n_append + covered, n_sent);
    CHECK(static_cast<int>(split_sentences(appended[0].context).size()) == want);

    // offset soundness everywhere
    for (const auto& pairs : {asis, appended, full})
      for (const auto& p : pairs)
        for (const auto& a : p.answers)
          CHECK(to_lower(p.context.substr(a.answer_start, a.text.size())) == to_lower(a.text));
  }
}

TEST_CASE("inference mode emits one unlabeled pair per passage") {
  auto q = make_factoid("f8", {}, {{"Some text.", "1", "a", 0}, {"More text.", "1", "a", 0}});
  auto pairs = build_pairs(q, {Strategy::snippet_asis, 1}, nullptr, false);
  REQUIRE(pairs.size() == 2);
  CHECK(pairs[0].answers.empty());
  CHECK(pairs[1].answers.empty());
}

TEST_CASE("undersample_yesno balances and is deterministic") {
  std::vector<QAPair> pairs;
  for (int i = 0; i < 10; ++i) {
    QAPair p;
    p.pair_id = "y#" + std::to_string(i) + "#0";
    p.qtype = QType::yesno;
    p.yesno_label = i < 6 ? "yes" : "no";
    pairs.push_back(p);
  }
  auto a = undersample_yesno(pairs, 42);
  REQUIRE(a.size() == 8);
  int yes = 0, no = 0;
  for (const auto& p : a) (*p.yesno_label == "yes" ? yes : no)++;
  CHECK(yes == 4);
  CHECK(no == 4);

  auto b = undersample_yesno(pairs, 42);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i].pair_id == b[i].pair_id);
}

TEST_CASE("undersample_yesno keeps a balanced multiset unchanged") {
  std::vector<QAPair> pairs;
  for (int i = 0; i < 6; ++i) {
    QAPair p;
    p.pair_id = "z#" + std::to_string(i) + "#0";
    p.qtype = QType::yesno;
    p.yesno_label = i % 2 ? "yes" : "no";
    pairs.push_back(p);
  }
  auto out = undersample_yesno(pairs, 7);
  REQUIRE(out.size() == pairs.size());
  for (std::size_t i = 0; i < out.size(); ++i) CHECK(out[i].pair_id == pairs[i].pair_id);
}

TEST_CASE("undersample_yesno needs both classes") {
  QAPair p;
  p.qtype = QType::yesno;
  p.yesno_label = "yes";
  CHECK_THROWS_AS(undersample_yesno({p, p}, 1), Error);
}

TEST_CASE("to_squad_json: empty list gives an empty data array") {
  auto text = to_squad_json({}, true);
  auto back = from_squad_json(text);
  CHECK(back.pairs.empty());
  // the requested qtype is stamped even without pairs
  auto yn = from_squad_json(to_squad_json({}, true, QType::yesno));
  CHECK(yn.qtype == QType::yesno);
  CHECK(yn.pairs.empty());
}

TEST_CASE("squad round trip preserves the pairs") {
  auto q = make_factoid("rt1", {{"ANS"}}, {{"Has ANS inside.", "1", "a", 0}});
  auto pairs = build_pairs(q, {Strategy::snippet_asis, 1}, nullptr, true);
  REQUIRE(pairs.size() == 1);
  auto back = from_squad_json(to_squad_json(pairs, true));
  CHECK(back.qtype == QType::factoid);
  CHECK(back.has_labels);
  REQUIRE(back.pairs.size() == 1);
  const QAPair& orig = pairs[0];
  const QAPair& got = back.pairs[0];
  CHECK(got.pair_id == orig.pair_id);
  CHECK(got.question_id == "rt1");
  CHECK(got.question == orig.question);
  CHECK(got.context == orig.context);
  REQUIRE(got.answers.size() == 1);
  CHECK(got.answers[0].text == orig.answers[0].text);
  CHECK(got.answers[0].answer_start == orig.answers[0].answer_start);
  // substring invariant survives the round trip
  CHECK(got.context.substr(got.answers[0].answer_start, got.answers[0].text.size()) ==
        got.answers[0].text);
}

TEST_CASE("yesno squad emission encodes yes->false, no->true") {
  QAPair p;
  p.pair_id = "q#0#0";
  p.question_id = "q";
  p.question = "Is it?";
  p.context = "ctx";
  p.qtype = QType::yesno;
  p.yesno_label = "yes";
  auto text = to_squad_json({p}, true);
  CHECK(text.find("\"is_impossible\": false") != std::string::npos);
  CHECK(text.find("\"bioasq_label\": \"yes\"") != std::string::npos);
  auto back = from_squad_json(text);
  REQUIRE(back.pairs.size() == 1);
  CHECK(*back.pairs[0].yesno_label == "yes");

  p.yesno_label = "no";
  auto text2 = to_squad_json({p}, true);
  CHECK(text2.find("\"is_impossible\": true") != std::string::npos);
}

TEST_CASE("to_squad_json rejects unanswered training pairs") {
  QAPair p;
  p.pair_id = "q#0#0";
  p.qtype = QType::factoid;
  p.context = "ctx";
  CHECK_THROWS_AS(to_squad_json({p}, true), Error);
  CHECK_NOTHROW(to_squad_json({p}, false));
}

TEST_CASE("pair ids survive the question-id extraction") {
  CHECK(question_id_of_pair(make_pair_id("abc", 3, 11)) == "abc");
  CHECK(question_id_of_pair("weird") == "weird");
}
