#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "bioqa/abstracts.hpp"
#include "bioqa/bioasq.hpp"
#include "bioqa/checkpoint.hpp"
#include "bioqa/errors.hpp"
#include "bioqa/ingest.hpp"
#include "bioqa/metrics.hpp"
#include "bioqa/pipeline.hpp"
#include "bioqa/trainer.hpp"

namespace fs = std::filesystem;
using namespace bioqa;

namespace {

QType parse_qtype(const std::string& s) {
  auto qt = qtype_from_string(s);
  if (!qt) throw Error("unknown question type \"" + s + "\" (factoid|list|yesno)");
  return *qt;
}

Strategy parse_strategy(const std::string& s) {
  auto st = strategy_from_string(s);
  if (!st)
    throw Error("unknown strategy \"" + s +
                "\" (snippet_asis|full_abstract|appended_snippet)");
  return *st;
}

fs::path with_qtype_suffix(const fs::path& path, QType qt) {
  fs::path out = path;
  out.replace_extension();
  out += std::string(".") + to_string(qt);
  out += path.extension();
  return out;
}

// ---------------------------------------------------------------- convert

struct ConvertOpts {
  std::string input, output;
  std::string qtype = "all";
  std::string strategy = "snippet_asis";
  int n_append = 1;
  std::string mode = "train";
  std::string cache_dir;
  std::string abstract_url;
  std::uint64_t seed = 13;
  bool no_undersample = false;
  bool skip_fetch_errors = false;
  bool show_config = false;
};

void show_convert_config(const ConvertOpts& o) {
  std::cout << "input=" << o.input << "\noutput=" << o.output << "\nqtype=" << o.qtype
            << "\nstrategy=" << o.strategy << "\nn_append=" << o.n_append
            << "\nmode=" << o.mode << "\ncache_dir=" << o.cache_dir
            << "\nabstract_url=" << o.abstract_url << "\nseed=" << o.seed
            << "\nno_undersample=" << (o.no_undersample ? 1 : 0)
            << "\nskip_fetch_errors=" << (o.skip_fetch_errors ? 1 : 0) << "\n";
}

int run_convert(const ConvertOpts& o) {
  if (o.show_config) {
    show_convert_config(o);
    return 0;
  }
  const bool training = o.mode == "train";
  if (!training && o.mode != "infer") throw Error("--mode must be train or infer");

  StrategyConfig cfg;
  cfg.strategy = parse_strategy(o.strategy);
  cfg.n_append = o.n_append;
  if (cfg.n_append < 1) throw Error("--n-append must be >= 1");

  ParsedQuestions parsed = parse_bioasq_file(o.input);
  std::cout << "questions: factoid=" << parsed.stats.factoid << " list=" << parsed.stats.list
            << " yesno=" << parsed.stats.yesno
            << " summary_skipped=" << parsed.stats.summary_skipped << "\n";
  for (const auto& w : parsed.stats.warnings) std::cerr << "warning: " << w << "\n";

  std::unique_ptr<CachedAbstractStore> store;
  if (cfg.strategy != Strategy::snippet_asis) {
    if (o.cache_dir.empty())
      throw Error("--cache-dir is required for strategy " + o.strategy);
    AbstractFetcher fetcher;
    if (!o.abstract_url.empty()) fetcher = http_abstract_fetcher(o.abstract_url);
    store = std::make_unique<CachedAbstractStore>(o.cache_dir, std::move(fetcher));
  }

  std::vector<QType> targets;
  if (o.qtype == "all") {
    targets = {QType::factoid, QType::list, QType::yesno};
  } else {
    targets = {parse_qtype(o.qtype)};
  }

  for (QType qt : targets) {
    std::vector<QAPair> pairs;
    BuildStats bstats;
    std::size_t n_questions = 0;
    std::size_t fetch_failures = 0;
    for (const auto& q : parsed.questions) {
      if (q.qtype != qt) continue;
      ++n_questions;
      try {
        auto qpairs = build_pairs(q, cfg, store.get(), training, &bstats);
        pairs.insert(pairs.end(), qpairs.begin(), qpairs.end());
      } catch (const FetchError& e) {
        if (!o.skip_fetch_errors) throw Error("question " + q.id + ": " + e.what());
        std::cerr << "warning: question " << q.id << ": " << e.what() << " (skipped)\n";
        ++fetch_failures;
      }
    }

    std::ostringstream line;
    line << to_string(qt) << ": questions=" << n_questions << " pairs=" << pairs.size();
    if (qt == QType::yesno && training && !o.no_undersample && !pairs.empty()) {
      auto balanced = undersample_yesno(pairs, o.seed);
      line << " pairs_after_undersampling=" << balanced.size();
      pairs = std::move(balanced);
    }
    line << " dropped_unanswerable=" << bstats.dropped_unanswerable
         << " snippets_not_found=" << bstats.snippets_not_found;
    if (fetch_failures) line << " fetch_failures=" << fetch_failures;
    std::cout << line.str() << "\n";

    const fs::path out_path =
        targets.size() > 1 ? with_qtype_suffix(o.output, qt) : fs::path(o.output);
    std::ofstream out(out_path);
    if (!out) throw Error("cannot write " + out_path.string());
    out << to_squad_json(pairs, training, qt) << "\n";
    std::cout << "wrote " << out_path.string() << "\n";
  }
  return 0;
}

// ------------------------------------------------------------------ train

struct TrainOpts {
  std::vector<std::string> data;
  std::string vocab, output;
  std::string qtype = "factoid";
  int epochs = 50;
  int batch_size = 8;
  double lr = 0.05;
  std::uint64_t seed = 13;
  int max_seq_len = 384, doc_stride = 128;
  int hidden = 64, layers = 2, heads = 2, ffn = 256, max_positions = 512;
  std::string init_checkpoint;
  std::string loss_csv;
  bool show_config = false;
};

void show_train_config(const TrainOpts& o) {
  std::cout << "data=";
  for (std::size_t i = 0; i < o.data.size(); ++i) std::cout << (i ? "," : "") << o.data[i];
  std::cout << "\nvocab=" << o.vocab << "\noutput=" << o.output << "\nqtype=" << o.qtype
            << "\nepochs=" << o.epochs << "\nbatch_size=" << o.batch_size << "\nlr=" << o.lr
            << "\nseed=" << o.seed << "\nmax_seq_len=" << o.max_seq_len
            << "\ndoc_stride=" << o.doc_stride << "\nhidden=" << o.hidden
            << "\nlayers=" << o.layers << "\nheads=" << o.heads << "\nffn=" << o.ffn
            << "\nmax_positions=" << o.max_positions
            << "\ninit_checkpoint=" << o.init_checkpoint << "\nloss_csv=" << o.loss_csv << "\n";
}

std::vector<Feature> features_for_training(const SquadData& squad, const Vocab& vocab,
                                           const EncodeOptions& enc, QType qtype) {
  if (squad.qtype != qtype)
    throw Error("dataset holds " + std::string(to_string(squad.qtype)) + " pairs, requested " +
                to_string(qtype));
  std::vector<Feature> features;
  std::size_t unmappable = 0;
  for (const QAPair& p : squad.pairs) {
    if (qtype == QType::yesno) {
      if (!p.yesno_label) throw Error("pair " + p.pair_id + " lacks a yes/no label");
      const int label = *p.yesno_label == "yes" ? 1 : 0;
      EncodeResult r = encode_pair(p.pair_id, p.question, p.context, vocab, enc, std::nullopt,
                                   label);
      for (auto& f : r.features) features.push_back(std::move(f));
    } else {
      if (p.answers.empty()) throw Error("pair " + p.pair_id + " lacks answers");
      SpanSupervision sup{p.answers.front().answer_start, p.answers.front().text};
      EncodeResult r = encode_pair(p.pair_id, p.question, p.context, vocab, enc, sup);
      if (!r.span_mapped) {
        ++unmappable;
        continue;
      }
      for (auto& f : r.features) features.push_back(std::move(f));
    }
  }
  if (unmappable)
    std::cerr << "warning: " << unmappable
              << " pair(s) reported unanswerable (span does not align with tokenization)\n";
  return features;
}

int run_train(const TrainOpts& o) {
  if (o.show_config) {
    show_train_config(o);
    return 0;
  }
  const QType qtype = parse_qtype(o.qtype);
  const Vocab vocab = Vocab::from_file(o.vocab);
  EncodeOptions enc{o.max_seq_len, o.doc_stride};

  ModelParams model;
  if (!o.init_checkpoint.empty()) {
    model = load_checkpoint(o.init_checkpoint);
    if (model.encoder.cfg.vocab != vocab.size())
      throw Error("checkpoint vocab size " + std::to_string(model.encoder.cfg.vocab) +
                  " does not match vocab file (" + std::to_string(vocab.size()) + ")");
  } else {
    EncoderConfig cfg;
    cfg.hidden = o.hidden;
    cfg.layers = o.layers;
    cfg.heads = o.heads;
    cfg.ffn = o.ffn;
    cfg.vocab = vocab.size();
    cfg.max_positions = o.max_positions;
    model.encoder = EncoderParams::init(cfg, o.seed);
    model.heads = HeadParams::init(cfg.hidden, o.seed + 1);
  }
  if (o.max_seq_len > model.encoder.cfg.max_positions)
    throw Error("--max-seq-len exceeds encoder max_positions");

  std::vector<std::vector<Feature>> stages;
  for (const auto& path : o.data) {
    SquadData squad = load_squad_file(path);
    stages.push_back(features_for_training(squad, vocab, enc, qtype));
    std::cout << "stage " << stages.size() - 1 << ": " << path << " -> "
              << stages.back().size() << " features\n";
  }

  TrainConfig tcfg;
  tcfg.epochs = o.epochs;
  tcfg.batch_size = o.batch_size;
  tcfg.learning_rate = o.lr;
  tcfg.seed = o.seed;
  tcfg.qtype = qtype;

  TrainResult result = train(model, stages, tcfg);
  save_checkpoint(o.output, model);
  std::cout << "wrote " << o.output << "\n";
  if (!o.loss_csv.empty()) {
    write_loss_csv(o.loss_csv, result.trace);
    std::cout << "wrote " << o.loss_csv << "\n";
  }
  if (!result.trace.empty())
    std::cout << "final mean loss: " << result.trace.back().mean_loss << "\n";
  return 0;
}

// ---------------------------------------------------------------- predict

struct PredictOpts {
  std::string data, vocab, model, logits;
  std::string qtype;
  std::string output, nbest_output;
  int k = 20;
  int max_answer_tokens = 30;
  double threshold = 0.42;
  int max_seq_len = 384, doc_stride = 128;
  int jobs = 1;
  std::uint64_t seed = 13;
  bool show_config = false;
};

void show_predict_config(const PredictOpts& o) {
  std::cout << "data=" << o.data << "\nvocab=" << o.vocab << "\nmodel=" << o.model
            << "\nlogits=" << o.logits << "\nqtype=" << o.qtype << "\noutput=" << o.output
            << "\nnbest_output=" << o.nbest_output << "\nk=" << o.k
            << "\nmax_answer_tokens=" << o.max_answer_tokens << "\nthreshold=" << o.threshold
            << "\nmax_seq_len=" << o.max_seq_len << "\ndoc_stride=" << o.doc_stride
            << "\njobs=" << o.jobs << "\nseed=" << o.seed << "\n";
}

int run_predict(const PredictOpts& o) {
  if (o.show_config) {
    show_predict_config(o);
    return 0;
  }
  if (o.model.empty() == o.logits.empty())
    throw Error("exactly one of --model / --logits is required");
  if (o.threshold <= 0.0 || o.threshold >= 1.0) throw Error("--threshold must be in (0, 1)");

  const Vocab vocab = Vocab::from_file(o.vocab);
  SquadData squad = load_squad_file(o.data);

  PredictConfig cfg;
  cfg.qtype = o.qtype.empty() ? squad.qtype : parse_qtype(o.qtype);
  if (cfg.qtype != squad.qtype)
    throw Error("dataset holds " + std::string(to_string(squad.qtype)) +
                " pairs, requested " + std::string(to_string(cfg.qtype)));
  cfg.k = o.k;
  cfg.max_answer_tokens = o.max_answer_tokens;
  cfg.threshold = o.threshold;
  cfg.encode = EncodeOptions{o.max_seq_len, o.doc_stride};
  cfg.jobs = o.jobs;

  std::optional<ModelParams> model;
  LogitsMap replay;
  if (!o.model.empty()) {
    model = load_checkpoint(o.model);
    if (model->encoder.cfg.vocab != vocab.size())
      throw Error("checkpoint vocab size does not match vocab file");
    if (o.max_seq_len > model->encoder.cfg.max_positions)
      throw Error("--max-seq-len exceeds encoder max_positions");
  } else {
    replay = read_logits_jsonl(o.logits);
  }

  auto preds = bioqa::run_predict(squad.pairs, vocab, model ? &*model : nullptr,
                                  model ? nullptr : &replay, cfg);
  write_answers_json(o.output, preds);
  std::cout << "wrote " << o.output << "\n";
  if (!o.nbest_output.empty()) {
    write_nbest_json(o.nbest_output, preds);
    std::cout << "wrote " << o.nbest_output << "\n";
  }
  return 0;
}

// --------------------------------------------------------------- evaluate

struct EvaluateOpts {
  std::vector<std::string> answers, gold;
  std::string report, text_report;
  bool show_config = false;
};

int run_evaluate(const EvaluateOpts& o) {
  if (o.show_config) {
    std::cout << "answers=";
    for (std::size_t i = 0; i < o.answers.size(); ++i)
      std::cout << (i ? "," : "") << o.answers[i];
    std::cout << "\ngold=";
    for (std::size_t i = 0; i < o.gold.size(); ++i) std::cout << (i ? "," : "") << o.gold[i];
    std::cout << "\nreport=" << o.report << "\ntext_report=" << o.text_report << "\n";
    return 0;
  }
  if (o.answers.size() != o.gold.size() || o.answers.empty())
    throw Error("--answers and --gold must be given in matching pairs");

  std::vector<EvalReport> reports;
  for (std::size_t i = 0; i < o.answers.size(); ++i) {
    Predictions preds = Predictions::from_file(o.answers[i]);
    GoldStandard gold = GoldStandard::from_bioasq(parse_bioasq_file(o.gold[i]));
    reports.push_back(evaluate(preds, gold));
  }
  EvalReport combined = reports.size() == 1 ? reports.front() : micro_average(reports);
  std::cout << combined.to_text();
  if (!o.report.empty()) {
    std::ofstream out(o.report);
    if (!out) throw Error("cannot write " + o.report);
    out << combined.to_json() << "\n";
    std::cout << "wrote " << o.report << "\n";
  }
  if (!o.text_report.empty()) {
    std::ofstream out(o.text_report);
    if (!out) throw Error("cannot write " + o.text_report);
    out << combined.to_text();
    std::cout << "wrote " << o.text_report << "\n";
  }
  return 0;
}

// --------------------------------------------------------------- ensemble

struct EnsembleOpts {
  std::vector<std::string> nbest;
  std::string output, nbest_output;
  double threshold = 0.42;
  bool show_config = false;
};

int run_ensemble_cmd(const EnsembleOpts& o) {
  if (o.show_config) {
    std::cout << "nbest=";
    for (std::size_t i = 0; i < o.nbest.size(); ++i) std::cout << (i ? "," : "") << o.nbest[i];
    std::cout << "\noutput=" << o.output << "\nnbest_output=" << o.nbest_output
              << "\nthreshold=" << o.threshold << "\n";
    return 0;
  }
  if (o.nbest.empty()) throw Error("at least one --nbest file is required");
  std::vector<std::vector<QuestionPrediction>> models;
  for (const auto& path : o.nbest) models.push_back(read_nbest_json(path));
  auto preds = run_ensemble(models, o.threshold);
  write_answers_json(o.output, preds);
  std::cout << "wrote " << o.output << "\n";
  if (!o.nbest_output.empty()) {
    write_nbest_json(o.nbest_output, preds);
    std::cout << "wrote " << o.nbest_output << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"bioqa: BioASQ-style extractive biomedical question answering"};
  app.require_subcommand(1);
  app.set_config("--config", "", "key=value config file; command-line flags override");

  ConvertOpts conv;
  auto* c = app.add_subcommand("convert", "BioASQ JSON -> SQuAD-format JSON");
  c->add_option("--input", conv.input, "BioASQ challenge JSON")->required();
  c->add_option("--output", conv.output, "output SQuAD JSON path")->required();
  c->add_option("--qtype", conv.qtype, "factoid|list|yesno|all (default all)");
  c->add_option("--strategy", conv.strategy,
                "snippet_asis|full_abstract|appended_snippet (default snippet_asis)");
  c->add_option("--n-append", conv.n_append, "sentences appended per side (default 1)");
  c->add_option("--mode", conv.mode, "train|infer (default train)");
  c->add_option("--cache-dir", conv.cache_dir, "abstract cache directory");
  c->add_option("--abstract-url", conv.abstract_url, "abstract service base URL");
  c->add_option("--seed", conv.seed, "undersampling seed (default 13)");
  c->add_flag("--no-undersample", conv.no_undersample, "keep the skewed yes/no distribution");
  c->add_flag("--skip-fetch-errors", conv.skip_fetch_errors,
              "skip questions whose abstracts cannot be fetched");
  c->add_flag("--show-config", conv.show_config, "print the resolved configuration and exit");

  TrainOpts tr;
  auto* t = app.add_subcommand("train", "fine-tune encoder + heads on SQuAD-format data");
  t->add_option("--data", tr.data, "SQuAD JSON; repeat for staged fine-tuning")->required();
  t->add_option("--vocab", tr.vocab, "WordPiece vocab file")->required();
  t->add_option("--output", tr.output, "checkpoint output path")->required();
  t->add_option("--qtype", tr.qtype, "factoid|list|yesno (default factoid)");
  t->add_option("--epochs", tr.epochs, "epochs per stage (default 50)");
  t->add_option("--batch-size", tr.batch_size, "mini-batch size (default 8)");
  t->add_option("--lr", tr.lr, "learning rate (default 0.05)");
  t->add_option("--seed", tr.seed, "init + shuffle seed (default 13)");
  t->add_option("--max-seq-len", tr.max_seq_len, "window length (default 384)");
  t->add_option("--doc-stride", tr.doc_stride, "window stride (default 128)");
  t->add_option("--hidden", tr.hidden, "hidden size H (default 64)");
  t->add_option("--layers", tr.layers, "encoder layers (default 2)");
  t->add_option("--heads", tr.heads, "attention heads (default 2)");
  t->add_option("--ffn", tr.ffn, "feed-forward size (default 256)");
  t->add_option("--max-positions", tr.max_positions, "position table size (default 512)");
  t->add_option("--init-checkpoint", tr.init_checkpoint, "start from this checkpoint");
  t->add_option("--loss-csv", tr.loss_csv, "write the loss trace here");
  t->add_flag("--show-config", tr.show_config, "print the resolved configuration and exit");

  PredictOpts pr;
  auto* p = app.add_subcommand("predict", "decode answers from a model or replayed logits");
  p->add_option("--data", pr.data, "SQuAD JSON with question-passage pairs")->required();
  p->add_option("--vocab", pr.vocab, "WordPiece vocab file")->required();
  p->add_option("--model", pr.model, "trained checkpoint");
  p->add_option("--logits", pr.logits, "JSON-lines logits replay file");
  p->add_option("--qtype", pr.qtype, "factoid|list|yesno (default: from data file)");
  p->add_option("--output", pr.output, "answers JSON output")->required();
  p->add_option("--nbest", pr.nbest_output, "merged candidate audit JSON output");
  p->add_option("--k", pr.k, "n-best size per window (default 20)");
  p->add_option("--max-answer-tokens", pr.max_answer_tokens, "span length cap (default 30)");
  p->add_option("--threshold", pr.threshold, "list probability threshold (default 0.42)");
  p->add_option("--max-seq-len", pr.max_seq_len, "window length (default 384)");
  p->add_option("--doc-stride", pr.doc_stride, "window stride (default 128)");
  p->add_option("--jobs", pr.jobs, "question-level parallelism (default 1)");
  p->add_option("--seed", pr.seed, "reserved for reproducibility (default 13)");
  p->add_flag("--show-config", pr.show_config, "print the resolved configuration and exit");

  EvaluateOpts ev;
  auto* e = app.add_subcommand("evaluate", "score answers against BioASQ gold");
  e->add_option("--answers", ev.answers, "answers JSON; repeat per batch")->required();
  e->add_option("--gold", ev.gold, "gold BioASQ JSON; repeat per batch")->required();
  e->add_option("--report", ev.report, "JSON report output");
  e->add_option("--text-report", ev.text_report, "plain-text report output");
  e->add_flag("--show-config", ev.show_config, "print the resolved configuration and exit");

  EnsembleOpts en;
  auto* n = app.add_subcommand("ensemble", "average multiple models' merged candidates");
  n->add_option("--nbest", en.nbest, "nbest JSON from predict; repeat per model")->required();
  n->add_option("--output", en.output, "answers JSON output")->required();
  n->add_option("--nbest-output", en.nbest_output, "merged candidate JSON output");
  n->add_option("--threshold", en.threshold, "list probability threshold (default 0.42)");
  n->add_flag("--show-config", en.show_config, "print the resolved configuration and exit");

  int rc = 0;
  c->callback([&]() { rc = run_convert(conv); });
  t->callback([&]() { rc = run_train(tr); });
  p->callback([&]() { rc = run_predict(pr); });
  e->callback([&]() { rc = run_evaluate(ev); });
  n->callback([&]() { rc = run_ensemble_cmd(en); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    return app.exit(err);
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 1;
  }
  return rc;
}
