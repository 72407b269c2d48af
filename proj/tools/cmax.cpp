// Command-line front end: train, encode, evaluate, ablate, gradcheck, synth.
#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "cmax/errors.hpp"
#include "cmax/evalsuite/ablation.hpp"
#include "cmax/evalsuite/metrics.hpp"
#include "cmax/evalsuite/synthetic.hpp"
#include "cmax/pipeline/checkpoint.hpp"
#include "cmax/pipeline/encode.hpp"
#include "cmax/pipeline/gradcheck_suite.hpp"
#include "cmax/pipeline/trainer.hpp"

namespace fs = std::filesystem;
using namespace cmax;

namespace {

std::string score(double v) {
  if (std::isnan(v)) return "-";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4f", v);
  return buf;
}

void print_scores(const std::string& what, const ModelParams& params, const ViewScores& s) {
  std::cout << what << ' ' << params.slot_label(0) << '=' << score(s.first);
  if (params.slot_count() > 1) std::cout << ' ' << params.slot_label(1) << '=' << score(s.second);
  std::cout << " ensemble=" << score(s.ensemble) << '\n';
}

EmbeddingTable vectors_for(const Checkpoint& ckpt, const std::string& override_path) {
  const std::string path = override_path.empty() ? ckpt.config.vectors : override_path;
  if (path.empty()) throw ConfigError("no word vectors: pass --vectors");
  return load_word_vectors(path);
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << text;
  if (!out) throw DataError("failed writing " + path.string());
}

int run_train(const std::string& config_path, std::string ckpt_path, std::string metrics_path) {
  const TrainConfig config = load_config(config_path);
  if (ckpt_path.empty()) ckpt_path = "model.ckpt";
  if (metrics_path.empty()) metrics_path = ckpt_path + ".metrics.csv";

  const Corpus corpus = load_corpus(config.corpus);
  const EmbeddingTable table = load_word_vectors(config.vectors);
  const AblationAssets assets = load_ablation_assets(config);
  Trainer trainer(config, corpus, table);
  if (config.eval_every > 0) trainer.set_evaluator(curve_evaluator(config, table, assets));
  trainer.run_to_budget();

  Checkpoint ckpt = trainer.checkpoint();
  ckpt.metrics_path = metrics_path;
  save_checkpoint(ckpt, ckpt_path);
  trainer.metrics().save_csv(metrics_path);
  const auto losses = trainer.metrics().losses();
  std::cout << "trained " << to_string(config.variant) << " for " << trainer.steps_done()
            << " steps";
  if (!losses.empty()) std::cout << ", loss " << losses.front() << " -> " << losses.back();
  std::cout << "\ncheckpoint: " << ckpt_path << "\nmetrics: " << metrics_path << '\n';
  return 0;
}

int run_encode(const std::string& ckpt_path, const std::string& corpus_path,
               const std::string& regime_name, const std::string& out_path,
               const std::string& vectors, bool no_header) {
  const Checkpoint ckpt = load_checkpoint(ckpt_path);
  const Regime regime = parse_regime(regime_name);
  const Corpus corpus = load_corpus(corpus_path);
  const EncodedCorpus enc = encode_corpus(ckpt, corpus.sentences, vectors_for(ckpt, vectors), regime);
  save_vectors(enc.ensemble, out_path, !no_header);
  std::cout << "ensemble: " << out_path << '\n';
  for (std::size_t v = 0; v < enc.views.size(); ++v) {
    const std::string path = out_path + "." + enc.view_labels[v];
    save_vectors(enc.views[v], path, !no_header);
    std::cout << enc.view_labels[v] << ": " << path << '\n';
  }
  return 0;
}

int run_eval_sts(const std::string& ckpt_path, const std::string& pairs_path,
                 const std::string& vectors, double gold_min, double gold_max) {
  const Checkpoint ckpt = load_checkpoint(ckpt_path);
  const auto pairs = load_sts_pairs(pairs_path, gold_min, gold_max);
  const ViewScores s =
      eval_sts(model_encoder(ckpt.params, ckpt.config), pairs, vectors_for(ckpt, vectors));
  print_scores("pearson", ckpt.params, s);
  return 0;
}

int run_eval_cls(const std::string& ckpt_path, const std::string& train_path,
                 const std::string& test_path, const std::string& vectors) {
  const Checkpoint ckpt = load_checkpoint(ckpt_path);
  const LabeledSet train = load_labeled(train_path);
  const LabeledSet test = load_labeled(test_path, train.label_names);
  ProbeConfig probe;
  probe.seed = ckpt.config.seed;
  const ViewScores s = eval_cls(model_encoder(ckpt.params, ckpt.config), train, test,
                                vectors_for(ckpt, vectors), probe);
  print_scores("accuracy", ckpt.params, s);
  return 0;
}

int run_ablate(const std::string& config_path, const std::string& out_dir) {
  const TrainConfig config = load_config(config_path);
  const Corpus corpus = load_corpus(config.corpus);
  const EmbeddingTable table = load_word_vectors(config.vectors);
  const AblationAssets assets = load_ablation_assets(config);
  const AblationReport report = run_ablation(config, corpus, table, assets);

  fs::create_directories(out_dir);
  write_text(fs::path(out_dir) / "ablation.txt", report.to_table());
  write_text(fs::path(out_dir) / "ablation.csv", report.to_csv());
  std::cout << report.to_table();
  if (config.eval_every > 0) {
    std::vector<std::pair<std::string, MetricsLog>> runs;
    for (const auto& row : report.rows) {
      if (row.ok && row.variant) runs.emplace_back(row.name, row.metrics);
    }
    if (!runs.empty()) learning_curve_export(runs, fs::path(out_dir) / "curves.csv");
  }
  bool all_ok = true;
  for (const auto& row : report.rows) all_ok = all_ok && row.ok;
  return all_ok ? 0 : 3;
}

int run_gradcheck(std::uint64_t seed) {
  bool ok = true;
  for (const auto& r : run_gradcheck_suite(seed)) {
    const bool pass = r.max_relative_error <= kGradCheckTolerance;
    ok = ok && pass;
    std::printf("%-32s probes=%-4zu max_rel_err=%.3e %s\n", r.op.c_str(), r.probe_count,
                r.max_relative_error, pass ? "ok" : "FAIL");
  }
  return ok ? 0 : 3;
}

int run_synth(const std::string& out_dir, std::uint64_t seed) {
  SyntheticConfig sc;
  sc.seed = seed;
  const SyntheticData data = generate_synthetic(sc);
  const fs::path dir(out_dir);
  fs::create_directories(dir);
  save_corpus(data.train, dir / "train.txt");
  save_corpus(data.heldout, dir / "heldout.txt");
  save_word_vectors(data.table, dir / "vectors.txt");

  std::string sts;
  for (const auto& p : synthetic_sts_pairs(data.heldout, data.heldout_topics, 300, seed)) {
    auto join = [](const Tokens& t) {
      std::string s;
      for (const auto& w : t) s += (s.empty() ? "" : " ") + w;
      return s;
    };
    sts += join(p.sentence_a) + '\t' + join(p.sentence_b) + '\t' + format_double(p.gold) + '\n';
  }
  write_text(dir / "sts.tsv", sts);

  const LabeledSet cls = synthetic_labeled(data.heldout, data.heldout_topics);
  std::string train_tsv, test_tsv;
  for (std::size_t i = 0; i < cls.sentences.size(); ++i) {
    std::string line = cls.label_names[cls.labels[i]] + '\t';
    for (std::size_t k = 0; k < cls.sentences[i].size(); ++k) {
      line += (k ? " " : "") + cls.sentences[i][k];
    }
    (i % 5 == 4 ? test_tsv : train_tsv) += line + '\n';
  }
  write_text(dir / "cls_train.tsv", train_tsv);
  write_text(dir / "cls_test.tsv", test_tsv);

  TrainConfig config;
  config.max_steps = 1500;
  config.eval_every = 250;
  config.seed = seed;
  config.corpus = "train.txt";
  config.vectors = "vectors.txt";
  config.eval_pairs = "sts.tsv";
  config.eval_corpus = "heldout.txt";
  config.eval_cls_train = "cls_train.tsv";
  config.eval_cls_test = "cls_test.tsv";
  write_text(dir / "config.txt", config.to_text());
  std::cout << "wrote synthetic data set to " << dir.string() << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-view contrastive sentence encoders"};
  app.require_subcommand(1);

  std::string config_path, ckpt_path, metrics_path, corpus_path, regime, out_path, vectors;
  std::string pairs_path, train_path, test_path, out_dir;
  bool no_header = false;
  double gold_min = 0.0, gold_max = 5.0;
  std::uint64_t seed = 7;

  auto* train = app.add_subcommand("train", "Train an encoder pair from a config file");
  train->add_option("--config", config_path, "Config file")->required()->check(CLI::ExistingFile);
  train->add_option("--ckpt", ckpt_path, "Checkpoint to write (default model.ckpt)");
  train->add_option("--metrics", metrics_path, "Metrics CSV (default <ckpt>.metrics.csv)");

  auto* encode = app.add_subcommand("encode", "Encode a corpus with a trained checkpoint");
  encode->add_option("--ckpt", ckpt_path, "Checkpoint")->required();
  encode->add_option("--corpus", corpus_path, "Corpus, one sentence per line")->required();
  encode->add_option("--regime", regime, "sup or unsup")->required();
  encode->add_option("--out", out_path, "Output file for the ensemble")->required();
  encode->add_option("--vectors", vectors, "Word vectors (default: from the checkpoint)");
  encode->add_flag("--no-header", no_header, "Omit the '<count> <dim>' header");

  auto* sts = app.add_subcommand("eval-sts", "Pearson correlation on sentence pairs");
  sts->add_option("--ckpt", ckpt_path, "Checkpoint")->required();
  sts->add_option("--pairs", pairs_path, "TSV: sentence_a, sentence_b, score")->required();
  sts->add_option("--vectors", vectors, "Word vectors (default: from the checkpoint)");
  sts->add_option("--gold-min", gold_min, "Lowest allowed gold score");
  sts->add_option("--gold-max", gold_max, "Highest allowed gold score");

  auto* cls = app.add_subcommand("eval-cls", "Linear probe accuracy");
  cls->add_option("--ckpt", ckpt_path, "Checkpoint")->required();
  cls->add_option("--train", train_path, "TSV: label, sentence")->required();
  cls->add_option("--test", test_path, "TSV: label, sentence")->required();
  cls->add_option("--vectors", vectors, "Word vectors (default: from the checkpoint)");

  auto* ablate = app.add_subcommand("ablate", "Train and compare all objective variants");
  ablate->add_option("--config", config_path, "Base config")->required()->check(CLI::ExistingFile);
  ablate->add_option("--out", out_dir, "Report directory")->required();

  auto* grad = app.add_subcommand("gradcheck", "Finite-difference checks of all gradients");
  grad->add_option("--seed", seed, "Seed for the random check points");

  auto* synth = app.add_subcommand("synth", "Write a synthetic topical corpus and assets");
  synth->add_option("--out", out_dir, "Output directory")->required();
  synth->add_option("--seed", seed, "Generator seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*train) return run_train(config_path, ckpt_path, metrics_path);
    if (*encode) return run_encode(ckpt_path, corpus_path, regime, out_path, vectors, no_header);
    if (*sts) return run_eval_sts(ckpt_path, pairs_path, vectors, gold_min, gold_max);
    if (*cls) return run_eval_cls(ckpt_path, train_path, test_path, vectors);
    if (*ablate) return run_ablate(config_path, out_dir);
    if (*grad) return run_gradcheck(seed);
    if (*synth) return run_synth(out_dir, seed);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 1;
  } catch (const std::invalid_argument& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return 1;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return 2;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  }
  return 1;
}
