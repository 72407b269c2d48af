#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <utility>

#include "cmax/errors.hpp"
#include "cmax/evalsuite/synthetic.hpp"
#include "cmax/pipeline/checkpoint.hpp"
#include "cmax/pipeline/config.hpp"
#include "cmax/pipeline/encode.hpp"
#include "cmax/pipeline/trainer.hpp"

using namespace cmax;
namespace fs = std::filesystem;

namespace {

struct Toy {
  SyntheticData data;
  TrainConfig config;
};

// 64 training sentences in 4 documents.
Toy toy(ObjectiveVariant variant = ObjectiveVariant::MultiViewFG) {
  SyntheticConfig sc;
  sc.topics = 3;
  sc.sentences_per_doc = 16;
  sc.train_docs = 4;
  sc.heldout_docs = 2;
  sc.dim = 8;
  sc.seed = 3;
  Toy t{generate_synthetic(sc), {}};
  t.config.variant = variant;
  t.config.batch_size = 8;
  t.config.context = 2;
  t.config.dim = 8;
  t.config.hidden = 4;
  t.config.max_steps = 200;
  t.config.lr = 5e-3;
  t.config.seed = 11;
  return t;
}

double mean_loss_over_windows(const ModelParams& params, const Toy& t) {
  std::vector<Matrix> embedded;
  for (const auto& s : t.data.train.sentences) embedded.push_back(embed_sentence(s, t.data.table));
  double total = 0.0;
  const auto starts = batch_windows(t.data.train, t.config.batch_size);
  for (std::size_t start : starts) {
    std::vector<const Matrix*> batch;
    for (std::size_t i = 0; i < t.config.batch_size; ++i) batch.push_back(&embedded[start + i]);
    BatchOptions bo;
    bo.context = t.config.context;
    bo.power_iters = 100;
    total += evaluate_batch(params, batch, bo, false).loss;
  }
  return total / static_cast<double>(starts.size());
}

fs::path temp_path(const std::string& name) { return fs::temp_directory_path() / ("cmax_test_" + name); }

}  // namespace

TEST(Config, ParsesKeysAndResolvesPaths) {
  const TrainConfig c = parse_config(
      "# comment\nvariant = SingleViewG\nbatch_size = 8\ncontext=3\nlr = 0.01  # trailing\n"
      "corpus = data/train.txt\nvectors = /abs/vecs.txt\nloss_average = true\n",
      "/base");
  EXPECT_EQ(c.variant, ObjectiveVariant::SingleViewG);
  EXPECT_EQ(c.batch_size, 8u);
  EXPECT_EQ(c.context, 3u);
  EXPECT_EQ(c.lr, 0.01);
  EXPECT_TRUE(c.loss_average);
  EXPECT_EQ(c.corpus, "/base/data/train.txt");
  EXPECT_EQ(c.vectors, "/abs/vecs.txt");
}

TEST(Config, RejectsBadInput) {
  EXPECT_THROW(parse_config("colour = blue\n"), ConfigError);
  EXPECT_THROW(parse_config("batch_size = 4\ncontext = 4\n"), ConfigError);
  EXPECT_THROW(parse_config("batch_size = 1\ncontext = 1\n"), ConfigError);
  EXPECT_THROW(parse_config("hidden = 0\n"), ConfigError);
  EXPECT_THROW(parse_config("lr = fast\n"), ConfigError);
  EXPECT_THROW(parse_config("just words\n"), ConfigError);
  EXPECT_THROW(parse_config("variant = Nope\n"), ConfigError);
}

TEST(Config, TextRoundTrip) {
  TrainConfig c;
  c.variant = ObjectiveVariant::SkipConnection;
  c.lr = 0.1 + 0.2;  // not exactly representable as a short decimal
  c.epochs = 3;
  c.corpus = "/x/y.txt";
  const TrainConfig back = parse_config(c.to_text());
  EXPECT_EQ(back.to_text(), c.to_text());
  EXPECT_EQ(back.lr, c.lr);
}

TEST(Training, LossDecreasesOnToyCorpus) {
  const Toy t = toy();
  ASSERT_EQ(t.data.train.size(), 64u);
  Trainer trainer(t.config, t.data.train, t.data.table);
  const double before = mean_loss_over_windows(trainer.params(), t);
  trainer.run_to_budget();
  EXPECT_EQ(trainer.steps_done(), 200u);
  EXPECT_LT(mean_loss_over_windows(trainer.params(), t), before);
}

TEST(Training, ZeroLearningRateLeavesParametersAndLossesFixed) {
  Toy t = toy();
  t.config.lr = 0.0;
  t.config.max_steps = 12;
  Trainer trainer(t.config, t.data.train, t.data.table);
  const ModelParams initial = trainer.params();
  trainer.run_to_budget();
  const auto before = initial.matrices();
  const auto after = trainer.params().matrices();
  for (std::size_t k = 0; k < before.size(); ++k) EXPECT_EQ(*before[k], *after[k]);
  EXPECT_EQ(trainer.params().temperature.log_tau, 0.0);

  // One window and converged power iteration: every step sees the same loss.
  Toy single = toy();
  single.config.lr = 0.0;
  single.config.batch_size = 16;
  single.config.max_steps = 5;
  single.config.train_power_iters = 500;
  single.config.power_tol = 1e-15;
  Corpus one;
  one.sentences.assign(single.data.train.sentences.begin(), single.data.train.sentences.begin() + 16);
  Trainer fixed(single.config, one, single.data.table);
  fixed.run_to_budget();
  const auto losses = fixed.metrics().losses();
  for (double l : losses) EXPECT_NEAR(l, losses.front(), 1e-9);
}

TEST(Training, SameSeedSameTrajectory) {
  const Toy t = toy();
  Trainer a(t.config, t.data.train, t.data.table), b(t.config, t.data.train, t.data.table);
  a.run(15);
  b.run(15);
  EXPECT_EQ(a.metrics().losses(), b.metrics().losses());
}

TEST(Training, WordVectorsUntouched) {
  const Toy t = toy();
  const EmbeddingTable copy = t.data.table;
  Trainer trainer(t.config, t.data.train, t.data.table);
  trainer.run(20);
  EXPECT_EQ(t.data.table, copy);
}

TEST(Training, EveryParameterMatrixMoves) {
  for (ObjectiveVariant v : kAllVariants) {
    Toy t = toy(v);
    t.config.max_steps = 100;
    Trainer trainer(t.config, t.data.train, t.data.table);
    const ModelParams initial = trainer.params();
    trainer.run_to_budget();
    const auto names = initial.matrix_names();
    const auto before = initial.matrices();
    const auto after = trainer.params().matrices();
    ASSERT_EQ(before.size(), after.size());
    for (std::size_t k = 0; k < before.size(); ++k) {
      EXPECT_NE(*before[k], *after[k]) << to_string(v) << " " << names[k];
    }
    EXPECT_NE(trainer.params().temperature.log_tau, 0.0) << to_string(v);
  }
}

TEST(Training, VariantsHoldOnlyTheirEncoders) {
  const std::pair<ObjectiveVariant, std::pair<std::size_t, std::size_t>> expected[] = {
      {ObjectiveVariant::MultiViewFG, {1, 1}},   {ObjectiveVariant::MultiViewF1F2, {2, 0}},
      {ObjectiveVariant::MultiViewG1G2, {0, 2}}, {ObjectiveVariant::SingleViewF, {1, 0}},
      {ObjectiveVariant::SingleViewG, {0, 1}},   {ObjectiveVariant::MultiPlusSingle, {1, 1}},
      {ObjectiveVariant::SkipConnection, {1, 1}},
  };
  for (const auto& [v, counts] : expected) {
    const ModelParams p = init_model(v, 5, 3, 1);
    EXPECT_EQ(p.grus.size(), counts.first) << to_string(v);
    EXPECT_EQ(p.linears.size(), counts.second) << to_string(v);
  }
  // Shared roles start from identical weights; second encoders differ.
  const ModelParams fg = init_model(ObjectiveVariant::MultiViewFG, 5, 3, 1);
  const ModelParams sf = init_model(ObjectiveVariant::SingleViewF, 5, 3, 1);
  const ModelParams ff = init_model(ObjectiveVariant::MultiViewF1F2, 5, 3, 1);
  EXPECT_EQ(fg.grus[0].forward.w_z, sf.grus[0].forward.w_z);
  EXPECT_NE(ff.grus[0].forward.w_z, ff.grus[1].forward.w_z);
}

TEST(Training, CollapseSurfacesStepNumber) {
  Toy t = toy();
  Corpus same;
  for (int i = 0; i < 16; ++i) same.sentences.push_back(t.data.train.sentences[0]);
  Trainer trainer(t.config, same, t.data.table);
  try {
    trainer.step();
    FAIL() << "expected NumericalError";
  } catch (const NumericalError& e) {
    EXPECT_NE(std::string(e.what()).find("step 0"), std::string::npos) << e.what();
  }
}

TEST(Training, BudgetFromEpochs) {
  Toy t = toy();
  t.config.max_steps = 0;
  t.config.epochs = 3;
  Trainer trainer(t.config, t.data.train, t.data.table);
  EXPECT_EQ(trainer.windows_per_epoch(), 8u);
  EXPECT_EQ(trainer.budget(), 24u);
}

TEST(Training, DimMismatchRejected) {
  Toy t = toy();
  t.config.dim = 9;
  EXPECT_THROW(Trainer(t.config, t.data.train, t.data.table), ConfigError);
}

TEST(Training, EvaluatorFollowsCadence) {
  Toy t = toy();
  t.config.max_steps = 10;
  t.config.eval_every = 4;
  Trainer trainer(t.config, t.data.train, t.data.table);
  int calls = 0;
  trainer.set_evaluator([&](const ModelParams&) {
    ++calls;
    return ViewScores{0.1, 0.2, 0.3};
  });
  trainer.run_to_budget();
  std::vector<std::uint64_t> eval_steps;
  for (const auto& r : trainer.metrics().records()) {
    if (r.eval) eval_steps.push_back(r.step);
  }
  EXPECT_EQ(eval_steps, (std::vector<std::uint64_t>{0, 4, 8, 10}));
  EXPECT_EQ(calls, 4);
}

TEST(MetricsLog, StepsStrictlyIncrease) {
  MetricsLog log;
  log.append({0, 1.0, 1.0, std::nullopt});
  EXPECT_THROW(log.append({0, 1.0, 1.0, std::nullopt}), std::invalid_argument);
  log.attach_eval(3, {0.5, 0.25, 0.75});
  EXPECT_EQ(log.to_csv(), "step,loss,tau,eval_first,eval_second,eval_ensemble\n0,1,1,,,\n3,,,0.5,0.25,0.75\n");
}

TEST(Checkpoint, RoundTripIsBitwise) {
  const Toy t = toy();
  Trainer trainer(t.config, t.data.train, t.data.table);
  trainer.run(7);
  Checkpoint ckpt = trainer.checkpoint();
  ckpt.metrics_path = "run/metrics.csv";
  const auto path = temp_path("roundtrip.ckpt");
  save_checkpoint(ckpt, path);
  const Checkpoint back = load_checkpoint(path);
  const auto a = std::as_const(ckpt.params).matrices();
  const auto b = back.params.matrices();
  for (std::size_t k = 0; k < a.size(); ++k) EXPECT_EQ(*a[k], *b[k]);
  EXPECT_EQ(back.params.temperature.log_tau, ckpt.params.temperature.log_tau);
  EXPECT_EQ(back.adam.step, 7u);
  EXPECT_EQ(back.adam.m, ckpt.adam.m);
  EXPECT_EQ(back.adam.v, ckpt.adam.v);
  EXPECT_EQ(back.metrics_path, "run/metrics.csv");
  EXPECT_EQ(back.config.to_text(), ckpt.config.to_text());

  const auto again = temp_path("roundtrip2.ckpt");
  save_checkpoint(back, again);
  EXPECT_EQ(serialize_checkpoint(back), serialize_checkpoint(ckpt));
  fs::remove(path);
  fs::remove(again);
}

TEST(Checkpoint, FreshModelRoundTrips) {
  const Toy t = toy(ObjectiveVariant::MultiViewG1G2);
  const Trainer trainer(t.config, t.data.train, t.data.table);
  const std::string bytes = serialize_checkpoint(trainer.checkpoint());
  EXPECT_EQ(serialize_checkpoint(deserialize_checkpoint(bytes)), bytes);
}

TEST(Checkpoint, TruncationNamesMissingSection) {
  const Toy t = toy();
  Trainer trainer(t.config, t.data.train, t.data.table);
  trainer.run(1);
  const std::string bytes = serialize_checkpoint(trainer.checkpoint());
  // The last record: u32 name length, name, two u64 dims, one f64.
  const std::string last = "adam/v/temperature/log_tau";
  const std::size_t last_size = 4 + last.size() + 16 + 8;
  for (const auto& [cut, section] : {std::pair<std::size_t, std::string>{1, last},
                                     {last_size, last},
                                     {last_size + 1, "adam/v/g1/w"}}) {
    try {
      deserialize_checkpoint(std::string_view(bytes).substr(0, bytes.size() - cut));
      FAIL() << "expected DataError";
    } catch (const DataError& e) {
      const std::string msg = e.what();
      EXPECT_NE(msg.find("truncated"), std::string::npos) << msg;
      EXPECT_NE(msg.find("'" + section + "'"), std::string::npos) << msg;
    }
  }
  const std::size_t config_pos = bytes.find("[config]");
  try {
    deserialize_checkpoint(std::string_view(bytes).substr(0, config_pos + 20));
    FAIL() << "expected DataError";
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("'config'"), std::string::npos) << e.what();
  }
}

TEST(Checkpoint, VersionMismatchRejected) {
  const Toy t = toy();
  std::string bytes = serialize_checkpoint(Trainer(t.config, t.data.train, t.data.table).checkpoint());
  const auto pos = bytes.find("version = 1");
  bytes.replace(pos, 11, "version = 2");
  try {
    deserialize_checkpoint(bytes);
    FAIL() << "expected DataError";
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("incompatible checkpoint version 2"), std::string::npos);
  }
}

TEST(Checkpoint, ShapeInconsistencyRejected) {
  const Toy t = toy();
  std::string bytes = serialize_checkpoint(Trainer(t.config, t.data.train, t.data.table).checkpoint());
  const auto pos = bytes.find("hidden = 4");
  bytes.replace(pos, 10, "hidden = 5");
  try {
    deserialize_checkpoint(bytes);
    FAIL() << "expected DataError";
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("shape mismatch"), std::string::npos) << e.what();
  }
  EXPECT_THROW(deserialize_checkpoint("not a checkpoint"), DataError);
}

TEST(Checkpoint, ResumeContinuesTrajectory) {
  const Toy t = toy();
  Trainer straight(t.config, t.data.train, t.data.table);
  straight.run(20);
  Trainer first(t.config, t.data.train, t.data.table);
  first.run(10);
  const auto path = temp_path("resume.ckpt");
  save_checkpoint(first.checkpoint(), path);
  Trainer resumed(load_checkpoint(path), t.data.train, t.data.table);
  resumed.run(10);
  const auto s = straight.metrics().losses();
  const auto r = resumed.metrics().losses();
  ASSERT_EQ(r.size(), 10u);
  for (std::size_t k = 0; k < 10; ++k) EXPECT_NEAR(r[k], s[10 + k], 1e-12);
  fs::remove(path);
}

TEST(Encode, UnsupervisedEnsembleAverages) {
  EncodedCorpus e;
  e.views = {Matrix{{1, 0}}, Matrix{{0, 1}}};
  combine_views(e);
  EXPECT_EQ(e.ensemble, (Matrix{{0.5, 0.5}}));
  e.regime = Regime::Supervised;
  combine_views(e);
  EXPECT_EQ(e.ensemble, (Matrix{{1, 0, 0, 1}}));
}

TEST(Encode, SupervisedWidthsAndDuplicates) {
  const Toy t = toy();
  const Trainer trainer(t.config, t.data.train, t.data.table);
  std::vector<Tokens> sentences(t.data.heldout.sentences.begin(), t.data.heldout.sentences.begin() + 10);
  sentences.push_back(sentences[3]);
  const EncodedCorpus sup = encode_corpus(trainer.checkpoint(), sentences, t.data.table, Regime::Supervised);
  const std::size_t h = t.config.hidden;
  EXPECT_EQ(sup.views[0].cols(), 8 * h);
  EXPECT_EQ(sup.views[1].cols(), 6 * h);
  EXPECT_EQ(sup.ensemble.cols(), 14 * h);
  const EncodedCorpus unsup = encode_corpus(trainer.checkpoint(), sentences, t.data.table, Regime::Unsupervised);
  for (const Matrix* m : {&sup.ensemble, &unsup.ensemble, &unsup.views[0], &unsup.views[1]}) {
    for (std::size_t j = 0; j < m->cols(); ++j) EXPECT_EQ((*m)(3, j), (*m)(10, j));
  }
  for (std::size_t i = 0; i < unsup.views[0].rows(); ++i) {
    EXPECT_NEAR(norm(unsup.views[0].row(i)), 1.0, 1e-12);
  }
}

TEST(Encode, EmptyCorpusRejected) {
  const Toy t = toy();
  const Trainer trainer(t.config, t.data.train, t.data.table);
  EXPECT_THROW(encode_corpus(trainer.checkpoint(), {}, t.data.table, Regime::Unsupervised), DataError);
}

TEST(Encode, SaveVectorsFormat) {
  const auto path = temp_path("vectors.txt");
  save_vectors(Matrix{{0.5, -1}, {0.1, 2}}, path);
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  EXPECT_EQ(ss.str(), "2 2\n0.5 -1\n0.1 2\n");
  fs::remove(path);
}
