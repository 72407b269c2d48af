// Acceptance harness: prints one PASS/FAIL line per criterion and exits
// non-zero if any criterion fails.
//   acceptance [--only N[,N...]] [--unit-tests <binary>]
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "cmax/evalsuite/metrics.hpp"
#include "cmax/evalsuite/probe.hpp"
#include "cmax/evalsuite/synthetic.hpp"
#include "cmax/objective/objective.hpp"
#include "cmax/pipeline/checkpoint.hpp"
#include "cmax/pipeline/encode.hpp"
#include "cmax/pipeline/gradcheck_suite.hpp"
#include "cmax/pipeline/trainer.hpp"
#include "cmax/postproc/postproc.hpp"
#include "oracles.hpp"

using namespace cmax;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, double a) {
  char buf[128];
  std::snprintf(buf, sizeof(buf), f, a);
  return buf;
}

// 1. Gradient exactness.
Outcome criterion_gradients() {
  const auto t0 = Clock::now();
  const auto reports = run_gradcheck_suite(7);
  double worst = 0.0;
  std::string worst_op;
  std::size_t min_probes = SIZE_MAX;
  for (const auto& r : reports) {
    if (r.max_relative_error >= worst) {
      worst = r.max_relative_error;
      worst_op = r.op;
    }
    min_probes = std::min(min_probes, r.probe_count);
  }
  const double secs = seconds_since(t0);
  Outcome o;
  o.pass = worst <= 1e-4 && min_probes >= 10 && secs < 120.0;
  o.detail = std::to_string(reports.size()) + " checks, worst " + fmt("%.2e", worst) + " (" +
             worst_op + "), min probes " + std::to_string(min_probes) + ", " +
             fmt("%.1fs", secs);
  return o;
}

// 2. Analytic loss values and softmax normalization.
Outcome criterion_loss_values() {
  Temperature tau;  // log τ = 0
  const double l4 = contrastive_loss(Matrix(4, 4), tau, {1, true, false}).loss;
  const double l2 = contrastive_loss(Matrix{{2, 0}, {0, 2}}, tau, {1, true, false}).loss;
  std::mt19937_64 rng(3);
  std::normal_distribution<double> g(0.0, 5.0);
  double worst_row = 0.0;
  for (int t = 0; t < 20; ++t) {
    Matrix logits(9, 9);
    for (double& v : logits.flat()) v = g(rng);
    const Matrix p = softmax_rows(logits);
    for (std::size_t i = 0; i < p.rows(); ++i) {
      double s = 0.0;
      for (double v : p.row(i)) s += v;
      worst_row = std::max(worst_row, std::abs(s - 1.0));
    }
  }
  const double e4 = std::abs(l4 - 10.0 * std::log(4.0));
  const double e2 = std::abs(l2 - 4.5076);
  Outcome o;
  o.pass = e4 <= 1e-9 && e2 <= 1e-3 && worst_row <= 1e-12;
  o.detail = "N=4 err " + fmt("%.1e", e4) + ", N=2 loss " + fmt("%.6f", l2) + ", row-sum err " +
             fmt("%.1e", worst_row);
  return o;
}

// 3. Power iteration against a Jacobi eigen-oracle.
Outcome criterion_power_iteration() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(11);
  std::normal_distribution<double> g(0.0, 1.0);
  std::size_t accepted = 0, drawn = 0;
  double worst_cos = 1.0, worst_idem = 0.0, worst_orth = 0.0;
  while (accepted < 50) {
    ++drawn;
    Matrix x(20, 8);
    for (double& v : x.flat()) v = g(rng);
    const auto top = oracle::top_eigen(oracle::gram(x.values(), 20, 8));
    if (top.relative_gap < 0.1) continue;
    ++accepted;
    const PrincipalComponent pc = power_iteration_top(x, 100, 1e-12, accepted);
    worst_cos = std::min(worst_cos, std::abs(oracle::cosine(pc.u, top.vector)));
    const Matrix once = remove_component(x, pc.u);
    const Matrix twice = remove_component(once, pc.u);
    for (std::size_t k = 0; k < once.size(); ++k) {
      worst_idem = std::max(worst_idem, std::abs(once.flat()[k] - twice.flat()[k]));
    }
    for (std::size_t i = 0; i < once.rows(); ++i) {
      worst_orth = std::max(worst_orth, std::abs(dot(once.row(i), pc.u)));
    }
  }
  const double secs = seconds_since(t0);
  Outcome o;
  o.pass = worst_cos >= 0.999 && worst_idem <= 1e-12 && worst_orth <= 1e-10 && secs < 60.0;
  o.detail = "50 matrices (" + std::to_string(drawn) + " drawn), min |cos| " +
             fmt("%.6f", worst_cos) + ", idempotence " + fmt("%.1e", worst_idem) +
             ", |X'u| " + fmt("%.1e", worst_orth) + ", " + fmt("%.1fs", secs);
  return o;
}

TrainConfig synthetic_config(ObjectiveVariant variant, std::uint64_t seed, std::uint64_t steps) {
  TrainConfig c;
  c.variant = variant;
  c.batch_size = 16;
  c.context = 2;
  c.dim = 50;
  c.hidden = 64;
  c.max_steps = steps;
  c.seed = seed;
  return c;
}

// 4. Determinism and checkpoint persistence.
Outcome criterion_determinism() {
  SyntheticConfig sc;
  sc.train_docs = 40;
  sc.seed = 5;
  const SyntheticData data = generate_synthetic(sc);
  TrainConfig c = synthetic_config(ObjectiveVariant::MultiViewFG, 5, 20);
  c.hidden = 16;

  Trainer a(c, data.train, data.table), b(c, data.train, data.table);
  a.run(20);
  b.run(20);
  double same_seed = 0.0;
  const auto la = a.metrics().losses(), lb = b.metrics().losses();
  for (std::size_t k = 0; k < la.size(); ++k) same_seed = std::max(same_seed, std::abs(la[k] - lb[k]));

  Trainer first(c, data.train, data.table);
  first.run(10);
  const std::string bytes = serialize_checkpoint(first.checkpoint());
  const Checkpoint restored = deserialize_checkpoint(bytes);
  const bool byte_identical = serialize_checkpoint(restored) == bytes;
  Trainer resumed(restored, data.train, data.table);
  resumed.run(10);
  std::vector<double> joined = first.metrics().losses();
  for (double l : resumed.metrics().losses()) joined.push_back(l);
  double resumed_diff = 0.0;
  for (std::size_t k = 0; k < la.size(); ++k) resumed_diff = std::max(resumed_diff, std::abs(joined[k] - la[k]));

  Outcome o;
  o.pass = la.size() == 20 && joined.size() == 20 && same_seed <= 1e-12 && resumed_diff <= 1e-12 &&
           byte_identical;
  o.detail = "same-seed max diff " + fmt("%.1e", same_seed) + ", resumed max diff " +
             fmt("%.1e", resumed_diff) + ", re-save byte-identical " + (byte_identical ? "yes" : "no");
  return o;
}

// 5. Desk-scale replication of the variant ordering.
constexpr std::uint64_t kReplicationSteps = 3000;

Outcome criterion_replication() {
  const auto t0 = Clock::now();
  std::size_t ok_a = 0, ok_b = 0, ok_c = 0;
  std::ostringstream rows;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    SyntheticConfig sc;
    sc.seed = seed;
    const SyntheticData data = generate_synthetic(sc);
    auto recall = [&](ObjectiveVariant v) {
      const TrainConfig c = synthetic_config(v, seed, kReplicationSteps);
      Trainer t(c, data.train, data.table);
      t.run_to_budget();
      return eval_retrieval(model_encoder(t.params(), c), data.heldout, data.table);
    };
    const ViewScores fg = recall(ObjectiveVariant::MultiViewFG);
    const ViewScores f = recall(ObjectiveVariant::SingleViewF);
    const ViewScores g = recall(ObjectiveVariant::SingleViewG);
    const bool a = fg.first >= f.first, b = fg.second >= g.first;
    const bool c = fg.ensemble >= std::max(fg.first, fg.second);
    ok_a += a;
    ok_b += b;
    ok_c += c;
    rows << "\n    seed " << seed << ": FG f=" << fmt("%.3f", fg.first) << " g=" << fmt("%.3f", fg.second)
         << " ens=" << fmt("%.3f", fg.ensemble) << " | SingleViewF f=" << fmt("%.3f", f.first)
         << " | SingleViewG g=" << fmt("%.3f", g.first) << "  [" << (a ? 'a' : '-') << (b ? 'b' : '-')
         << (c ? 'c' : '-') << "]";
  }
  const double secs = seconds_since(t0);
  Outcome o;
  o.pass = ok_a >= 4 && ok_b >= 4 && ok_c >= 4 && secs < 900.0;
  o.detail = "(a) " + std::to_string(ok_a) + "/5, (b) " + std::to_string(ok_b) + "/5, (c) " +
             std::to_string(ok_c) + "/5 seeds, " + fmt("%.0fs", secs) + rows.str();
  return o;
}

// Mean total loss over a fixed set of windows at the given parameters.
double fixed_batch_loss(const ModelParams& params, const TrainConfig& c,
                        const std::vector<Matrix>& embedded, const std::vector<std::size_t>& starts) {
  double total = 0.0;
  for (std::size_t k = 0; k < starts.size(); ++k) {
    std::vector<const Matrix*> batch;
    for (std::size_t i = 0; i < c.batch_size; ++i) batch.push_back(&embedded[starts[k] + i]);
    BatchOptions bo;
    bo.context = c.context;
    bo.power_iters = c.train_power_iters;
    bo.power_seed = 1000 + k;
    total += evaluate_batch(params, batch, bo, false).loss;
  }
  return total / static_cast<double>(starts.size());
}

// 6. Training sanity on the synthetic corpus.
Outcome criterion_training_sanity() {
  SyntheticConfig sc;
  sc.seed = 1;
  const SyntheticData data = generate_synthetic(sc);
  const TrainConfig c = synthetic_config(ObjectiveVariant::MultiViewFG, 1, kReplicationSteps);
  const std::vector<Matrix> train_embedded = embed_all(data.train.sentences, data.table);
  std::vector<std::size_t> starts = batch_windows(data.train, c.batch_size);
  starts.resize(40);

  Trainer t(c, data.train, data.table);
  const double before = fixed_batch_loss(t.params(), c, train_embedded, starts);
  t.run(200);
  const double after = fixed_batch_loss(t.params(), c, train_embedded, starts);
  t.run_to_budget();

  const std::vector<Matrix> held = embed_all(data.heldout.sentences, data.table);
  const auto reps = training_representations(t.params(), held, c.test_power_iters, c.power_tol, c.seed);
  const auto docs = data.heldout.document_ids();
  const Matrix& f = reps[0];
  const Matrix& g = reps[1];
  double adjacent = 0.0;
  std::size_t n_adj = 0;
  for (std::size_t i = 0; i + 1 < f.rows(); ++i) {
    if (docs[i] != docs[i + 1]) continue;
    adjacent += 0.5 * (dot(f.row(i), g.row(i + 1)) + dot(g.row(i), f.row(i + 1)));
    ++n_adj;
  }
  adjacent /= static_cast<double>(n_adj);
  std::mt19937_64 rng(99);
  std::uniform_int_distribution<std::size_t> any(0, f.rows() - 1);
  double random = 0.0;
  const std::size_t n_rand = 5000;
  for (std::size_t k = 0; k < n_rand;) {
    const std::size_t i = any(rng), j = any(rng);
    if (i == j) continue;
    random += 0.5 * (dot(f.row(i), g.row(j)) + dot(g.row(i), f.row(j)));
    ++k;
  }
  random /= static_cast<double>(n_rand);

  Outcome o;
  o.pass = after < before && adjacent - random >= 0.1;
  o.detail = "fixed-batch loss " + fmt("%.3f", before) + " -> " + fmt("%.3f", after) +
             " after 200 steps; after " + std::to_string(t.steps_done()) +
             " steps adjacent cross-view cos " + fmt("%.3f", adjacent) + " vs random " +
             fmt("%.3f", random);
  return o;
}

// 7. Probe correctness.
Outcome criterion_probe() {
  std::mt19937_64 rng(21);
  std::normal_distribution<double> g(0.0, 1.0);
  Matrix sep(200, 2);
  std::vector<std::size_t> sep_labels(200);
  for (std::size_t i = 0; i < 200; ++i) {
    sep_labels[i] = i % 2;
    const double side = sep_labels[i] ? 1.0 : -1.0;
    sep(i, 0) = side * (0.5 + std::abs(g(rng)));
    sep(i, 1) = g(rng);
  }
  ProbeConfig pc;
  pc.seed = 1;
  const ProbeModel sep_model = train_probe(sep, sep_labels, pc);
  const double sep_acc = eval_probe(sep_model, sep, sep_labels);

  double worst = 0.0, mean = 0.0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    std::mt19937_64 r(100 + seed);
    Matrix x(4000, 10);
    for (double& v : x.flat()) v = g(r);
    std::vector<std::size_t> labels(4000);
    for (std::size_t i = 0; i < labels.size(); ++i) labels[i] = i % 2;
    std::shuffle(labels.begin(), labels.end(), r);
    ProbeConfig shuffled;
    shuffled.seed = seed;
    const double dev = train_probe(x, labels, shuffled).dev_accuracy;
    mean += dev / 10.0;
    worst = std::max(worst, std::abs(dev - 0.5));
  }
  Outcome o;
  o.pass = sep_acc == 1.0 && worst <= 0.1;
  o.detail = "separable accuracy " + fmt("%.3f", sep_acc) + "; shuffled dev accuracy mean " +
             fmt("%.3f", mean) + ", max |acc-0.5| " + fmt("%.3f", worst) + " over 10 seeds";
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  const auto t0 = Clock::now();
  std::set<int> only;
  std::string unit_tests;
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--only" && i + 1 < argc) {
      std::stringstream ss(argv[++i]);
      std::string item;
      while (std::getline(ss, item, ',')) only.insert(std::stoi(item));
    } else if (arg == "--unit-tests" && i + 1 < argc) {
      unit_tests = argv[++i];
    } else {
      std::fprintf(stderr, "usage: acceptance [--only N,...] [--unit-tests <binary>]\n");
      return 2;
    }
  }

  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"gradient exactness", criterion_gradients},
      {"analytic loss values", criterion_loss_values},
      {"power-iteration oracle", criterion_power_iteration},
      {"determinism and persistence", criterion_determinism},
      {"desk-scale variant ordering", criterion_replication},
      {"training sanity", criterion_training_sanity},
      {"probe correctness", criterion_probe},
  };

  bool all = true;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    const int id = static_cast<int>(k + 1);
    if (!only.empty() && !only.count(id)) continue;
    Outcome o;
    try {
      o = criteria[k].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    all = all && o.pass;
    std::printf("[%s] %d. %s: %s\n", o.pass ? "PASS" : "FAIL", id, criteria[k].first.c_str(),
                o.detail.c_str());
    std::fflush(stdout);
  }

  if (only.empty() || only.count(8)) {
    double unit_secs = 0.0;
    bool unit_ok = true;
    if (!unit_tests.empty()) {
      const auto u0 = Clock::now();
      const std::string cmd = "\"" + unit_tests + "\" > /dev/null 2>&1";
      unit_ok = std::system(cmd.c_str()) == 0;
      unit_secs = seconds_since(u0);
    }
    const double total = seconds_since(t0);
    const bool pass = unit_ok && total < 25.0 * 60.0;
    all = all && pass;
    std::printf("[%s] 8. full suite runtime: %.0fs total (unit tests %.0fs%s), budget 1500s\n",
                pass ? "PASS" : "FAIL", total, unit_secs,
                unit_tests.empty() ? ", not run" : (unit_ok ? "" : ", FAILED"));
  }
  return all ? 0 : 1;
}
