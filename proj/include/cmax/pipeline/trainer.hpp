#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "cmax/numcore/adam.hpp"
#include "cmax/pipeline/checkpoint.hpp"
#include "cmax/pipeline/config.hpp"
#include "cmax/pipeline/model.hpp"
#include "cmax/textio/textio.hpp"

namespace cmax {

// Scores for the first slot, the second slot and their ensemble. Entries that
// do not apply (e.g. second slot of a single-view model) are NaN.
struct ViewScores {
  double first = std::numeric_limits<double>::quiet_NaN();
  double second = std::numeric_limits<double>::quiet_NaN();
  double ensemble = std::numeric_limits<double>::quiet_NaN();
};

struct MetricsRecord {
  std::uint64_t step = 0;
  double loss = 0.0;
  double tau = 1.0;
  std::optional<ViewScores> eval;
};

// Append-only; steps strictly increase.
class MetricsLog {
 public:
  void append(MetricsRecord record);
  // Attaches evaluation scores to the record at `step` (which must be the
  // latest record) or appends a loss-less record when none exists yet.
  void attach_eval(std::uint64_t step, const ViewScores& scores);

  const std::vector<MetricsRecord>& records() const { return records_; }
  bool empty() const { return records_.empty(); }
  std::vector<double> losses() const;

  // step,loss,tau,eval_first,eval_second,eval_ensemble
  std::string to_csv() const;
  void save_csv(const std::filesystem::path& path) const;

 private:
  std::vector<MetricsRecord> records_;
};

using Evaluator = std::function<ViewScores(const ModelParams&)>;

class Trainer {
 public:
  Trainer(TrainConfig config, const Corpus& corpus, const EmbeddingTable& table);
  // Resumes from a checkpoint; the corpus must be the one it was trained on.
  Trainer(const Checkpoint& checkpoint, const Corpus& corpus, const EmbeddingTable& table);

  void set_evaluator(Evaluator evaluator) { evaluator_ = std::move(evaluator); }

  // One optimization step. Returns the loss before the update.
  double step();
  void run(std::uint64_t steps);
  // Runs until the step/epoch budget of the configuration is exhausted.
  void run_to_budget();

  std::uint64_t steps_done() const { return adam_.step; }
  std::uint64_t budget() const;
  std::size_t windows_per_epoch() const { return windows_per_epoch_; }

  const TrainConfig& config() const { return config_; }
  const ModelParams& params() const { return params_; }
  const MetricsLog& metrics() const { return metrics_; }
  const AdamState& optimizer() const { return adam_; }

  Checkpoint checkpoint() const;

 private:
  void embed_corpus();
  std::size_t window_start(std::uint64_t step);
  void maybe_evaluate(bool force);

  TrainConfig config_;
  const Corpus& corpus_;
  const EmbeddingTable& table_;
  std::vector<Matrix> embedded_;
  std::size_t windows_per_epoch_ = 0;
  std::uint64_t cached_epoch_ = std::numeric_limits<std::uint64_t>::max();
  std::vector<std::size_t> epoch_order_;

  ModelParams params_;
  AdamState adam_;
  MetricsLog metrics_;
  Evaluator evaluator_;
};

struct TrainResult {
  Checkpoint checkpoint;
  MetricsLog metrics;
};

// Loads the corpus and word vectors named in the config and trains to budget.
TrainResult train(const TrainConfig& config, Evaluator evaluator = {});

}  // namespace cmax
