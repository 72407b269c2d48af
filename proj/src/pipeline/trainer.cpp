#include "cmax/pipeline/trainer.hpp"

#include <algorithm>
#include <fstream>
#include <utility>
#include <sstream>

#include "cmax/errors.hpp"

namespace cmax {

namespace {

AdamConfig adam_config(const TrainConfig& c) { return {c.lr, c.beta1, c.beta2, c.epsilon}; }

std::string csv_number(double v) { return std::isnan(v) ? std::string() : format_double(v); }

}  // namespace

void MetricsLog::append(MetricsRecord record) {
  if (!records_.empty() && record.step <= records_.back().step) {
    throw std::invalid_argument("MetricsLog: steps must strictly increase");
  }
  records_.push_back(std::move(record));
}

void MetricsLog::attach_eval(std::uint64_t step, const ViewScores& scores) {
  if (!records_.empty() && records_.back().step == step) {
    records_.back().eval = scores;
    return;
  }
  MetricsRecord r;
  r.step = step;
  r.loss = std::numeric_limits<double>::quiet_NaN();
  r.tau = std::numeric_limits<double>::quiet_NaN();
  r.eval = scores;
  append(std::move(r));
}

std::vector<double> MetricsLog::losses() const {
  std::vector<double> out;
  for (const auto& r : records_) {
    if (!std::isnan(r.loss)) out.push_back(r.loss);
  }
  return out;
}

std::string MetricsLog::to_csv() const {
  std::ostringstream out;
  out << "step,loss,tau,eval_first,eval_second,eval_ensemble\n";
  for (const auto& r : records_) {
    out << r.step << ',' << csv_number(r.loss) << ',' << csv_number(r.tau);
    if (r.eval) {
      out << ',' << csv_number(r.eval->first) << ',' << csv_number(r.eval->second) << ','
          << csv_number(r.eval->ensemble);
    } else {
      out << ",,,";
    }
    out << '\n';
  }
  return out.str();
}

void MetricsLog::save_csv(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write metrics " + path.string());
  out << to_csv();
  if (!out) throw DataError("failed writing metrics " + path.string());
}

Trainer::Trainer(TrainConfig config, const Corpus& corpus, const EmbeddingTable& table)
    : config_(std::move(config)), corpus_(corpus), table_(table) {
  config_.validate();
  if (table_.dim() != config_.dim) {
    throw ConfigError("config dim " + std::to_string(config_.dim) +
                      " does not match word vector dim " + std::to_string(table_.dim()));
  }
  params_ = init_model(config_.variant, config_.dim, config_.hidden, config_.seed);
  adam_.config = adam_config(config_);
  embed_corpus();
}

Trainer::Trainer(const Checkpoint& checkpoint, const Corpus& corpus, const EmbeddingTable& table)
    : config_(checkpoint.config),
      corpus_(corpus),
      table_(table),
      params_(checkpoint.params),
      adam_(checkpoint.adam) {
  config_.validate();
  if (table_.dim() != config_.dim) {
    throw ConfigError("checkpoint dim does not match word vector dim");
  }
  embed_corpus();
}

void Trainer::embed_corpus() {
  windows_per_epoch_ = batch_windows(corpus_, config_.batch_size).size();
  embedded_.clear();
  embedded_.reserve(corpus_.size());
  for (const auto& s : corpus_.sentences) embedded_.push_back(embed_sentence(s, table_));
}

std::uint64_t Trainer::budget() const {
  std::uint64_t b = std::numeric_limits<std::uint64_t>::max();
  if (config_.max_steps > 0) b = config_.max_steps;
  if (config_.epochs > 0) b = std::min<std::uint64_t>(b, config_.epochs * windows_per_epoch_);
  return b;
}

std::size_t Trainer::window_start(std::uint64_t step) {
  const std::uint64_t epoch = step / windows_per_epoch_;
  if (epoch != cached_epoch_) {
    epoch_order_ = shuffled_windows(corpus_, config_.batch_size, mix_seed(config_.seed, epoch));
    cached_epoch_ = epoch;
  }
  return epoch_order_[step % windows_per_epoch_];
}

double Trainer::step() {
  const std::uint64_t s = adam_.step;
  const std::size_t start = window_start(s);
  std::vector<const Matrix*> batch;
  for (std::size_t i = 0; i < config_.batch_size; ++i) batch.push_back(&embedded_[start + i]);

  BatchOptions options;
  options.context = config_.context;
  options.average = config_.loss_average;
  options.power_iters = config_.train_power_iters;
  options.power_tol = config_.power_tol;
  options.power_seed = mix_seed(config_.seed, s);

  BatchResult result;
  try {
    result = evaluate_batch(params_, batch, options, true);
  } catch (const NumericalError& e) {
    throw NumericalError("step " + std::to_string(s) + ": " + e.what());
  }

  MetricsRecord record;
  record.step = s;
  record.loss = result.loss;
  record.tau = params_.temperature.value();
  metrics_.append(record);
  if (evaluator_ && config_.eval_every > 0 && s % config_.eval_every == 0) {
    metrics_.attach_eval(s, evaluator_(params_));
  }

  std::vector<Matrix> grads;
  for (const Matrix* g : std::as_const(result.grads).matrices()) grads.push_back(*g);
  grads.emplace_back(1, 1, result.grads.temperature.log_tau);
  clip_global_norm_inplace(grads, config_.clip_norm);

  Matrix log_tau(1, 1, params_.temperature.log_tau);
  std::vector<Matrix*> targets = params_.matrices();
  targets.push_back(&log_tau);
  adam_step(targets, grads, adam_);
  params_.temperature.log_tau = log_tau(0, 0);

  for (const Matrix* m : std::as_const(params_).matrices()) {
    if (!all_finite(m->flat())) {
      throw NumericalError("step " + std::to_string(s) + ": non-finite parameters after update");
    }
  }
  return result.loss;
}

void Trainer::run(std::uint64_t steps) {
  for (std::uint64_t k = 0; k < steps; ++k) step();
}

void Trainer::run_to_budget() {
  while (adam_.step < budget()) step();
  maybe_evaluate(true);
}

void Trainer::maybe_evaluate(bool force) {
  if (!evaluator_ || config_.eval_every == 0) return;
  if (!force && adam_.step % config_.eval_every != 0) return;
  if (!metrics_.empty() && metrics_.records().back().step >= adam_.step &&
      metrics_.records().back().eval) {
    return;
  }
  metrics_.attach_eval(adam_.step, evaluator_(params_));
}

Checkpoint Trainer::checkpoint() const {
  Checkpoint c;
  c.config = config_;
  c.params = params_;
  c.adam = adam_;
  return c;
}

TrainResult train(const TrainConfig& config, Evaluator evaluator) {
  config.validate();
  if (config.corpus.empty()) throw ConfigError("config key 'corpus' is required");
  if (config.vectors.empty()) throw ConfigError("config key 'vectors' is required");
  const Corpus corpus = load_corpus(config.corpus);
  const EmbeddingTable table = load_word_vectors(config.vectors);
  Trainer trainer(config, corpus, table);
  trainer.set_evaluator(std::move(evaluator));
  trainer.run_to_budget();
  return {trainer.checkpoint(), trainer.metrics()};
}

}  // namespace cmax
