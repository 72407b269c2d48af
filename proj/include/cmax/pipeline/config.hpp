#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include "cmax/objective/objective.hpp"

namespace cmax {

// Training configuration. Defaults are toy-scale choices; the published
// model's batch size, window, and dimensions are not known.
struct TrainConfig {
  ObjectiveVariant variant = ObjectiveVariant::MultiViewFG;
  std::size_t batch_size = 16;
  std::size_t context = 2;
  std::size_t dim = 50;
  std::size_t hidden = 64;
  std::uint64_t epochs = 0;     // 0: no epoch limit
  std::uint64_t max_steps = 1000;  // 0: no step limit
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double clip_norm = 5.0;
  bool loss_average = false;
  std::size_t train_power_iters = 5;
  std::size_t test_power_iters = 100;
  double power_tol = 1e-8;
  std::uint64_t seed = 1;
  std::uint64_t eval_every = 0;  // 0: no evaluation during training

  std::string corpus;
  std::string vectors;
  std::string eval_pairs;      // STS tsv for learning curves / ablation
  std::string eval_corpus;     // held-out stream for adjacent-sentence retrieval
  std::string eval_cls_train;  // classification tsv pair for the linear probe
  std::string eval_cls_test;

  // Throws ConfigError on violated invariants.
  void validate() const;

  // Flat "key = value" text in a fixed key order.
  std::string to_text() const;
};

// Parses "key = value" lines; '#' starts a comment. Unknown keys, malformed
// lines and bad values raise ConfigError. Relative paths are resolved
// against base_dir when it is non-empty.
TrainConfig parse_config(std::string_view text, const std::filesystem::path& base_dir = {});
TrainConfig load_config(const std::filesystem::path& path);

// Shortest decimal representation that round-trips exactly.
std::string format_double(double v);

}  // namespace cmax
