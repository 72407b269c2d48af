#pragma once

#include <cstdint>
#include <vector>

#include "cmax/numcore/matrix.hpp"

namespace cmax {

struct ProbeConfig {
  double dev_fraction = 0.2;
  std::size_t epochs = 300;
  double lr = 0.05;
  std::uint64_t seed = 0;
};

// Multinomial logistic regression: logits = x W + b.
struct ProbeModel {
  Matrix weight;  // feature dim x K
  Vector bias;    // K
  double dev_accuracy = 0.0;

  std::size_t classes() const { return bias.size(); }
};

// Full-batch Adam on the mean cross-entropy of the training part of a seeded
// train/dev split; returns the parameters with the best dev accuracy (the
// earliest epoch on ties). With dev_fraction 0 the training rows double as
// the dev set. Labels must be 0..K-1 with K >= 2.
ProbeModel train_probe(const Matrix& features, const std::vector<std::size_t>& labels,
                       const ProbeConfig& config = {});

// Argmax class per row; ties go to the lowest class id.
std::vector<std::size_t> probe_predict(const ProbeModel& model, const Matrix& features);

double eval_probe(const ProbeModel& model, const Matrix& features,
                  const std::vector<std::size_t>& labels);

}  // namespace cmax
