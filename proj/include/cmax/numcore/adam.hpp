#pragma once

#include <cstdint>
#include <vector>

#include "cmax/numcore/matrix.hpp"

namespace cmax {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// First/second moment estimates, one pair per parameter matrix. Moments are
// allocated lazily on the first update so the state can be built before the
// parameter set is known.
struct AdamState {
  AdamConfig config;
  std::uint64_t step = 0;
  std::vector<Matrix> m;
  std::vector<Matrix> v;
};

// One bias-corrected Adam update. Parameters are updated in place.
void adam_step(const std::vector<Matrix*>& params, const std::vector<Matrix>& grads,
               AdamState& state);

}  // namespace cmax
