#pragma once

#include <cstdint>
#include <functional>
#include <string>

#include "cmax/numcore/matrix.hpp"

namespace cmax {

struct GradCheckReport {
  std::string op;
  double max_relative_error = 0.0;
  std::size_t probe_count = 0;
};

// Scalar map with an analytic gradient. When `grad` is non-null the callee
// writes d f / d x into it (same shape as x).
using DifferentiableFn = std::function<double(const Matrix& x, Matrix* grad)>;

struct GradCheckOptions {
  double step = 1e-5;
  // Number of randomly chosen entries to probe; 0 probes every entry.
  std::size_t probes = 0;
  std::uint64_t seed = 0;
};

// Central differences (f(x+h) - f(x-h)) / 2h compared entrywise with the
// analytic gradient. Relative error uses max(|analytic|, |numeric|, 1e-8).
GradCheckReport finite_diff_check(const std::string& op, const DifferentiableFn& fn,
                                  const Matrix& point, const GradCheckOptions& options = {});

}  // namespace cmax
