#include "cmax/numcore/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>
#include <vector>

#include "cmax/errors.hpp"

namespace cmax {

namespace {

double checked_eval(const DifferentiableFn& fn, const Matrix& x, const std::string& op) {
  const double value = fn(x, nullptr);
  if (!std::isfinite(value)) throw NumericalError(op + ": non-finite function value");
  return value;
}

}  // namespace

GradCheckReport finite_diff_check(const std::string& op, const DifferentiableFn& fn,
                                  const Matrix& point, const GradCheckOptions& options) {
  if (!(options.step > 0.0)) throw std::invalid_argument("finite_diff_check: step must be > 0");
  if (point.empty()) throw std::invalid_argument("finite_diff_check: empty point");

  Matrix analytic(point.rows(), point.cols());
  const double f0 = fn(point, &analytic);
  if (!std::isfinite(f0)) throw NumericalError(op + ": non-finite function value");

  std::vector<std::size_t> indices(point.size());
  std::iota(indices.begin(), indices.end(), std::size_t{0});
  if (options.probes > 0 && options.probes < indices.size()) {
    std::mt19937_64 rng(options.seed);
    std::shuffle(indices.begin(), indices.end(), rng);
    indices.resize(options.probes);
  }

  GradCheckReport report{op, 0.0, indices.size()};
  Matrix x = point;
  for (std::size_t idx : indices) {
    const double orig = x.flat()[idx];
    x.flat()[idx] = orig + options.step;
    const double fp = checked_eval(fn, x, op);
    x.flat()[idx] = orig - options.step;
    const double fm = checked_eval(fn, x, op);
    x.flat()[idx] = orig;

    const double numeric = (fp - fm) / (2.0 * options.step);
    const double a = analytic.flat()[idx];
    const double denom = std::max({std::abs(a), std::abs(numeric), 1e-8});
    report.max_relative_error = std::max(report.max_relative_error, std::abs(a - numeric) / denom);
  }
  return report;
}

}  // namespace cmax
