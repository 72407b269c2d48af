#include "cmax/postproc/postproc.hpp"

#include <cmath>
#include <random>
#include <stdexcept>
#include <string>

#include "cmax/errors.hpp"

namespace cmax {

namespace {

// Rows whose norm falls below this fraction of their pre-removal norm are
// treated as collapsed onto the removed component. The margin sits above the
// angular error a power iteration stopped at tolerance ~1e-8 leaves in u.
constexpr double kCollapseRatio = 1e-6;

Vector gram_times(const Matrix& x, const Vector& v) {
  Vector xv(x.rows());
  for (std::size_t i = 0; i < x.rows(); ++i) xv[i] = dot(x.row(i), v);
  Vector out(x.cols(), 0.0);
  for (std::size_t i = 0; i < x.rows(); ++i) {
    auto row = x.row(i);
    for (std::size_t k = 0; k < out.size(); ++k) out[k] += xv[i] * row[k];
  }
  return out;
}

}  // namespace

PrincipalComponent power_iteration_top(const Matrix& x, std::size_t max_iters, double tol,
                                       std::uint64_t seed) {
  if (x.rows() < 2) throw std::invalid_argument("power_iteration_top: need at least 2 rows");
  if (x.cols() == 0) throw std::invalid_argument("power_iteration_top: zero columns");
  bool nonzero = false;
  for (double v : x.flat()) nonzero = nonzero || v != 0.0;
  if (!nonzero) throw NumericalError("power_iteration_top: all-zero input");

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Vector v(x.cols());
  double n = 0.0;
  while (n == 0.0) {
    for (double& e : v) e = gauss(rng);
    n = norm(v);
  }
  for (double& e : v) e /= n;

  PrincipalComponent pc;
  for (std::size_t it = 0; it < max_iters; ++it) {
    Vector w = gram_times(x, v);
    double wn = norm(w);
    if (wn == 0.0) {
      // Start vector in the null space of XᵀX; restart from a fresh draw.
      for (double& e : v) e = gauss(rng);
      const double vn = norm(v);
      for (double& e : v) e /= vn;
      pc.iterations_used = it + 1;
      continue;
    }
    for (double& e : w) e /= wn;
    double diff = 0.0;
    for (std::size_t k = 0; k < v.size(); ++k) diff += (w[k] - v[k]) * (w[k] - v[k]);
    v = std::move(w);
    pc.iterations_used = it + 1;
    if (std::sqrt(diff) < tol) {
      pc.converged = true;
      break;
    }
  }
  pc.u = std::move(v);
  return pc;
}

Matrix remove_component(const Matrix& x, std::span<const double> u) {
  if (u.size() != x.cols()) {
    throw std::invalid_argument("remove_component: u has length " + std::to_string(u.size()) +
                                ", rows have " + std::to_string(x.cols()));
  }
  if (std::abs(norm(u) - 1.0) > 1e-9) {
    throw std::invalid_argument("remove_component: u is not unit length");
  }
  Matrix out = x;
  for (std::size_t i = 0; i < x.rows(); ++i) {
    const double proj = dot(x.row(i), u);
    auto row = out.row(i);
    for (std::size_t k = 0; k < row.size(); ++k) row[k] -= proj * u[k];
  }
  return out;
}

PostprocResult postprocess_with_component(const Matrix& x, const PrincipalComponent& pc) {
  PostprocResult r;
  r.pc = pc;
  r.removed = remove_component(x, pc.u);
  for (std::size_t i = 0; i < x.rows(); ++i) {
    const double before = norm(x.row(i));
    const double after = norm(r.removed.row(i));
    if (after == 0.0 || after <= kCollapseRatio * before) {
      throw NumericalError("postprocess: row " + std::to_string(i) +
                           " collapses onto the removed principal component");
    }
  }
  r.output = l2_normalize_rows(r.removed);
  return r;
}

PostprocResult postprocess_batch(const Matrix& x, const PostprocConfig& config) {
  require_finite(x, "postprocess_batch");
  return postprocess_with_component(
      x, power_iteration_top(x, config.max_iters, config.tol, config.seed));
}

Matrix postprocess_backward(const PostprocResult& forward, const Matrix& d_output) {
  // Removal is x (I - u uᵀ), a symmetric projection.
  Matrix d_removed = l2_normalize_rows_backward(forward.removed, forward.output, d_output);
  return remove_component(d_removed, forward.pc.u);
}

}  // namespace cmax
