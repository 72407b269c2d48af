#pragma once

#include <cstdint>
#include <span>

#include "cmax/numcore/matrix.hpp"

namespace cmax {

struct PrincipalComponent {
  Vector u;  // unit length; sign is arbitrary
  std::size_t iterations_used = 0;
  bool converged = false;
};

// Dominant eigenvector of XᵀX by power iteration from a seeded random unit
// start. Stops when successive iterates differ by less than tol.
PrincipalComponent power_iteration_top(const Matrix& x, std::size_t max_iters, double tol,
                                       std::uint64_t seed);

// x_i <- x_i - (uᵀx_i) u for every row. u must be unit length within 1e-9.
Matrix remove_component(const Matrix& x, std::span<const double> u);

struct PostprocConfig {
  std::size_t max_iters = 100;
  double tol = 1e-8;
  std::uint64_t seed = 0;
};

struct PostprocResult {
  Matrix output;   // unit rows orthogonal to pc.u
  Matrix removed;  // rows after component removal, before normalization
  PrincipalComponent pc;
};

// Top-component removal followed by row l2 normalization. Throws
// NumericalError naming the row when removal leaves a (near-)zero row.
PostprocResult postprocess_batch(const Matrix& x, const PostprocConfig& config);

// Removal and normalization with a given component (no power iteration).
PostprocResult postprocess_with_component(const Matrix& x, const PrincipalComponent& pc);

// Gradient through removal and normalization with pc.u held constant.
Matrix postprocess_backward(const PostprocResult& forward, const Matrix& d_output);

}  // namespace cmax
