#include "cmax/numcore/matrix.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "cmax/errors.hpp"

namespace cmax {

namespace {

void require_same_shape(const Matrix& a, const Matrix& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw std::invalid_argument(std::string(op) + ": shape mismatch " + a.shape_string() +
                                " vs " + b.shape_string());
  }
}

}  // namespace

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), values_(rows * cols, fill) {}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> values)
    : rows_(rows), cols_(cols), values_(std::move(values)) {
  if (values_.size() != rows_ * cols_) {
    throw std::invalid_argument("Matrix: " + std::to_string(values_.size()) +
                                " values for shape " + shape_string());
  }
}

Matrix::Matrix(std::initializer_list<std::initializer_list<double>> rows) {
  rows_ = rows.size();
  cols_ = rows_ == 0 ? 0 : rows.begin()->size();
  values_.reserve(rows_ * cols_);
  for (const auto& r : rows) {
    if (r.size() != cols_) throw std::invalid_argument("Matrix: ragged initializer");
    values_.insert(values_.end(), r.begin(), r.end());
  }
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Matrix Matrix::row_vector(std::span<const double> values) {
  return Matrix(1, values.size(), std::vector<double>(values.begin(), values.end()));
}

Matrix Matrix::stack_rows(const std::vector<Vector>& rows) {
  if (rows.empty()) return {};
  Matrix m(rows.size(), rows.front().size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != m.cols()) throw std::invalid_argument("stack_rows: ragged rows");
    std::copy(rows[i].begin(), rows[i].end(), m.row(i).begin());
  }
  return m;
}

void Matrix::fill(double v) { std::fill(values_.begin(), values_.end(), v); }

std::string Matrix::shape_string() const {
  return "(" + std::to_string(rows_) + "x" + std::to_string(cols_) + ")";
}

Matrix& Matrix::operator+=(const Matrix& other) {
  require_same_shape(*this, other, "operator+=");
  for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += other.values_[i];
  return *this;
}

Matrix& Matrix::operator-=(const Matrix& other) {
  require_same_shape(*this, other, "operator-=");
  for (std::size_t i = 0; i < values_.size(); ++i) values_[i] -= other.values_[i];
  return *this;
}

Matrix& Matrix::operator*=(double s) {
  for (double& v : values_) v *= s;
  return *this;
}

Matrix operator+(Matrix a, const Matrix& b) { return a += b; }
Matrix operator-(Matrix a, const Matrix& b) { return a -= b; }
Matrix operator*(Matrix a, double s) { return a *= s; }
Matrix operator*(double s, Matrix a) { return a *= s; }

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) {
    throw std::invalid_argument("matmul: dimension mismatch " + a.shape_string() + " x " +
                                b.shape_string());
  }
  Matrix out(a.rows(), b.cols());
  const std::size_t n = b.cols();
  for (std::size_t i = 0; i < a.rows(); ++i) {
    double* o = out.row(i).data();
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      const double* br = b.row(k).data();
      for (std::size_t j = 0; j < n; ++j) o[j] += aik * br[j];
    }
  }
  return out;
}

Matrix matmul_at_b(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows()) {
    throw std::invalid_argument("matmul_at_b: dimension mismatch " + a.shape_string() +
                                "^T x " + b.shape_string());
  }
  Matrix out(a.cols(), b.cols());
  const std::size_t n = b.cols();
  for (std::size_t k = 0; k < a.rows(); ++k) {
    const double* br = b.row(k).data();
    for (std::size_t i = 0; i < a.cols(); ++i) {
      const double aki = a(k, i);
      if (aki == 0.0) continue;
      double* o = out.row(i).data();
      for (std::size_t j = 0; j < n; ++j) o[j] += aki * br[j];
    }
  }
  return out;
}

Matrix matmul_a_bt(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.cols()) {
    throw std::invalid_argument("matmul_a_bt: dimension mismatch " + a.shape_string() + " x " +
                                b.shape_string() + "^T");
  }
  Matrix out(a.rows(), b.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < b.rows(); ++j) out(i, j) = dot(a.row(i), b.row(j));
  }
  return out;
}

Matrix transpose(const Matrix& a) {
  Matrix out(a.cols(), a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) out(j, i) = a(i, j);
  return out;
}

double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw std::invalid_argument("dot: length mismatch " + std::to_string(a.size()) + " vs " +
                                std::to_string(b.size()));
  }
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm(std::span<const double> a) { return std::sqrt(dot(a, a)); }

double global_norm(const std::vector<Matrix>& mats) {
  double s = 0.0;
  for (const auto& m : mats)
    for (double v : m.flat()) s += v * v;
  return std::sqrt(s);
}

bool all_finite(std::span<const double> values) {
  return std::all_of(values.begin(), values.end(), [](double v) { return std::isfinite(v); });
}

void require_finite(const Matrix& m, const char* what) {
  if (!all_finite(m.flat())) throw NumericalError(std::string(what) + ": non-finite entry");
}

double cosine(std::span<const double> u, std::span<const double> v) {
  if (u.size() != v.size()) {
    throw std::invalid_argument("cosine: length mismatch " + std::to_string(u.size()) + " vs " +
                                std::to_string(v.size()));
  }
  const double nu = norm(u);
  const double nv = norm(v);
  if (nu == 0.0 || nv == 0.0) throw NumericalError("cosine: zero-norm input");
  return dot(u, v) / (nu * nv);
}

void cosine_backward(std::span<const double> u, std::span<const double> v, double upstream,
                     std::span<double> du, std::span<double> dv) {
  const double nu = norm(u);
  const double nv = norm(v);
  if (nu == 0.0 || nv == 0.0) throw NumericalError("cosine: zero-norm input");
  const double c = dot(u, v) / (nu * nv);
  const double inv = 1.0 / (nu * nv);
  const double cu = c / (nu * nu);
  const double cv = c / (nv * nv);
  for (std::size_t k = 0; k < u.size(); ++k) {
    du[k] += upstream * (v[k] * inv - cu * u[k]);
    dv[k] += upstream * (u[k] * inv - cv * v[k]);
  }
}

Matrix l2_normalize_rows(const Matrix& x) {
  Matrix out = x;
  for (std::size_t i = 0; i < x.rows(); ++i) {
    const double n = norm(x.row(i));
    if (n == 0.0) throw NumericalError("l2_normalize_rows: zero row " + std::to_string(i));
    for (double& v : out.row(i)) v /= n;
  }
  return out;
}

Matrix l2_normalize_rows_backward(const Matrix& input, const Matrix& output,
                                  const Matrix& d_output) {
  Matrix d_input(input.rows(), input.cols());
  for (std::size_t i = 0; i < input.rows(); ++i) {
    const double n = norm(input.row(i));
    const double proj = dot(output.row(i), d_output.row(i));
    for (std::size_t k = 0; k < input.cols(); ++k) {
      d_input(i, k) = (d_output(i, k) - output(i, k) * proj) / n;
    }
  }
  return d_input;
}

double clip_global_norm_inplace(std::vector<Matrix>& grads, double max_norm) {
  if (!(max_norm > 0.0)) throw std::invalid_argument("clip_global_norm: max_norm must be > 0");
  const double total = global_norm(grads);
  if (total > max_norm) {
    const double scale = max_norm / total;
    for (auto& g : grads) g *= scale;
  }
  return total;
}

std::vector<Matrix> clip_global_norm(std::vector<Matrix> grads, double max_norm) {
  clip_global_norm_inplace(grads, max_norm);
  return grads;
}

Vector column_mean(const Matrix& x) {
  if (x.rows() == 0) throw std::invalid_argument("column_mean: empty matrix");
  Vector out(x.cols(), 0.0);
  for (std::size_t i = 0; i < x.rows(); ++i)
    for (std::size_t k = 0; k < x.cols(); ++k) out[k] += x(i, k);
  for (double& v : out) v /= static_cast<double>(x.rows());
  return out;
}

}  // namespace cmax
