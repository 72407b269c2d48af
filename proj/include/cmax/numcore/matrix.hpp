#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace cmax {

using Vector = std::vector<double>;

// Dense row-major float64 matrix. Vectors that take part in matrix algebra
// are represented as 1 x n matrices; free-standing vectors use Vector.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> values);
  Matrix(std::initializer_list<std::initializer_list<double>> rows);

  static Matrix identity(std::size_t n);
  static Matrix row_vector(std::span<const double> values);
  static Matrix stack_rows(const std::vector<Vector>& rows);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return values_.size(); }
  bool empty() const { return values_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return values_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return values_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {values_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {values_.data() + r * cols_, cols_}; }

  std::span<double> flat() { return values_; }
  std::span<const double> flat() const { return values_; }
  const std::vector<double>& values() const { return values_; }

  void fill(double v);
  std::string shape_string() const;

  bool operator==(const Matrix& other) const = default;

  Matrix& operator+=(const Matrix& other);
  Matrix& operator-=(const Matrix& other);
  Matrix& operator*=(double s);

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> values_;
};

Matrix operator+(Matrix a, const Matrix& b);
Matrix operator-(Matrix a, const Matrix& b);
Matrix operator*(Matrix a, double s);
Matrix operator*(double s, Matrix a);

// a (r x k) * b (k x c)
Matrix matmul(const Matrix& a, const Matrix& b);
// a^T * b, with a (k x r), b (k x c)
Matrix matmul_at_b(const Matrix& a, const Matrix& b);
// a * b^T, with a (r x k), b (c x k)
Matrix matmul_a_bt(const Matrix& a, const Matrix& b);
Matrix transpose(const Matrix& a);

double dot(std::span<const double> a, std::span<const double> b);
double norm(std::span<const double> a);
// Frobenius norm over every entry of every matrix.
double global_norm(const std::vector<Matrix>& mats);

bool all_finite(std::span<const double> values);
void require_finite(const Matrix& m, const char* what);

// uᵀv / (‖u‖‖v‖). Throws NumericalError on a zero-norm input.
double cosine(std::span<const double> u, std::span<const double> v);

// Adds upstream * d cos(u, v)/du into du and d cos/dv into dv.
void cosine_backward(std::span<const double> u, std::span<const double> v, double upstream,
                     std::span<double> du, std::span<double> dv);

// Divides each row by its Euclidean norm. Throws NumericalError on a zero row.
Matrix l2_normalize_rows(const Matrix& x);

// Backward of l2_normalize_rows given the forward input and output.
Matrix l2_normalize_rows_backward(const Matrix& input, const Matrix& output, const Matrix& d_output);

// Scales every gradient by max_norm / global_norm when the global norm exceeds
// max_norm. Returns the pre-clipping global norm.
double clip_global_norm_inplace(std::vector<Matrix>& grads, double max_norm);
std::vector<Matrix> clip_global_norm(std::vector<Matrix> grads, double max_norm);

Vector column_mean(const Matrix& x);

}  // namespace cmax
