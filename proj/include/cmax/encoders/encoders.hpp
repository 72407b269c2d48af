#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string_view>
#include <vector>

#include "cmax/numcore/matrix.hpp"

namespace cmax {

// One direction of a GRU, row-vector convention:
//   z = σ(x W_z + h U_z + b_z)
//   r = σ(x W_r + h U_r + b_r)
//   h̃ = tanh(x W_h + (r ⊙ h) U_h + b_h)
//   h' = (1 - z) ⊙ h + z ⊙ h̃
struct GruDirection {
  Matrix w_z, w_r, w_h;  // input_dim x hidden
  Matrix u_z, u_r, u_h;  // hidden x hidden
  Matrix b_z, b_r, b_h;  // 1 x hidden

  GruDirection() = default;
  GruDirection(std::size_t input_dim, std::size_t hidden);

  std::size_t input_dim() const { return w_z.rows(); }
  std::size_t hidden() const { return w_z.cols(); }

  // Fixed order used by optimizers and checkpoints.
  std::vector<Matrix*> matrices();
  std::vector<const Matrix*> matrices() const;
};

struct GruParams {
  GruDirection forward;
  GruDirection backward;

  GruParams() = default;
  GruParams(std::size_t input_dim, std::size_t hidden);

  std::size_t input_dim() const { return forward.input_dim(); }
  std::size_t hidden() const { return forward.hidden(); }
  std::size_t output_dim() const { return 2 * hidden(); }

  std::vector<Matrix*> matrices();
  std::vector<const Matrix*> matrices() const;
};

// g(s; W) = avg_t(x_t W). No bias.
struct LinearParams {
  Matrix w;  // input_dim x output_dim

  std::size_t input_dim() const { return w.rows(); }
  std::size_t output_dim() const { return w.cols(); }
};

// GRU maps ~ U(-1/√hidden, 1/√hidden); biases start at zero.
GruParams init_gru(std::size_t input_dim, std::size_t hidden, std::mt19937_64& rng);
// W ~ U(-1/√input_dim, 1/√input_dim).
LinearParams init_linear(std::size_t input_dim, std::size_t output_dim, std::mt19937_64& rng);

Vector gru_cell_forward(std::span<const double> x, std::span<const double> h_prev,
                        const GruDirection& p);

// Intermediate values of a full pass over one sequence in one direction.
// Rows are indexed by sentence position, not by processing order.
struct GruTrace {
  bool reversed = false;
  Matrix h_prev;  // state entering step t
  Matrix z, r, cand;
  Matrix h;       // state leaving step t
};

GruTrace gru_direction_forward(const Matrix& x, const GruDirection& p, bool reversed);

// Accumulates parameter gradients into `grads` given dL/dh_t for every
// position (d_h, M x hidden). Returns dL/dx, or an empty matrix when
// want_input_grad is false.
Matrix gru_direction_backward(const Matrix& x, const GruDirection& p, const GruTrace& trace,
                              const Matrix& d_h, GruDirection& grads,
                              bool want_input_grad = true);

// Gradient of a single cell step (used by the gradient checks).
struct GruCellGrads {
  Vector d_x;
  Vector d_h_prev;
};
GruCellGrads gru_cell_backward(std::span<const double> x, std::span<const double> h_prev,
                               const GruDirection& p, std::span<const double> d_h,
                               GruDirection& grads);

struct BiGruResult {
  Matrix h;        // M x 2·hidden, row t = [forward h_t ; backward h_t]
  Vector last;     // [forward h_M ; backward h_1]
  GruTrace forward_trace;
  GruTrace backward_trace;
};

BiGruResult bigru_forward(const Matrix& x, const GruParams& p);

// d_h may be empty (no gradient through H); d_last may be empty.
Matrix bigru_backward(const Matrix& x, const GruParams& p, const BiGruResult& fwd,
                      const Matrix& d_h, std::span<const double> d_last, GruParams& grads,
                      bool want_input_grad = true);

struct LinearResult {
  Matrix wx;    // M x out
  Vector mean;  // column mean of wx
};

LinearResult linear_encode(const Matrix& x, const LinearParams& p);
// Gradient of W for an upstream gradient on the mean only: mean(x)^T d_mean.
void linear_backward_mean(const Matrix& x, std::span<const double> d_mean, LinearParams& grads);
// Gradient of W for an upstream gradient on every row of WX.
void linear_backward_rows(const Matrix& x, const Matrix& d_wx, LinearParams& grads);

enum class PoolMode { Max, Avg, Min, Last };

Vector pool(const Matrix& states, PoolMode mode);

enum class ViewKind { F, G };
enum class Regime { Supervised, Unsupervised };

Regime parse_regime(std::string_view text);
std::string_view to_string(Regime regime);

// Training-time and testing-time outputs of the two encoders for one sentence.
// Fields belonging to the view not run are left empty.
struct EncoderOutput {
  Matrix h;
  Vector zf_train;
  Matrix wx;
  Vector zg_train;
};

EncoderOutput encode_f(const Matrix& x, const GruParams& p);
EncoderOutput encode_g(const Matrix& x, const LinearParams& p);

// supervised f: [max(H); avg(H); min(H); h_last]   (8·hidden)
// supervised g: [max(WX); avg(WX); min(WX)]        (3·out)
// unsupervised f: avg(H); unsupervised g: avg(WX)
Vector compose_test_representation(const EncoderOutput& output, ViewKind view, Regime regime);

}  // namespace cmax
