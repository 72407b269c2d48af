#include "cmax/encoders/encoders.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "cmax/errors.hpp"

namespace cmax {

namespace {

double sigmoid(double a) {
  if (a >= 0.0) return 1.0 / (1.0 + std::exp(-a));
  const double e = std::exp(a);
  return e / (1.0 + e);
}

// out += v * m, v (1 x rows), m (rows x cols)
void add_vec_mat(std::span<const double> v, const Matrix& m, std::span<double> out) {
  for (std::size_t k = 0; k < m.rows(); ++k) {
    const double vk = v[k];
    if (vk == 0.0) continue;
    const double* mr = m.row(k).data();
    for (std::size_t j = 0; j < m.cols(); ++j) out[j] += vk * mr[j];
  }
}

// out += v * m^T, v (1 x cols), m (rows x cols)
void add_vec_mat_t(std::span<const double> v, const Matrix& m, std::span<double> out) {
  for (std::size_t k = 0; k < m.rows(); ++k) out[k] += dot(v, m.row(k));
}

Matrix affine_rows(const Matrix& x, const Matrix& w, const Matrix& b) {
  Matrix out = matmul(x, w);
  for (std::size_t t = 0; t < out.rows(); ++t)
    for (std::size_t j = 0; j < out.cols(); ++j) out(t, j) += b(0, j);
  return out;
}

void add_column_sums(const Matrix& m, Matrix& out) {
  for (std::size_t t = 0; t < m.rows(); ++t)
    for (std::size_t j = 0; j < m.cols(); ++j) out(0, j) += m(t, j);
}

void check_input(const Matrix& x, std::size_t input_dim, const char* op) {
  if (x.rows() == 0) throw std::invalid_argument(std::string(op) + ": empty input");
  if (x.cols() != input_dim) {
    throw std::invalid_argument(std::string(op) + ": input " + x.shape_string() +
                                " does not match input_dim " + std::to_string(input_dim));
  }
}

void fill_uniform(Matrix& m, double bound, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dist(-bound, bound);
  for (double& v : m.flat()) v = dist(rng);
}

}  // namespace

GruDirection::GruDirection(std::size_t input_dim, std::size_t hidden)
    : w_z(input_dim, hidden), w_r(input_dim, hidden), w_h(input_dim, hidden),
      u_z(hidden, hidden), u_r(hidden, hidden), u_h(hidden, hidden),
      b_z(1, hidden), b_r(1, hidden), b_h(1, hidden) {}

std::vector<Matrix*> GruDirection::matrices() {
  return {&w_z, &w_r, &w_h, &u_z, &u_r, &u_h, &b_z, &b_r, &b_h};
}

std::vector<const Matrix*> GruDirection::matrices() const {
  return {&w_z, &w_r, &w_h, &u_z, &u_r, &u_h, &b_z, &b_r, &b_h};
}

GruParams::GruParams(std::size_t input_dim, std::size_t hidden)
    : forward(input_dim, hidden), backward(input_dim, hidden) {}

std::vector<Matrix*> GruParams::matrices() {
  auto out = forward.matrices();
  auto b = backward.matrices();
  out.insert(out.end(), b.begin(), b.end());
  return out;
}

std::vector<const Matrix*> GruParams::matrices() const {
  auto out = forward.matrices();
  auto b = backward.matrices();
  out.insert(out.end(), b.begin(), b.end());
  return out;
}

GruParams init_gru(std::size_t input_dim, std::size_t hidden, std::mt19937_64& rng) {
  if (input_dim == 0 || hidden == 0) throw std::invalid_argument("init_gru: zero dimension");
  GruParams p(input_dim, hidden);
  const double bound = 1.0 / std::sqrt(static_cast<double>(hidden));
  for (GruDirection* d : {&p.forward, &p.backward}) {
    for (Matrix* m : {&d->w_z, &d->w_r, &d->w_h, &d->u_z, &d->u_r, &d->u_h}) {
      fill_uniform(*m, bound, rng);
    }
  }
  return p;
}

LinearParams init_linear(std::size_t input_dim, std::size_t output_dim, std::mt19937_64& rng) {
  if (input_dim == 0 || output_dim == 0) {
    throw std::invalid_argument("init_linear: zero dimension");
  }
  LinearParams p{Matrix(input_dim, output_dim)};
  fill_uniform(p.w, 1.0 / std::sqrt(static_cast<double>(input_dim)), rng);
  return p;
}

Vector gru_cell_forward(std::span<const double> x, std::span<const double> h_prev,
                        const GruDirection& p) {
  if (x.size() != p.input_dim() || h_prev.size() != p.hidden()) {
    throw std::invalid_argument("gru_cell_forward: x length " + std::to_string(x.size()) +
                                ", h length " + std::to_string(h_prev.size()) +
                                " for cell " + std::to_string(p.input_dim()) + "->" +
                                std::to_string(p.hidden()));
  }
  const std::size_t hidden = p.hidden();
  Vector a_z(p.b_z.flat().begin(), p.b_z.flat().end());
  Vector a_r(p.b_r.flat().begin(), p.b_r.flat().end());
  Vector a_h(p.b_h.flat().begin(), p.b_h.flat().end());
  add_vec_mat(x, p.w_z, a_z);
  add_vec_mat(x, p.w_r, a_r);
  add_vec_mat(x, p.w_h, a_h);
  add_vec_mat(h_prev, p.u_z, a_z);
  add_vec_mat(h_prev, p.u_r, a_r);
  Vector rh(hidden);
  for (std::size_t j = 0; j < hidden; ++j) rh[j] = sigmoid(a_r[j]) * h_prev[j];
  add_vec_mat(rh, p.u_h, a_h);
  Vector h(hidden);
  for (std::size_t j = 0; j < hidden; ++j) {
    const double z = sigmoid(a_z[j]);
    h[j] = (1.0 - z) * h_prev[j] + z * std::tanh(a_h[j]);
  }
  return h;
}

GruTrace gru_direction_forward(const Matrix& x, const GruDirection& p, bool reversed) {
  check_input(x, p.input_dim(), "gru_direction_forward");
  const std::size_t steps = x.rows();
  const std::size_t hidden = p.hidden();

  const Matrix xz = affine_rows(x, p.w_z, p.b_z);
  const Matrix xr = affine_rows(x, p.w_r, p.b_r);
  const Matrix xh = affine_rows(x, p.w_h, p.b_h);

  GruTrace tr;
  tr.reversed = reversed;
  tr.h_prev = Matrix(steps, hidden);
  tr.z = Matrix(steps, hidden);
  tr.r = Matrix(steps, hidden);
  tr.cand = Matrix(steps, hidden);
  tr.h = Matrix(steps, hidden);

  Vector h(hidden, 0.0), a_z(hidden), a_r(hidden), a_h(hidden), rh(hidden);
  for (std::size_t s = 0; s < steps; ++s) {
    const std::size_t t = reversed ? steps - 1 - s : s;
    std::copy(h.begin(), h.end(), tr.h_prev.row(t).begin());
    std::copy(xz.row(t).begin(), xz.row(t).end(), a_z.begin());
    std::copy(xr.row(t).begin(), xr.row(t).end(), a_r.begin());
    std::copy(xh.row(t).begin(), xh.row(t).end(), a_h.begin());
    add_vec_mat(h, p.u_z, a_z);
    add_vec_mat(h, p.u_r, a_r);
    for (std::size_t j = 0; j < hidden; ++j) {
      const double r = sigmoid(a_r[j]);
      tr.r(t, j) = r;
      rh[j] = r * h[j];
    }
    add_vec_mat(rh, p.u_h, a_h);
    for (std::size_t j = 0; j < hidden; ++j) {
      const double z = sigmoid(a_z[j]);
      const double c = std::tanh(a_h[j]);
      tr.z(t, j) = z;
      tr.cand(t, j) = c;
      h[j] = (1.0 - z) * h[j] + z * c;
    }
    std::copy(h.begin(), h.end(), tr.h.row(t).begin());
  }
  return tr;
}

Matrix gru_direction_backward(const Matrix& x, const GruDirection& p, const GruTrace& tr,
                              const Matrix& d_h, GruDirection& grads, bool want_input_grad) {
  const std::size_t steps = x.rows();
  const std::size_t hidden = p.hidden();
  if (d_h.rows() != steps || d_h.cols() != hidden) {
    throw std::invalid_argument("gru_direction_backward: d_h " + d_h.shape_string() +
                                " for " + std::to_string(steps) + " steps");
  }

  Matrix da_z(steps, hidden), da_r(steps, hidden), da_h(steps, hidden), rh(steps, hidden);
  Vector carry(hidden, 0.0), dh(hidden), dhp(hidden), d_rh(hidden);

  for (std::size_t s = 0; s < steps; ++s) {
    // Walk positions in the opposite order to the forward pass.
    const std::size_t t = tr.reversed ? s : steps - 1 - s;
    for (std::size_t j = 0; j < hidden; ++j) dh[j] = d_h(t, j) + carry[j];

    std::fill(d_rh.begin(), d_rh.end(), 0.0);
    for (std::size_t j = 0; j < hidden; ++j) {
      const double z = tr.z(t, j);
      const double c = tr.cand(t, j);
      const double hp = tr.h_prev(t, j);
      da_h(t, j) = dh[j] * z * (1.0 - c * c);
      da_z(t, j) = dh[j] * (c - hp) * z * (1.0 - z);
      dhp[j] = dh[j] * (1.0 - z);
      rh(t, j) = tr.r(t, j) * hp;
    }
    add_vec_mat_t(da_h.row(t), p.u_h, d_rh);
    for (std::size_t j = 0; j < hidden; ++j) {
      const double r = tr.r(t, j);
      da_r(t, j) = d_rh[j] * tr.h_prev(t, j) * r * (1.0 - r);
      dhp[j] += d_rh[j] * r;
    }
    add_vec_mat_t(da_z.row(t), p.u_z, dhp);
    add_vec_mat_t(da_r.row(t), p.u_r, dhp);
    carry.swap(dhp);
  }

  grads.w_z += matmul_at_b(x, da_z);
  grads.w_r += matmul_at_b(x, da_r);
  grads.w_h += matmul_at_b(x, da_h);
  grads.u_z += matmul_at_b(tr.h_prev, da_z);
  grads.u_r += matmul_at_b(tr.h_prev, da_r);
  grads.u_h += matmul_at_b(rh, da_h);
  add_column_sums(da_z, grads.b_z);
  add_column_sums(da_r, grads.b_r);
  add_column_sums(da_h, grads.b_h);
  if (!want_input_grad) return {};

  Matrix d_x = matmul_a_bt(da_z, p.w_z);
  d_x += matmul_a_bt(da_r, p.w_r);
  d_x += matmul_a_bt(da_h, p.w_h);
  return d_x;
}

GruCellGrads gru_cell_backward(std::span<const double> x, std::span<const double> h_prev,
                               const GruDirection& p, std::span<const double> d_h,
                               GruDirection& grads) {
  // A one-step sequence with a given initial state: re-run the cell through a
  // trace whose entering state is h_prev.
  const std::size_t hidden = p.hidden();
  Matrix xm = Matrix::row_vector(x);
  GruTrace tr;
  tr.h_prev = Matrix::row_vector(h_prev);
  tr.z = Matrix(1, hidden);
  tr.r = Matrix(1, hidden);
  tr.cand = Matrix(1, hidden);
  Vector a_z(p.b_z.flat().begin(), p.b_z.flat().end());
  Vector a_r(p.b_r.flat().begin(), p.b_r.flat().end());
  Vector a_h(p.b_h.flat().begin(), p.b_h.flat().end());
  add_vec_mat(x, p.w_z, a_z);
  add_vec_mat(x, p.w_r, a_r);
  add_vec_mat(x, p.w_h, a_h);
  add_vec_mat(h_prev, p.u_z, a_z);
  add_vec_mat(h_prev, p.u_r, a_r);
  Vector rh(hidden);
  for (std::size_t j = 0; j < hidden; ++j) {
    tr.r(0, j) = sigmoid(a_r[j]);
    rh[j] = tr.r(0, j) * h_prev[j];
  }
  add_vec_mat(rh, p.u_h, a_h);
  for (std::size_t j = 0; j < hidden; ++j) {
    tr.z(0, j) = sigmoid(a_z[j]);
    tr.cand(0, j) = std::tanh(a_h[j]);
  }

  // Same algebra as one iteration of gru_direction_backward, keeping dh_prev.
  Vector da_z(hidden), da_r(hidden), da_h(hidden), dhp(hidden), d_rh(hidden, 0.0);
  for (std::size_t j = 0; j < hidden; ++j) {
    const double z = tr.z(0, j);
    const double c = tr.cand(0, j);
    da_h[j] = d_h[j] * z * (1.0 - c * c);
    da_z[j] = d_h[j] * (c - h_prev[j]) * z * (1.0 - z);
    dhp[j] = d_h[j] * (1.0 - z);
  }
  add_vec_mat_t(da_h, p.u_h, d_rh);
  for (std::size_t j = 0; j < hidden; ++j) {
    const double r = tr.r(0, j);
    da_r[j] = d_rh[j] * h_prev[j] * r * (1.0 - r);
    dhp[j] += d_rh[j] * r;
  }
  add_vec_mat_t(da_z, p.u_z, dhp);
  add_vec_mat_t(da_r, p.u_r, dhp);

  const Matrix mz = Matrix::row_vector(da_z);
  const Matrix mr = Matrix::row_vector(da_r);
  const Matrix mh = Matrix::row_vector(da_h);
  grads.w_z += matmul_at_b(xm, mz);
  grads.w_r += matmul_at_b(xm, mr);
  grads.w_h += matmul_at_b(xm, mh);
  grads.u_z += matmul_at_b(tr.h_prev, mz);
  grads.u_r += matmul_at_b(tr.h_prev, mr);
  grads.u_h += matmul_at_b(Matrix::row_vector(rh), mh);
  grads.b_z += mz;
  grads.b_r += mr;
  grads.b_h += mh;

  GruCellGrads out;
  out.d_h_prev = dhp;
  out.d_x.assign(x.size(), 0.0);
  add_vec_mat_t(da_z, p.w_z, out.d_x);
  add_vec_mat_t(da_r, p.w_r, out.d_x);
  add_vec_mat_t(da_h, p.w_h, out.d_x);
  return out;
}

BiGruResult bigru_forward(const Matrix& x, const GruParams& p) {
  check_input(x, p.input_dim(), "bigru_forward");
  BiGruResult out;
  out.forward_trace = gru_direction_forward(x, p.forward, false);
  out.backward_trace = gru_direction_forward(x, p.backward, true);
  const std::size_t hidden = p.hidden();
  const std::size_t steps = x.rows();
  out.h = Matrix(steps, 2 * hidden);
  for (std::size_t t = 0; t < steps; ++t) {
    auto row = out.h.row(t);
    std::copy(out.forward_trace.h.row(t).begin(), out.forward_trace.h.row(t).end(), row.begin());
    std::copy(out.backward_trace.h.row(t).begin(), out.backward_trace.h.row(t).end(),
              row.begin() + static_cast<std::ptrdiff_t>(hidden));
  }
  out.last.resize(2 * hidden);
  std::copy(out.forward_trace.h.row(steps - 1).begin(), out.forward_trace.h.row(steps - 1).end(),
            out.last.begin());
  std::copy(out.backward_trace.h.row(0).begin(), out.backward_trace.h.row(0).end(),
            out.last.begin() + static_cast<std::ptrdiff_t>(hidden));
  return out;
}

Matrix bigru_backward(const Matrix& x, const GruParams& p, const BiGruResult& fwd,
                      const Matrix& d_h, std::span<const double> d_last, GruParams& grads,
                      bool want_input_grad) {
  const std::size_t hidden = p.hidden();
  const std::size_t steps = x.rows();
  Matrix df(steps, hidden), db(steps, hidden);
  if (!d_h.empty()) {
    if (d_h.rows() != steps || d_h.cols() != 2 * hidden) {
      throw std::invalid_argument("bigru_backward: d_h " + d_h.shape_string());
    }
    for (std::size_t t = 0; t < steps; ++t) {
      for (std::size_t j = 0; j < hidden; ++j) {
        df(t, j) = d_h(t, j);
        db(t, j) = d_h(t, hidden + j);
      }
    }
  }
  if (!d_last.empty()) {
    if (d_last.size() != 2 * hidden) throw std::invalid_argument("bigru_backward: d_last size");
    for (std::size_t j = 0; j < hidden; ++j) {
      df(steps - 1, j) += d_last[j];
      db(0, j) += d_last[hidden + j];
    }
  }
  Matrix d_x = gru_direction_backward(x, p.forward, fwd.forward_trace, df, grads.forward,
                                      want_input_grad);
  Matrix d_x_back = gru_direction_backward(x, p.backward, fwd.backward_trace, db, grads.backward,
                                           want_input_grad);
  if (want_input_grad) d_x += d_x_back;
  return d_x;
}

LinearResult linear_encode(const Matrix& x, const LinearParams& p) {
  check_input(x, p.input_dim(), "linear_encode");
  LinearResult out;
  out.wx = matmul(x, p.w);
  out.mean = column_mean(out.wx);
  return out;
}

void linear_backward_mean(const Matrix& x, std::span<const double> d_mean, LinearParams& grads) {
  const Vector x_mean = column_mean(x);
  for (std::size_t k = 0; k < x_mean.size(); ++k) {
    if (x_mean[k] == 0.0) continue;
    auto row = grads.w.row(k);
    for (std::size_t j = 0; j < d_mean.size(); ++j) row[j] += x_mean[k] * d_mean[j];
  }
}

void linear_backward_rows(const Matrix& x, const Matrix& d_wx, LinearParams& grads) {
  grads.w += matmul_at_b(x, d_wx);
}

Vector pool(const Matrix& states, PoolMode mode) {
  if (states.rows() == 0) throw std::invalid_argument("pool: empty matrix");
  const std::size_t rows = states.rows();
  switch (mode) {
    case PoolMode::Avg:
      return column_mean(states);
    case PoolMode::Last: {
      auto last = states.row(rows - 1);
      return Vector(last.begin(), last.end());
    }
    case PoolMode::Max:
    case PoolMode::Min: {
      auto first = states.row(0);
      Vector out(first.begin(), first.end());
      for (std::size_t t = 1; t < rows; ++t) {
        for (std::size_t j = 0; j < out.size(); ++j) {
          out[j] = mode == PoolMode::Max ? std::max(out[j], states(t, j))
                                         : std::min(out[j], states(t, j));
        }
      }
      return out;
    }
  }
  throw std::invalid_argument("pool: unknown mode");
}

Regime parse_regime(std::string_view text) {
  if (text == "sup" || text == "supervised") return Regime::Supervised;
  if (text == "unsup" || text == "unsupervised") return Regime::Unsupervised;
  throw ConfigError("unknown regime '" + std::string(text) + "' (expected sup|unsup)");
}

std::string_view to_string(Regime regime) {
  return regime == Regime::Supervised ? "sup" : "unsup";
}

EncoderOutput encode_f(const Matrix& x, const GruParams& p) {
  BiGruResult r = bigru_forward(x, p);
  EncoderOutput out;
  out.h = std::move(r.h);
  out.zf_train = std::move(r.last);
  return out;
}

EncoderOutput encode_g(const Matrix& x, const LinearParams& p) {
  LinearResult r = linear_encode(x, p);
  EncoderOutput out;
  out.wx = std::move(r.wx);
  out.zg_train = std::move(r.mean);
  return out;
}

Vector compose_test_representation(const EncoderOutput& output, ViewKind view, Regime regime) {
  const Matrix& states = view == ViewKind::F ? output.h : output.wx;
  if (regime == Regime::Unsupervised) return pool(states, PoolMode::Avg);

  Vector out;
  for (PoolMode mode : {PoolMode::Max, PoolMode::Avg, PoolMode::Min}) {
    Vector part = pool(states, mode);
    out.insert(out.end(), part.begin(), part.end());
  }
  if (view == ViewKind::F) {
    if (output.zf_train.empty()) {
      throw std::invalid_argument("compose_test_representation: f output missing last state");
    }
    out.insert(out.end(), output.zf_train.begin(), output.zf_train.end());
  }
  return out;
}

}  // namespace cmax
