#include "cmax/numcore/adam.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace cmax {

void adam_step(const std::vector<Matrix*>& params, const std::vector<Matrix>& grads,
               AdamState& state) {
  if (params.size() != grads.size()) {
    throw std::invalid_argument("adam_step: " + std::to_string(params.size()) + " params but " +
                                std::to_string(grads.size()) + " grads");
  }
  if (state.m.empty() && state.v.empty()) {
    for (const Matrix* p : params) {
      state.m.emplace_back(p->rows(), p->cols());
      state.v.emplace_back(p->rows(), p->cols());
    }
  }
  if (state.m.size() != params.size() || state.v.size() != params.size()) {
    throw std::invalid_argument("adam_step: optimizer state holds " +
                                std::to_string(state.m.size()) + " moments for " +
                                std::to_string(params.size()) + " params");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    const Matrix& p = *params[i];
    if (grads[i].rows() != p.rows() || grads[i].cols() != p.cols() ||
        state.m[i].rows() != p.rows() || state.m[i].cols() != p.cols()) {
      throw std::invalid_argument("adam_step: shape mismatch at parameter " + std::to_string(i) +
                                  ": param " + p.shape_string() + ", grad " +
                                  grads[i].shape_string() + ", moment " +
                                  state.m[i].shape_string());
    }
  }

  const AdamConfig& c = state.config;
  state.step += 1;
  const double t = static_cast<double>(state.step);
  const double bias1 = 1.0 - std::pow(c.beta1, t);
  const double bias2 = 1.0 - std::pow(c.beta2, t);

  for (std::size_t i = 0; i < params.size(); ++i) {
    auto p = params[i]->flat();
    auto g = grads[i].flat();
    auto m = state.m[i].flat();
    auto v = state.v[i].flat();
    for (std::size_t k = 0; k < p.size(); ++k) {
      m[k] = c.beta1 * m[k] + (1.0 - c.beta1) * g[k];
      v[k] = c.beta2 * v[k] + (1.0 - c.beta2) * g[k] * g[k];
      const double m_hat = m[k] / bias1;
      const double v_hat = v[k] / bias2;
      p[k] -= c.lr * m_hat / (std::sqrt(v_hat) + c.epsilon);
    }
  }
}

}  // namespace cmax
