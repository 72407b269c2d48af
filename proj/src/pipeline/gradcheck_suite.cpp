#include "cmax/pipeline/gradcheck_suite.hpp"

#include <random>

#include "cmax/encoders/encoders.hpp"
#include "cmax/objective/objective.hpp"
#include "cmax/pipeline/model.hpp"
#include "cmax/postproc/postproc.hpp"

namespace cmax {

namespace {

constexpr std::size_t kProbes = 24;

Matrix random_matrix(std::size_t r, std::size_t c, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> d(0.0, scale);
  Matrix m(r, c);
  for (double& v : m.flat()) v = d(rng);
  return m;
}

double weighted_sum(const Matrix& weights, const Matrix& x) {
  return dot(weights.flat(), x.flat());
}

// Flattens matrices into one 1 x K point and back.
Matrix pack(const std::vector<const Matrix*>& mats) {
  std::size_t total = 0;
  for (const Matrix* m : mats) total += m->size();
  Matrix out(1, total);
  std::size_t k = 0;
  for (const Matrix* m : mats) {
    for (double v : m->flat()) out.flat()[k++] = v;
  }
  return out;
}

void unpack(const Matrix& packed, const std::vector<Matrix*>& mats) {
  std::size_t k = 0;
  for (Matrix* m : mats) {
    for (double& v : m->flat()) v = packed.flat()[k++];
  }
}

std::vector<const Matrix*> const_view(const std::vector<Matrix*>& mats) {
  return {mats.begin(), mats.end()};
}

GradCheckOptions options(std::uint64_t seed) {
  GradCheckOptions o;
  o.probes = kProbes;
  o.seed = seed;
  return o;
}

GradCheckReport check_gru_cell(std::mt19937_64& rng, std::uint64_t seed) {
  const std::size_t dim = 3, hidden = 4;
  GruDirection base = init_gru(dim, hidden, rng).forward;
  for (Matrix* b : {&base.b_z, &base.b_r, &base.b_h}) *b = random_matrix(1, hidden, rng, 0.3);
  const Matrix x = random_matrix(1, dim, rng);
  const Matrix h = random_matrix(1, hidden, rng, 0.5);
  const Matrix w = random_matrix(1, hidden, rng);

  auto mats = base.matrices();
  std::vector<const Matrix*> all = const_view(mats);
  all.push_back(&x);
  all.push_back(&h);
  const Matrix point = pack(all);

  auto fn = [&](const Matrix& pt, Matrix* grad) {
    GruDirection p = base;
    Matrix xs(1, dim), hs(1, hidden);
    auto targets = p.matrices();
    targets.push_back(&xs);
    targets.push_back(&hs);
    unpack(pt, targets);
    const Vector out = gru_cell_forward(xs.flat(), hs.flat(), p);
    if (grad) {
      GruDirection g = p;
      for (Matrix* m : g.matrices()) *m = Matrix(m->rows(), m->cols());
      const GruCellGrads cg = gru_cell_backward(xs.flat(), hs.flat(), p, w.flat(), g);
      auto gm = g.matrices();
      Matrix dx = Matrix::row_vector(cg.d_x);
      Matrix dh = Matrix::row_vector(cg.d_h_prev);
      std::vector<const Matrix*> parts = const_view(gm);
      parts.push_back(&dx);
      parts.push_back(&dh);
      *grad = pack(parts);
    }
    return dot(w.flat(), out);
  };
  return finite_diff_check("gru_cell", fn, point, options(seed));
}

GradCheckReport check_bigru(std::mt19937_64& rng, std::uint64_t seed, bool all_states) {
  const std::size_t dim = 3, hidden = 3, len = 4;
  GruParams base = init_gru(dim, hidden, rng);
  const Matrix x = random_matrix(len, dim, rng);
  const Matrix w_last = random_matrix(1, 2 * hidden, rng);
  const Matrix w_h = random_matrix(len, 2 * hidden, rng);

  auto mats = base.matrices();
  std::vector<const Matrix*> all = const_view(mats);
  all.push_back(&x);
  const Matrix point = pack(all);

  auto fn = [&](const Matrix& pt, Matrix* grad) {
    GruParams p = base;
    Matrix xs(len, dim);
    auto targets = p.matrices();
    targets.push_back(&xs);
    unpack(pt, targets);
    const BiGruResult r = bigru_forward(xs, p);
    double value = dot(w_last.flat(), r.last);
    if (all_states) value += weighted_sum(w_h, r.h);
    if (grad) {
      GruParams g = p;
      for (Matrix* m : g.matrices()) *m = Matrix(m->rows(), m->cols());
      const Matrix dx =
          bigru_backward(xs, p, r, all_states ? w_h : Matrix{}, w_last.flat(), g);
      auto gm = g.matrices();
      std::vector<const Matrix*> parts = const_view(gm);
      parts.push_back(&dx);
      *grad = pack(parts);
    }
    return value;
  };
  return finite_diff_check(all_states ? "bigru_hidden_states" : "bigru_last_state", fn, point,
                           options(seed));
}

GradCheckReport check_linear(std::mt19937_64& rng, std::uint64_t seed) {
  const std::size_t dim = 4, out = 5, len = 3;
  const Matrix x = random_matrix(len, dim, rng);
  const Matrix w_mean = random_matrix(1, out, rng);
  const Matrix w_rows = random_matrix(len, out, rng);
  const Matrix point = random_matrix(dim, out, rng, 0.5);

  auto fn = [&](const Matrix& pt, Matrix* grad) {
    const LinearParams p{pt};
    const LinearResult r = linear_encode(x, p);
    if (grad) {
      LinearParams g{Matrix(dim, out)};
      linear_backward_mean(x, w_mean.flat(), g);
      linear_backward_rows(x, w_rows, g);
      *grad = g.w;
    }
    return dot(w_mean.flat(), r.mean) + weighted_sum(w_rows, r.wx);
  };
  return finite_diff_check("linear_encoder", fn, point, options(seed));
}

GradCheckReport check_agreement(ObjectiveVariant variant, std::mt19937_64& rng,
                                std::uint64_t seed) {
  const std::size_t n = 4, width = 3;
  const bool two = variant_slots(variant).count == 2;
  const Matrix weights = random_matrix(n, n, rng);
  const Matrix point = random_matrix(two ? 2 * n : n, width, rng);

  auto fn = [&](const Matrix& pt, Matrix* grad) {
    Matrix first(n, width), second;
    std::vector<Matrix*> targets{&first};
    if (two) {
      second = Matrix(n, width);
      targets.push_back(&second);
    }
    unpack(pt, targets);
    const Matrix a = agreement_matrix(variant, first, second);
    if (grad) {
      const AgreementGrads g = agreement_matrix_backward(variant, first, second, weights);
      std::vector<const Matrix*> parts{&g.d_first};
      if (two) parts.push_back(&g.d_second);
      *grad = pack(parts);
      *grad = Matrix(pt.rows(), pt.cols(), grad->values());
    }
    return weighted_sum(weights, a);
  };
  return finite_diff_check("agreement/" + std::string(to_string(variant)), fn, point,
                           options(seed));
}

GradCheckReport check_contrastive(std::mt19937_64& rng, std::uint64_t seed) {
  const std::size_t n = 5;
  Matrix a = random_matrix(n, n, rng);
  Matrix point(1, n * n + 1);
  std::copy(a.flat().begin(), a.flat().end(), point.flat().begin());
  point.flat()[n * n] = 0.3;

  auto fn = [&](const Matrix& pt, Matrix* grad) {
    Matrix am(n, n);
    std::copy(pt.flat().begin(), pt.flat().begin() + n * n, am.flat().begin());
    Temperature tau;
    tau.log_tau = pt.flat()[n * n];
    const LossResult r = contrastive_loss(am, tau, {2, true, false});
    if (grad) {
      *grad = Matrix(1, n * n + 1);
      std::copy(r.d_agreement.flat().begin(), r.d_agreement.flat().end(), grad->flat().begin());
      grad->flat()[n * n] = r.d_log_tau;
    }
    return r.loss;
  };
  GradCheckOptions o;  // every entry
  o.seed = seed;
  return finite_diff_check("contrastive_loss", fn, point, o);
}

GradCheckReport check_postprocess(std::mt19937_64& rng, std::uint64_t seed) {
  const std::size_t n = 6, width = 4;
  const Matrix point = random_matrix(n, width, rng);
  const Matrix weights = random_matrix(n, width, rng);
  const PrincipalComponent pc = power_iteration_top(point, 100, 1e-12, seed);

  auto fn = [&](const Matrix& pt, Matrix* grad) {
    const PostprocResult r = postprocess_with_component(pt, pc);
    if (grad) *grad = postprocess_backward(r, weights);
    return weighted_sum(weights, r.output);
  };
  return finite_diff_check("postprocess_frozen_u", fn, point, options(seed));
}

GradCheckReport check_training_loss(ObjectiveVariant variant, std::mt19937_64& rng,
                                    std::uint64_t seed) {
  const std::size_t dim = 4, hidden = 3, n = 5;
  ModelParams base = init_model(variant, dim, hidden, seed);
  base.temperature.log_tau = -0.2;
  std::vector<Matrix> sentences;
  for (std::size_t i = 0; i < n; ++i) sentences.push_back(random_matrix(2 + i % 3, dim, rng));
  std::vector<const Matrix*> batch;
  for (const Matrix& s : sentences) batch.push_back(&s);

  BatchOptions bo;
  bo.context = 1;
  bo.power_iters = 100;
  bo.power_tol = 1e-12;
  bo.power_seed = seed;
  const BatchResult at_base = evaluate_batch(base, batch, bo, false);
  const std::vector<PrincipalComponent> frozen = at_base.components;

  Matrix log_tau(1, 1, base.temperature.log_tau);
  auto mats = std::as_const(base).matrices();
  mats.push_back(&log_tau);
  const Matrix point = pack(mats);

  auto fn = [&](const Matrix& pt, Matrix* grad) {
    ModelParams p = base;
    Matrix lt(1, 1);
    auto targets = p.matrices();
    targets.push_back(&lt);
    unpack(pt, targets);
    p.temperature.log_tau = lt(0, 0);
    const BatchResult r = evaluate_batch(p, batch, bo, grad != nullptr, &frozen);
    if (grad) {
      Matrix glt(1, 1, r.grads.temperature.log_tau);
      auto gm = std::as_const(r.grads).matrices();
      gm.push_back(&glt);
      *grad = pack(gm);
    }
    return r.loss;
  };
  return finite_diff_check("full_training_loss/" + std::string(to_string(variant)), fn, point,
                           options(seed));
}

}  // namespace

std::vector<GradCheckReport> run_gradcheck_suite(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<GradCheckReport> out;
  out.push_back(check_gru_cell(rng, seed));
  out.push_back(check_bigru(rng, seed, false));
  out.push_back(check_bigru(rng, seed, true));
  out.push_back(check_linear(rng, seed));
  for (ObjectiveVariant v : kAllVariants) out.push_back(check_agreement(v, rng, seed));
  out.push_back(check_contrastive(rng, seed));
  out.push_back(check_postprocess(rng, seed));
  out.push_back(check_training_loss(ObjectiveVariant::MultiViewFG, rng, seed));
  out.push_back(check_training_loss(ObjectiveVariant::MultiViewF1F2, rng, seed));
  return out;
}

}  // namespace cmax
