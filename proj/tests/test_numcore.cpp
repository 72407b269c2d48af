#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "cmax/errors.hpp"
#include "cmax/numcore/adam.hpp"
#include "cmax/numcore/gradcheck.hpp"
#include "cmax/numcore/matrix.hpp"

using namespace cmax;

namespace {

Matrix random_matrix(std::size_t r, std::size_t c, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  Matrix m(r, c);
  for (double& v : m.flat()) v = g(rng);
  return m;
}

}  // namespace

TEST(Matmul, IdentityLeavesMatrixUnchanged) {
  const Matrix b{{1, 2}, {3, 4}};
  EXPECT_EQ(matmul(Matrix::identity(2), b), b);
}

TEST(Matmul, ZeroColumn) { EXPECT_EQ(matmul(Matrix{{1, 2}}, Matrix{{0}, {0}}), (Matrix{{0}})); }

TEST(Matmul, HandComputedProduct) {
  EXPECT_EQ(matmul(Matrix{{1, 2}, {3, 4}}, Matrix{{5}, {6}}), (Matrix{{17}, {39}}));
}

TEST(Matmul, MismatchReportsBothShapes) {
  try {
    matmul(Matrix(2, 3), Matrix(2, 3));
    FAIL() << "expected an exception";
  } catch (const std::invalid_argument& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("2x3"), std::string::npos) << msg;
  }
}

TEST(Matmul, AssociativeOnRandomChains) {
  std::mt19937_64 rng(1);
  for (int t = 0; t < 20; ++t) {
    const Matrix a = random_matrix(3, 4, rng), b = random_matrix(4, 5, rng), c = random_matrix(5, 2, rng);
    const Matrix left = matmul(matmul(a, b), c), right = matmul(a, matmul(b, c));
    for (std::size_t k = 0; k < left.size(); ++k) {
      EXPECT_LE(std::abs(left.flat()[k] - right.flat()[k]), 1e-9 * std::max(1.0, std::abs(left.flat()[k])));
    }
  }
}

TEST(Matmul, TransposedVariantsAgree) {
  std::mt19937_64 rng(2);
  const Matrix a = random_matrix(3, 4, rng), b = random_matrix(3, 5, rng), c = random_matrix(6, 4, rng);
  const Matrix atb = matmul_at_b(a, b), ref1 = matmul(transpose(a), b);
  const Matrix abt = matmul_a_bt(a, c), ref2 = matmul(a, transpose(c));
  for (std::size_t k = 0; k < atb.size(); ++k) EXPECT_NEAR(atb.flat()[k], ref1.flat()[k], 1e-12);
  for (std::size_t k = 0; k < abt.size(); ++k) EXPECT_NEAR(abt.flat()[k], ref2.flat()[k], 1e-12);
}

TEST(Cosine, Examples) {
  EXPECT_DOUBLE_EQ(cosine(Vector{1, 0}, Vector{1, 0}), 1.0);
  EXPECT_DOUBLE_EQ(cosine(Vector{1, 0}, Vector{0, 1}), 0.0);
  EXPECT_NEAR(cosine(Vector{1, 2}, Vector{2, 1}), 0.8, 1e-15);
}

TEST(Cosine, ZeroNormRejected) {
  EXPECT_THROW(cosine(Vector{0, 0}, Vector{1, 0}), NumericalError);
  EXPECT_THROW(cosine(Vector{1, 0}, Vector{1, 0, 0}), std::invalid_argument);
}

TEST(Cosine, SymmetricAndScaleInvariant) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> g(0.0, 1.0);
  for (int t = 0; t < 50; ++t) {
    Vector u(7), v(7);
    for (auto& x : u) x = g(rng);
    for (auto& x : v) x = g(rng);
    EXPECT_EQ(cosine(u, v), cosine(v, u));
    Vector su = u;
    for (auto& x : su) x *= 3.7;
    EXPECT_NEAR(cosine(su, v), cosine(u, v), 1e-12);
  }
}

TEST(Cosine, BackwardMatchesFiniteDifferences) {
  std::mt19937_64 rng(4);
  const Matrix point = random_matrix(1, 8, rng);
  auto fn = [](const Matrix& x, Matrix* grad) {
    const auto u = x.flat().subspan(0, 4), v = x.flat().subspan(4, 4);
    if (grad) {
      *grad = Matrix(1, 8);
      cosine_backward(u, v, 1.0, grad->flat().subspan(0, 4), grad->flat().subspan(4, 4));
    }
    return cosine(u, v);
  };
  EXPECT_LE(finite_diff_check("cosine", fn, point).max_relative_error, 1e-6);
}

TEST(L2Normalize, Examples) {
  const Matrix a = l2_normalize_rows(Matrix{{3, 4}});
  EXPECT_NEAR(a(0, 0), 0.6, 1e-15);
  EXPECT_NEAR(a(0, 1), 0.8, 1e-15);
  EXPECT_EQ(l2_normalize_rows(Matrix{{1, 0}, {0, 2}}), (Matrix{{1, 0}, {0, 1}}));
  EXPECT_THROW(l2_normalize_rows(Matrix{{0, 0}}), NumericalError);
}

TEST(L2Normalize, RowsAreUnitAndBackwardChecks) {
  std::mt19937_64 rng(5);
  const Matrix x = random_matrix(5, 3, rng);
  const Matrix y = l2_normalize_rows(x);
  for (std::size_t i = 0; i < y.rows(); ++i) EXPECT_NEAR(norm(y.row(i)), 1.0, 1e-12);
  const Matrix w = random_matrix(5, 3, rng);
  auto fn = [&](const Matrix& in, Matrix* grad) {
    const Matrix out = l2_normalize_rows(in);
    if (grad) *grad = l2_normalize_rows_backward(in, out, w);
    return dot(out.flat(), w.flat());
  };
  EXPECT_LE(finite_diff_check("l2_normalize_rows", fn, x).max_relative_error, 1e-6);
}

TEST(ClipGlobalNorm, Examples) {
  // Global norm 10.
  const std::vector<Matrix> big{Matrix{{6}}, Matrix{{8}}};
  const auto halved = clip_global_norm(big, 5.0);
  EXPECT_DOUBLE_EQ(halved[0](0, 0), 3.0);
  EXPECT_DOUBLE_EQ(halved[1](0, 0), 4.0);

  const std::vector<Matrix> small{Matrix{{1, 2}}, Matrix{{2}}};  // norm 3
  EXPECT_EQ(clip_global_norm(small, 5.0), small);

  const auto single = clip_global_norm({Matrix{{6, 8}}}, 5.0);
  EXPECT_NEAR(single[0](0, 0), 3.0, 1e-15);
  EXPECT_NEAR(single[0](0, 1), 4.0, 1e-15);

  EXPECT_TRUE(clip_global_norm({}, 5.0).empty());
}

TEST(ClipGlobalNorm, NeverExceedsMaxNorm) {
  std::mt19937_64 rng(6);
  for (int t = 0; t < 20; ++t) {
    std::vector<Matrix> grads{random_matrix(3, 3, rng), random_matrix(1, 4, rng)};
    for (auto& g : grads) g *= 10.0;
    EXPECT_LE(global_norm(clip_global_norm(grads, 1.5)), 1.5 + 1e-12);
  }
}

TEST(Adam, FirstStepMovesByLearningRate) {
  Matrix theta(1, 1);
  AdamState state;
  adam_step({&theta}, {Matrix{{1.0}}}, state);
  EXPECT_NEAR(theta(0, 0), -0.001 / (1.0 + 1e-8), 1e-12);
  EXPECT_EQ(state.step, 1u);
}

TEST(Adam, ZeroGradientIsIdentity) {
  Matrix theta{{0.3, -1.2}};
  const Matrix before = theta;
  AdamState state;
  for (int k = 0; k < 5; ++k) adam_step({&theta}, {Matrix(1, 2)}, state);
  EXPECT_EQ(theta, before);
  EXPECT_EQ(state.step, 5u);
}

TEST(Adam, MatchesScalarReference) {
  // Scalar Adam written out longhand.
  const double lr = 0.001, b1 = 0.9, b2 = 0.999, eps = 1e-8;
  const double grads[] = {1.0, 1.0, -0.5, 2.0};
  double th = 0.25, m = 0.0, v = 0.0;
  Matrix theta{{0.25}};
  AdamState state;
  for (int t = 1; t <= 4; ++t) {
    const double g = grads[t - 1];
    m = b1 * m + (1 - b1) * g;
    v = b2 * v + (1 - b2) * g * g;
    th -= lr * (m / (1 - std::pow(b1, t))) / (std::sqrt(v / (1 - std::pow(b2, t))) + eps);
    adam_step({&theta}, {Matrix{{g}}}, state);
    EXPECT_NEAR(theta(0, 0), th, 1e-15) << "step " << t;
  }
}

TEST(Adam, ShapeMismatchRejected) {
  Matrix theta(2, 2);
  AdamState state;
  EXPECT_THROW(adam_step({&theta}, {Matrix(2, 3)}, state), std::invalid_argument);
  EXPECT_THROW(adam_step({&theta}, {}, state), std::invalid_argument);
}

TEST(FiniteDiff, QuadraticIsExact) {
  auto fn = [](const Matrix& x, Matrix* grad) {
    if (grad) *grad = Matrix{{2 * x(0, 0)}};
    return x(0, 0) * x(0, 0);
  };
  EXPECT_LE(finite_diff_check("square", fn, Matrix{{3.0}}).max_relative_error, 1e-8);
}

TEST(FiniteDiff, SumHasUnitGradient) {
  auto fn = [](const Matrix& x, Matrix* grad) {
    if (grad) *grad = Matrix(x.rows(), x.cols(), 1.0);
    double s = 0.0;
    for (double v : x.flat()) s += v;
    return s;
  };
  const auto r = finite_diff_check("sum", fn, Matrix{{1, 2, 3}, {4, 5, 6}});
  EXPECT_LE(r.max_relative_error, 1e-9);
  EXPECT_EQ(r.probe_count, 6u);
}

TEST(FiniteDiff, DetectsWrongGradient) {
  auto fn = [](const Matrix& x, Matrix* grad) {
    if (grad) *grad = Matrix{{x(0, 0)}};  // should be 2x
    return x(0, 0) * x(0, 0);
  };
  EXPECT_GT(finite_diff_check("bad", fn, Matrix{{3.0}}).max_relative_error, 0.1);
}

TEST(FiniteDiff, NonFiniteValueRejected) {
  auto fn = [](const Matrix& x, Matrix* grad) {
    if (grad) *grad = Matrix(1, 1);
    return std::log(x(0, 0));
  };
  EXPECT_THROW(finite_diff_check("log", fn, Matrix{{0.0}}), NumericalError);
}
