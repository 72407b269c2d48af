#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "cmax/errors.hpp"
#include "cmax/numcore/gradcheck.hpp"
#include "cmax/postproc/postproc.hpp"
#include "oracles.hpp"

using namespace cmax;

namespace {

Matrix random_matrix(std::size_t r, std::size_t c, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  Matrix m(r, c);
  for (double& v : m.flat()) v = g(rng);
  return m;
}

}  // namespace

TEST(PowerIteration, DiagonalGram) {
  const PrincipalComponent pc = power_iteration_top(Matrix{{3, 0}, {0, 1}, {3, 0}}, 100, 1e-12, 1);
  EXPECT_NEAR(std::abs(pc.u[0]), 1.0, 1e-10);
  EXPECT_NEAR(pc.u[1], 0.0, 1e-5);
  EXPECT_TRUE(pc.converged);
}

TEST(PowerIteration, RankOne) {
  const PrincipalComponent pc = power_iteration_top(Matrix{{1, 1}, {1, 1}}, 100, 1e-12, 2);
  EXPECT_NEAR(std::abs(pc.u[0]), 1.0 / std::sqrt(2.0), 1e-12);
  EXPECT_NEAR(pc.u[0], pc.u[1], 1e-12);
}

TEST(PowerIteration, DegenerateSpectrumStillUnit) {
  const PrincipalComponent pc = power_iteration_top(Matrix::identity(2), 100, 1e-8, 3);
  EXPECT_NEAR(norm(pc.u), 1.0, 1e-12);
}

TEST(PowerIteration, Preconditions) {
  EXPECT_THROW(power_iteration_top(Matrix(3, 2), 10, 1e-8, 0), NumericalError);
  EXPECT_THROW(power_iteration_top(Matrix{{1, 2}}, 10, 1e-8, 0), std::invalid_argument);
}

TEST(PowerIteration, AgreesWithJacobiOracle) {
  std::mt19937_64 rng(4);
  int checked = 0;
  while (checked < 30) {
    const Matrix x = random_matrix(20, 8, rng);
    const auto top = oracle::top_eigen(oracle::gram(x.values(), 20, 8));
    if (top.relative_gap < 0.1) continue;
    ++checked;
    const PrincipalComponent pc = power_iteration_top(x, 100, 1e-10, checked);
    EXPECT_GE(std::abs(oracle::cosine(pc.u, top.vector)), 0.999);
    EXPECT_NEAR(norm(pc.u), 1.0, 1e-12);
  }
}

TEST(PowerIteration, SeedDeterminism) {
  std::mt19937_64 rng(5);
  const Matrix x = random_matrix(10, 4, rng);
  EXPECT_EQ(power_iteration_top(x, 3, 1e-8, 9).u, power_iteration_top(x, 3, 1e-8, 9).u);
}

TEST(RemoveComponent, Examples) {
  EXPECT_EQ(remove_component(Matrix{{3, 4}}, Vector{1, 0}), (Matrix{{0, 4}}));
  EXPECT_EQ(remove_component(Matrix{{0, 5}}, Vector{1, 0}), (Matrix{{0, 5}}));
  const Matrix z = remove_component(Matrix{{0.6, 0.8}}, Vector{0.6, 0.8});
  EXPECT_NEAR(norm(z.row(0)), 0.0, 1e-15);
  EXPECT_THROW(remove_component(Matrix{{1, 1}}, Vector{1, 1}), std::invalid_argument);
}

TEST(RemoveComponent, IdempotentOrthogonalAndShrinking) {
  std::mt19937_64 rng(6);
  for (int t = 0; t < 20; ++t) {
    const Matrix x = random_matrix(7, 5, rng);
    const PrincipalComponent pc = power_iteration_top(x, 100, 1e-10, t);
    const Matrix once = remove_component(x, pc.u);
    const Matrix twice = remove_component(once, pc.u);
    for (std::size_t k = 0; k < once.size(); ++k) EXPECT_NEAR(once.flat()[k], twice.flat()[k], 1e-12);
    for (std::size_t i = 0; i < x.rows(); ++i) {
      EXPECT_LE(std::abs(dot(once.row(i), pc.u)), 1e-10);
      EXPECT_LE(norm(once.row(i)), norm(x.row(i)) + 1e-15);
    }
  }
}

TEST(PostprocessBatch, CollapseRejectedWithRowIndex) {
  try {
    postprocess_batch(Matrix{{3, 0}, {0, 4}, {5, 0}}, {});
    FAIL() << "expected NumericalError";
  } catch (const NumericalError& e) {
    EXPECT_NE(std::string(e.what()).find("row 0"), std::string::npos) << e.what();
  }
}

TEST(PostprocessBatch, TwoDimensionalRowsBecomeOrthogonalUnitVectors) {
  // The dominant direction is [1,1]; the perturbation breaks the exact tie.
  const Matrix x{{1.0, 1.1}, {2.0, -1.9}, {1.1, 1.0}, {1.5, -1.4}};
  const auto top = oracle::top_eigen(oracle::gram(x.values(), 4, 2));
  const PostprocResult r = postprocess_batch(x, {100, 1e-12, 3});
  EXPECT_GE(std::abs(oracle::cosine(r.pc.u, top.vector)), 1.0 - 1e-9);
  const std::vector<double> perp{-top.vector[1], top.vector[0]};
  for (std::size_t i = 0; i < 4; ++i) {
    EXPECT_NEAR(std::abs(oracle::cosine({r.output(i, 0), r.output(i, 1)}, perp)), 1.0, 1e-9);
  }
}

TEST(PostprocessBatch, OutputUnitAndOrthogonal) {
  std::mt19937_64 rng(7);
  const PostprocResult r = postprocess_batch(random_matrix(12, 6, rng), {100, 1e-8, 1});
  for (std::size_t i = 0; i < r.output.rows(); ++i) {
    EXPECT_NEAR(norm(r.output.row(i)), 1.0, 1e-12);
    EXPECT_LE(std::abs(dot(r.output.row(i), r.pc.u)), 1e-10);
  }
}

TEST(PostprocessBatch, FrozenComponentGradientChecks) {
  std::mt19937_64 rng(8);
  const Matrix x = random_matrix(6, 4, rng), w = random_matrix(6, 4, rng);
  const PrincipalComponent pc = power_iteration_top(x, 100, 1e-12, 1);
  auto fn = [&](const Matrix& in, Matrix* grad) {
    const PostprocResult r = postprocess_with_component(in, pc);
    if (grad) *grad = postprocess_backward(r, w);
    return dot(r.output.flat(), w.flat());
  };
  EXPECT_LE(finite_diff_check("postprocess", fn, x).max_relative_error, 1e-6);
}
