#include <gtest/gtest.h>

#include "rnmf/nmf.hpp"
#include "test_util.hpp"

namespace rnmf {
namespace {

using testing::random_matrix;

TEST(NmfObjective, ZeroForExactFactorization) {
  const DenseMatrix u{{1, 2}, {0, 1}};
  const DenseMatrix v{{1, 0, 2}, {3, 1, 1}};
  EXPECT_EQ(nmf_objective(matmul(u, v), u, v), 0.0);
}

TEST(NmfObjective, HandCase) {
  EXPECT_EQ(nmf_objective(DenseMatrix{{2}}, DenseMatrix{{1}}, DenseMatrix{{1}}), 1.0);
}

TEST(NmfObjective, MatchesIndependentComposition) {
  Rng rng(RngSeed{21});
  const DenseMatrix x = random_matrix(6, 5, rng);
  const DenseMatrix u = random_matrix(6, 2, rng);
  const DenseMatrix v = random_matrix(2, 5, rng);
  const DenseMatrix resid = x - testing::triple_loop_product(u, v);
  EXPECT_NEAR(nmf_objective(x, u, v), testing::scalar_sum_sq(resid), 1e-12);
}

TEST(NmfObjective, ShapeMismatchThrows) {
  EXPECT_THROW(nmf_objective(DenseMatrix(3, 3), DenseMatrix(3, 2), DenseMatrix(2, 4)),
               DimensionError);
}

TEST(NmfStep, FixedPointAtExactFactorization) {
  const DenseMatrix u{{1, 2}, {0.5, 1}, {2, 1}};
  const DenseMatrix v{{1, 0.5, 2}, {3, 1, 1}};
  const auto [u2, v2] = nmf_step(matmul(u, v), u, v, 1e-300);
  EXPECT_LT(max_rel_diff(u2, u), 1e-14);
  EXPECT_LT(max_rel_diff(v2, v), 1e-14);
}

TEST(NmfStep, ScalarHandEvaluation) {
  // U' = 1 * (4*2) / (1*2*2) = 2, then V' = 2 * (2*4) / (2*2*2) = 2.
  const auto [u2, v2] = nmf_step(DenseMatrix{{4}}, DenseMatrix{{1}}, DenseMatrix{{2}}, 1e-12);
  EXPECT_NEAR(u2(0, 0), 2.0, 1e-12);
  EXPECT_NEAR(v2(0, 0), 2.0, 1e-12);
  EXPECT_NEAR(matmul(u2, v2)(0, 0), 4.0, 1e-11);
}

TEST(NmfStep, ObjectiveNonincreasingOnRandomInstances) {
  Rng rng(RngSeed{22});
  for (int t = 0; t < 100; ++t) {
    const auto m = testing::random_dim(rng, 1, 10), n = testing::random_dim(rng, 1, 10),
               k = testing::random_dim(rng, 1, 4);
    const DenseMatrix x = random_matrix(m, n, rng, 0, 5);
    DenseMatrix u = random_matrix(m, k, rng, 0.01, 1);
    DenseMatrix v = random_matrix(k, n, rng, 0.01, 1);
    for (int s = 0; s < 5; ++s) {
      const double before = nmf_objective(x, u, v);
      std::tie(u, v) = nmf_step(x, u, v, 1e-12);
      const double after = nmf_objective(x, u, v);
      ASSERT_LE(after, before + 1e-10 * (1 + before)) << "instance " << t;
      ASSERT_TRUE(all_nonnegative(u) && all_nonnegative(v));
    }
  }
}

TEST(NmfStep, ScaleIndeterminacyLeavesObjectiveUnchanged) {
  Rng rng(RngSeed{23});
  for (int t = 0; t < 20; ++t) {
    const DenseMatrix x = random_matrix(7, 6, rng);
    DenseMatrix u = random_matrix(7, 3, rng, 0.1, 1);
    DenseMatrix v = random_matrix(3, 6, rng, 0.1, 1);
    DenseMatrix us = u, vs = v;
    for (std::size_t l = 0; l < 3; ++l) {
      const double c = 0.25 + 4 * rng.next_unit();
      for (std::size_t i = 0; i < 7; ++i) us(i, l) *= c;
      for (std::size_t j = 0; j < 6; ++j) vs(l, j) /= c;
    }
    EXPECT_LT(testing::rel_err(nmf_objective(x, u, v), nmf_objective(x, us, vs)), 1e-10);
  }
}

TEST(NmfFit, RecoversRankOneData) {
  Rng rng(RngSeed{24});
  const DenseMatrix u = random_matrix(8, 1, rng, 0.5, 2);
  const DenseMatrix v = random_matrix(1, 6, rng, 0.5, 2);
  const DenseMatrix x = matmul(u, v);
  FitConfig cfg;
  cfg.k = 1;
  cfg.max_iters = 2000;
  cfg.rel_tol = 0;
  const Factorization f = nmf_fit(x, cfg);
  EXPECT_LT(f.objective_trace.back(), 1e-6 * frobenius_sq(x));
}

TEST(NmfFit, TraceNonincreasingAndFactorsNonnegative) {
  Rng rng(RngSeed{25});
  const DenseMatrix x = random_matrix(12, 9, rng, 0, 10);
  FitConfig cfg;
  cfg.k = 3;
  cfg.max_iters = 200;
  const Factorization f = nmf_fit(x, cfg);
  for (std::size_t i = 1; i < f.objective_trace.size(); ++i) {
    EXPECT_LE(f.objective_trace[i], f.objective_trace[i - 1] * (1 + 1e-10));
  }
  EXPECT_TRUE(all_nonnegative(f.U));
  EXPECT_TRUE(all_nonnegative(f.V));
}

TEST(NmfFit, StopsEarlyOnRelativeTolerance) {
  Rng rng(RngSeed{26});
  const DenseMatrix x = random_matrix(10, 10, rng, 0, 1);
  FitConfig cfg;
  cfg.k = 2;
  cfg.max_iters = 100000;
  cfg.rel_tol = 1e-3;
  const Factorization f = nmf_fit(x, cfg);
  EXPECT_LT(f.objective_trace.size(), 100000u);
  EXPECT_GT(f.objective_trace.size(), cfg.window);
}

TEST(NmfFit, ConfigValidation) {
  const DenseMatrix x(3, 3, 1.0);
  FitConfig cfg;
  cfg.max_iters = 0;
  EXPECT_THROW(nmf_fit(x, cfg), DomainError);
  cfg = {};
  cfg.k = 0;
  EXPECT_THROW(nmf_fit(x, cfg), DomainError);
  cfg = {};
  cfg.epsilon = 0;
  EXPECT_THROW(nmf_fit(x, cfg), DomainError);
}

TEST(NmfFit, RejectsNegativeData) {
  EXPECT_THROW(nmf_fit(DenseMatrix{{1, -1}}, FitConfig{}), DomainError);
}

TEST(NmfFit, DeterministicForSeed) {
  Rng rng(RngSeed{27});
  const DenseMatrix x = random_matrix(9, 7, rng);
  FitConfig cfg;
  cfg.k = 2;
  cfg.max_iters = 50;
  const Factorization a = nmf_fit(x, cfg);
  const Factorization b = nmf_fit(x, cfg);
  EXPECT_EQ(a.objective_trace, b.objective_trace);
  EXPECT_EQ(a.U, b.U);
  EXPECT_EQ(a.V, b.V);
  cfg.seed = RngSeed{99};
  EXPECT_NE(nmf_fit(x, cfg).U, a.U);
}

}  // namespace
}  // namespace rnmf
