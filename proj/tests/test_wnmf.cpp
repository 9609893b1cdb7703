#include <gtest/gtest.h>

#include "rnmf/wnmf.hpp"
#include "test_util.hpp"

namespace rnmf {
namespace {

using testing::random_matrix;

FitConfig cfg_for(std::size_t k, std::size_t iters) {
  FitConfig c;
  c.k = k;
  c.max_iters = iters;
  c.rel_tol = 0;
  return c;
}

TEST(MaskFromNoise, ZeroNoiseTrustsEverything) {
  const DenseMatrix z(3, 4);
  EXPECT_EQ(mask_from_noise(z, z, 0.0).W, DenseMatrix(3, 4, 1.0));
}

TEST(MaskFromNoise, ThresholdZeroFlagsSingleEntry) {
  DenseMatrix ep(3, 3);
  ep(1, 2) = 1e-9;
  const WeightMask w = mask_from_noise(ep, DenseMatrix(3, 3), 0.0);
  EXPECT_EQ(sum(w.W), 8.0);
  EXPECT_EQ(w.W(1, 2), 0.0);
}

TEST(MaskFromNoise, StrictThresholdAndErrors) {
  const WeightMask w = mask_from_noise(DenseMatrix{{0.5, 0.6}}, DenseMatrix{{0, 0.1}}, 0.5);
  EXPECT_EQ(w.W, (DenseMatrix{{1, 1}}));
  EXPECT_THROW(mask_from_noise(DenseMatrix(1, 1), DenseMatrix(1, 1), -1), DomainError);
  EXPECT_THROW(mask_from_noise(DenseMatrix(1, 2), DenseMatrix(2, 1), 0), DimensionError);
}

TEST(WnmfFit, AllOnesMaskIsNmfBitForBit) {
  Rng rng(RngSeed{70});
  for (int t = 0; t < 5; ++t) {
    const DenseMatrix x = random_matrix(12, 9, rng, 0, 4);
    const FitConfig cfg = cfg_for(3, 60);
    const Factorization a = nmf_fit(x, cfg);
    const Factorization b = wnmf_fit(x, {DenseMatrix(12, 9, 1.0)}, cfg);
    EXPECT_EQ(a.U, b.U);
    EXPECT_EQ(a.V, b.V);
    EXPECT_EQ(a.objective_trace, b.objective_trace);
    EXPECT_TRUE(b.warnings.empty());
  }
}

TEST(WnmfFit, CompletesExactRankOneData) {
  Rng rng(RngSeed{71});
  const DenseMatrix x = matmul(random_matrix(10, 1, rng, 0.5, 2), random_matrix(1, 10, rng, 0.5, 2));
  DenseMatrix w(10, 10, 1.0);
  for (std::size_t j = 0; j < 10; ++j) w((3 * j + 1) % 10, j) = 0.0;  // 10%
  const Factorization f = wnmf_fit(x, {w}, cfg_for(1, 3000));
  const DenseMatrix uv = matmul(f.U, f.V);
  for (std::size_t i = 0; i < 10; ++i)
    for (std::size_t j = 0; j < 10; ++j)
      if (w(i, j) == 0.0) {
        EXPECT_LT(std::fabs(uv(i, j) - x(i, j)) / x(i, j), 1e-3);
      }
}

TEST(WnmfFit, MaskedObjectiveMonotone) {
  Rng rng(RngSeed{72});
  for (int t = 0; t < 100; ++t) {
    const auto m = testing::random_dim(rng, 2, 12);
    const auto n = testing::random_dim(rng, 2, 10);
    const DenseMatrix x = random_matrix(m, n, rng, 0, 5);
    DenseMatrix w = map(random_matrix(m, n, rng), [](double c) { return c < 0.2 ? 0.0 : 1.0; });
    const Factorization f = wnmf_fit(x, {w}, cfg_for(testing::random_dim(rng, 1, 3), 40));
    for (std::size_t i = 1; i < f.objective_trace.size(); ++i) {
      EXPECT_LE(f.objective_trace[i], f.objective_trace[i - 1] * (1 + 1e-10) + 1e-12);
    }
    EXPECT_TRUE(all_nonnegative(f.U) && all_nonnegative(f.V));
  }
}

TEST(WnmfFit, MaskedEntriesHaveNoInfluence) {
  Rng rng(RngSeed{73});
  const DenseMatrix x = random_matrix(8, 7, rng, 0, 3);
  DenseMatrix w(8, 7, 1.0);
  w(2, 3) = w(5, 0) = w(7, 6) = 0.0;
  DenseMatrix y = x;
  y(2, 3) = 1e6;
  y(5, 0) = 0.0;
  y(7, 6) = 42.0;
  const FitConfig cfg = cfg_for(2, 80);
  const Factorization a = wnmf_fit(x, {w}, cfg);
  const Factorization b = wnmf_fit(y, {w}, cfg);
  EXPECT_EQ(a.U, b.U);
  EXPECT_EQ(a.V, b.V);
}

TEST(WnmfFit, EmptyColumnWarnsAndStaysAtInit) {
  Rng rng(RngSeed{74});
  const DenseMatrix x = random_matrix(5, 4, rng, 0, 3);
  DenseMatrix w(5, 4, 1.0);
  for (std::size_t i = 0; i < 5; ++i) w(i, 2) = 0.0;
  const FitConfig cfg = cfg_for(2, 1);
  const Factorization one = wnmf_fit(x, {w}, cfg);
  FitConfig longer = cfg;
  longer.max_iters = 30;
  const Factorization many = wnmf_fit(x, {w}, longer);
  ASSERT_EQ(many.warnings.size(), 1u);
  EXPECT_NE(many.warnings[0].find("column 2"), std::string::npos);
  for (std::size_t r = 0; r < 2; ++r) EXPECT_EQ(one.V(r, 2), many.V(r, 2));
}

TEST(WnmfFit, Errors) {
  const DenseMatrix x(3, 3, 1.0);
  DenseMatrix w(3, 3, 1.0);
  w(0, 0) = 0.5;
  EXPECT_THROW(wnmf_fit(x, {w}, cfg_for(1, 5)), DomainError);
  EXPECT_THROW(wnmf_fit(x, {DenseMatrix(3, 2, 1.0)}, cfg_for(1, 5)), DimensionError);
  EXPECT_THROW(wnmf_fit(DenseMatrix{{-1}}, {DenseMatrix{{1}}}, cfg_for(1, 5)), DomainError);
}

TEST(WnmfFit, WarmStartIsUsed) {
  Rng rng(RngSeed{75});
  const DenseMatrix x = random_matrix(6, 5, rng, 0, 3);
  const DenseMatrix w(6, 5, 1.0);
  const Factorization start{random_matrix(6, 2, rng, 0.1, 1), random_matrix(2, 5, rng, 0.1, 1), {}, {}};
  const Factorization f = wnmf_fit(x, {w}, cfg_for(2, 1), &start);
  const auto [u, v] = nmf_step(x, start.U, start.V, FitConfig{}.epsilon);
  EXPECT_EQ(f.U, u);
  EXPECT_EQ(f.V, v);
  const Factorization bad{DenseMatrix(5, 2), DenseMatrix(2, 5), {}, {}};
  EXPECT_THROW(wnmf_fit(x, {w}, cfg_for(2, 1), &bad), DimensionError);
}

}  // namespace
}  // namespace rnmf
