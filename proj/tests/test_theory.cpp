#include <gtest/gtest.h>

#include "rnmf/theory.hpp"
#include "test_util.hpp"

namespace rnmf::theory {
namespace {

using testing::random_column_problem;
using testing::random_signed_problem;
using testing::random_vec;

ColumnProblem identity_problem(Vec xt, Vec vt) {
  return {std::move(xt), DenseMatrix::identity(2), std::move(vt)};
}

TEST(FValue, HandCases) {
  const ColumnProblem p = identity_problem({1, 0}, {1, 1});
  EXPECT_EQ(f_value(p, Vec{0, 0}), 0.5);
  EXPECT_EQ(f_value(p, Vec{1, 0}), 0.0);
  EXPECT_THROW(f_value(p, Vec{1, 0, 0}), DimensionError);
}

TEST(FValue, HalfOfColumnResidual) {
  Rng rng(RngSeed{50});
  for (int t = 0; t < 20; ++t) {
    const ColumnProblem p = random_column_problem(rng);
    DenseMatrix vcol(p.vt.size(), 1);
    for (std::size_t a = 0; a < p.vt.size(); ++a) vcol(a, 0) = p.vt[a];
    DenseMatrix xcol(p.xt.size(), 1);
    for (std::size_t i = 0; i < p.xt.size(); ++i) xcol(i, 0) = p.xt[i];
    const double res = frobenius_sq(xcol - matmul(p.Ut, vcol));
    EXPECT_NEAR(2 * f_value(p, p.vt), res, 1e-12 * (1 + res));
  }
}

TEST(GradF, ZeroAtExactSolutionAndLinear) {
  const ColumnProblem p = identity_problem({1, 2}, {1, 1});
  for (double g : grad_f(p, Vec{1, 2})) EXPECT_EQ(g, 0.0);
  const Vec g1 = grad_f(p, Vec{2, 3});
  const Vec g2 = grad_f(p, Vec{3, 4});
  EXPECT_EQ(g2[0], 2 * g1[0]);
  EXPECT_EQ(g2[1], 2 * g1[1]);
}

TEST(GradF, CentralDifferences) {
  Rng rng(RngSeed{51});
  for (int t = 0; t < 50; ++t) {
    const ColumnProblem p = random_column_problem(rng);
    const Vec g = grad_f(p, p.vt);
    for (std::size_t a = 0; a < p.vt.size(); ++a) {
      Vec hi = p.vt, lo = p.vt;
      hi[a] += 1e-6;
      lo[a] -= 1e-6;
      const double fd = (f_value(p, hi) - f_value(p, lo)) / 2e-6;
      EXPECT_LT(std::fabs(fd - g[a]) / std::max(1.0, std::fabs(g[a])), 1e-5);
    }
  }
}

TEST(KDiagonal, HandCases) {
  const Vec k = k_diagonal(identity_problem({0, 0}, {2, 3}));
  EXPECT_EQ(k, (Vec{1, 1}));
  const ColumnProblem p{{0, 0}, DenseMatrix{{1, -1}, {2, 1}}, {1, 1}};
  // S = |[[5, 1], [1, 2]]|
  EXPECT_EQ(k_diagonal(p), (Vec{6, 3}));
}

TEST(KDiagonal, TimesVtEqualsSVt) {
  Rng rng(RngSeed{52});
  for (int t = 0; t < 20; ++t) {
    const ColumnProblem p = random_column_problem(rng);
    const Vec k = k_diagonal(p);
    const DenseMatrix s = compute_S(p.Ut);
    for (std::size_t a = 0; a < k.size(); ++a) {
      double sv = 0;
      for (std::size_t b = 0; b < k.size(); ++b) sv += s(a, b) * p.vt[b];
      EXPECT_NEAR(k[a] * p.vt[a], sv, 1e-12 * (1 + sv));
      EXPECT_GE(k[a], 0.0);
    }
  }
}

TEST(KDiagonal, ZeroCoordinateIsSingular) {
  EXPECT_THROW(k_diagonal(identity_problem({0, 0}, {1, 0})), SingularityError);
}

TEST(ZValue, TouchesFOnTheDiagonal) {
  Rng rng(RngSeed{53});
  for (int t = 0; t < 50; ++t) {
    const ColumnProblem p = random_column_problem(rng);
    const double f = f_value(p, p.vt);
    EXPECT_NEAR(z_value(p, p.vt, p.vt), f, 1e-12 * (1 + f));
  }
}

TEST(ZValue, MajorizesF) {
  Rng rng(RngSeed{54});
  for (int t = 0; t < 200; ++t) {
    const ColumnProblem p = t % 2 ? random_column_problem(rng) : random_signed_problem(rng);
    const Vec v = random_vec(rng, p.vt.size(), 0, 3);
    EXPECT_GE(z_value(p, v, p.vt), f_value(p, v) - 1e-10);
  }
}

TEST(ZValue, MinimizerDoesNotIncreaseZ) {
  Rng rng(RngSeed{55});
  for (int t = 0; t < 50; ++t) {
    const ColumnProblem p = random_column_problem(rng);
    const Vec star = z_minimizer(p, p.vt);
    const double z0 = z_value(p, p.vt, p.vt);
    EXPECT_LE(z_value(p, star, p.vt), z0 + 1e-10 * (1 + z0));
    EXPECT_LE(f_value(p, star), z_value(p, star, p.vt) + 1e-10 * (1 + z0));
  }
}

TEST(ZValue, SeparatesOverCoordinates) {
  Rng rng(RngSeed{56});
  for (int t = 0; t < 50; ++t) {
    const ColumnProblem p = random_column_problem(rng);
    const Vec v = random_vec(rng, p.vt.size(), 0, 3);
    const Vec terms = z_coordinate_terms(p, v, p.vt);
    double s = f_value(p, p.vt);
    for (double x : terms) s += x;
    const double z = z_value(p, v, p.vt);
    EXPECT_NEAR(s, z, 1e-10 * (1 + std::fabs(z)));
  }
}

TEST(QuadraticFormM, ZeroMu) {
  Rng rng(RngSeed{57});
  const ColumnProblem p = random_signed_problem(rng);
  EXPECT_EQ(quadratic_form_m(p, p.vt, Vec(p.vt.size(), 0.0)), 0.0);
}

TEST(QuadraticFormM, ConstantMuWithPositiveGramVanishes) {
  Rng rng(RngSeed{58});
  const DenseMatrix ut = testing::random_matrix(4, 3, rng, 0.1, 1);
  const ColumnProblem p{Vec(4, 0.0), ut, random_vec(rng, 3, 0.1, 1)};
  EXPECT_NEAR(quadratic_form_m(p, p.vt, Vec(3, 1.7)), 0.0, 1e-12);
}

TEST(QuadraticFormM, NonnegativeAndMatchesExpansion) {
  Rng rng(RngSeed{59});
  for (int t = 0; t < 500; ++t) {
    const ColumnProblem p = t % 2 ? random_column_problem(rng, 5, 3) : random_signed_problem(rng);
    const Vec mu = random_vec(rng, p.vt.size(), -2, 2);
    const double q = quadratic_form_m(p, p.vt, mu);
    EXPECT_GE(q, -1e-10);
    const double e = testing::m_form_expansion(p.Ut, p.vt, mu);
    EXPECT_NEAR(q, e, 1e-9 * (1 + std::fabs(e)));
  }
}

TEST(QuadraticFormM, ZeroVtCoordinatesAreInert) {
  const ColumnProblem p{{0, 0}, DenseMatrix{{1, -1}, {2, 1}}, {1, 0}};
  const double q = quadratic_form_m(p, p.vt, Vec{0.5, 100});
  EXPECT_NEAR(q, quadratic_form_m(p, p.vt, Vec{0.5, -3}), 1e-12);
}

TEST(Lemma4, FixedPoint) {
  // Ut = I and xt = vt: gradient is zero, so the minimizer is vt.
  const ColumnProblem p = identity_problem({1, 2}, {1, 2});
  const Lemma4Result r = check_lemma4(p, p.vt);
  EXPECT_EQ(r.clamped, p.vt);
  EXPECT_TRUE(r.holds);
}

TEST(Lemma4, ClampEngagesOnSignFlip) {
  // Negative target: the step in coordinate 0 overshoots below zero.
  const ColumnProblem p = identity_problem({-5, 0}, {1, 1});
  const Lemma4Result r = check_lemma4(p, p.vt);
  ASSERT_LT(r.minimizer[0], 0.0);
  EXPECT_EQ(r.clamped[0], 0.0);
  EXPECT_TRUE(r.holds);
}

TEST(Lemma4, RandomSweep) {
  Rng rng(RngSeed{60});
  for (int t = 0; t < 200; ++t) {
    const ColumnProblem p = t % 2 ? random_column_problem(rng) : random_signed_problem(rng);
    EXPECT_TRUE(verify_lemma4(p, p.vt));
  }
}

TEST(Lemma4, ZeroCoordinatesNeedRestriction) {
  const ColumnProblem p = identity_problem({1, 2}, {1, 0});
  EXPECT_THROW(verify_lemma4(p, p.vt), SingularityError);
  const ColumnProblem q = restrict_to_support(p);
  EXPECT_EQ(q.vt, Vec{1});
  EXPECT_EQ(q.Ut.cols(), 1u);
  EXPECT_TRUE(verify_lemma4(q, q.vt));
}

TEST(Consistency, ThresholdedMinimizerIsTheVtildeUpdate) {
  Rng rng(RngSeed{61});
  for (int t = 0; t < 20; ++t) {
    const auto m = testing::random_dim(rng, 1, 10);
    const auto n = testing::random_dim(rng, 1, 6);
    const auto k = testing::random_dim(rng, 1, 4);
    const DenseMatrix x = testing::random_matrix(m, n, rng, 0, 5);
    const DenseMatrix u = testing::random_matrix(m, k, rng, 0.01, 2);
    const AugmentedSystem sys = build_augmented(x, u, testing::random_lambda(rng));
    const DenseMatrix vt = testing::random_matrix(k + 2 * m, n, rng, 0.01, 2);
    const DenseMatrix next = update_vtilde(sys.Xt, sys.Ut, vt, compute_S(sys.Ut), 1e-300);
    for (std::size_t j = 0; j < n; ++j) {
      const ColumnProblem p = column_problem(sys, vt, j);
      const Vec star = z_minimizer(p, p.vt);
      for (std::size_t a = 0; a < star.size(); ++a) {
        EXPECT_NEAR(std::max(0.0, star[a]), next(a, j), 1e-10 * (1 + std::fabs(next(a, j))));
      }
    }
  }
}

}  // namespace
}  // namespace rnmf::theory
