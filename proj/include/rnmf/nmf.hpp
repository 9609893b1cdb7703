#pragma once

// Baseline NMF by Lee-Seung multiplicative updates, minimizing ||X - UV||_F^2.
//
// The weighted variant in wnmf.hpp runs through the same kernel with a 0/1
// mask; plain NMF is the mask-free instantiation, and an all-ones mask
// reproduces it bit for bit.

#include <cmath>
#include <string>
#include <vector>

#include "rnmf/fit_config.hpp"
#include "rnmf/matrix.hpp"
#include "rnmf/random.hpp"

namespace rnmf {

struct Factorization {
  DenseMatrix U;  // m x k
  DenseMatrix V;  // k x n
  std::vector<double> objective_trace;
  std::vector<std::string> warnings;
};

inline void require_nonnegative(const DenseMatrix& x, const char* what) {
  if (!all_nonnegative(x)) {
    throw DomainError(std::string(what) + ": negative entries");
  }
}

inline double nmf_objective(const DenseMatrix& x, const DenseMatrix& u,
                            const DenseMatrix& v) {
  const DenseMatrix uv = matmul(u, v);
  require_same_shape(x, uv, "nmf_objective");
  return frobenius_sq(x - uv);
}

namespace detail {

// Optional 0/1 weights. A null mask means "all entries trusted".
struct MaskView {
  const DenseMatrix* w = nullptr;

  DenseMatrix apply(const DenseMatrix& a) const { return w ? hadamard(*w, a) : a; }

  double objective(const DenseMatrix& x, const DenseMatrix& u,
                   const DenseMatrix& v) const {
    const DenseMatrix uv = matmul(u, v);
    require_same_shape(x, uv, "objective");
    double s = 0.0;
    auto px = x.data();
    auto puv = uv.data();
    for (std::size_t i = 0; i < px.size(); ++i) {
      const double r = w ? w->data()[i] * (px[i] - puv[i]) : px[i] - puv[i];
      s += r * r;
    }
    return s;
  }

  double data_mean(const DenseMatrix& x) const {
    if (!w) return mean(x);
    const double total = sum(*w);
    return total > 0.0 ? sum(hadamard(*w, x)) / total : 0.0;
  }
};

// Strictly positive U (m x k) then V (k x n) from one stream, each entry
// uniform on (0, sqrt(mean/k)].
inline std::pair<DenseMatrix, DenseMatrix> init_factors(std::size_t m,
                                                        std::size_t n,
                                                        double data_mean,
                                                        const FitConfig& cfg) {
  double scale = std::sqrt(data_mean / static_cast<double>(cfg.k));
  if (!(scale > 0.0) || !std::isfinite(scale)) scale = 1.0;
  Rng rng(cfg.seed);
  DenseMatrix u = random_uniform(m, cfg.k, rng, scale);
  DenseMatrix v = random_uniform(cfg.k, n, rng, scale);
  return {std::move(u), std::move(v)};
}

// factor <- factor * num / (den + eps), entrywise; rows listed in `frozen`
// keep their previous value.
inline void multiplicative_apply(DenseMatrix& factor, const DenseMatrix& num,
                                 const DenseMatrix& den, double eps,
                                 const std::vector<bool>* frozen_rows,
                                 const std::vector<bool>* frozen_cols) {
  for (std::size_t i = 0; i < factor.rows(); ++i) {
    if (frozen_rows && (*frozen_rows)[i]) continue;
    for (std::size_t j = 0; j < factor.cols(); ++j) {
      if (frozen_cols && (*frozen_cols)[j]) continue;
      factor(i, j) = factor(i, j) * num(i, j) / (den(i, j) + eps);
    }
  }
}

// One Gauss-Seidel sweep: U from (U, V), then V from (U', V).
// `wx` is the masked data W*X (or X itself without a mask).
inline void weighted_step(const DenseMatrix& wx, MaskView mask, DenseMatrix& u,
                          DenseMatrix& v, double eps,
                          const std::vector<bool>* empty_rows,
                          const std::vector<bool>* empty_cols) {
  {
    const DenseMatrix r = mask.apply(matmul(u, v));
    const DenseMatrix num = matmul_nt(wx, v);
    const DenseMatrix den = matmul_nt(r, v);
    multiplicative_apply(u, num, den, eps, empty_rows, nullptr);
  }
  {
    const DenseMatrix r = mask.apply(matmul(u, v));
    const DenseMatrix num = matmul_tn(u, wx);
    const DenseMatrix den = matmul_tn(u, r);
    multiplicative_apply(v, num, den, eps, nullptr, empty_cols);
  }
}

inline Factorization weighted_fit(const DenseMatrix& x, MaskView mask,
                                  const FitConfig& cfg,
                                  const std::vector<bool>* empty_rows,
                                  const std::vector<bool>* empty_cols,
                                  const Factorization* start = nullptr) {
  validate(cfg);
  require_nonnegative(x, "fit");
  auto [u, v] = start ? std::pair{start->U, start->V}
                      : init_factors(x.rows(), x.cols(), mask.data_mean(x), cfg);
  if (u.rows() != x.rows() || v.cols() != x.cols() || u.cols() != v.rows()) {
    throw DimensionError("fit: initial factors do not match X " + shape_str(x));
  }
  require_nonnegative(u, "fit initial U");
  require_nonnegative(v, "fit initial V");
  const DenseMatrix wx = mask.apply(x);
  Factorization out{std::move(u), std::move(v), {}, {}};
  out.objective_trace.reserve(cfg.max_iters);
  for (std::size_t it = 0; it < cfg.max_iters; ++it) {
    weighted_step(wx, mask, out.U, out.V, cfg.epsilon, empty_rows, empty_cols);
    const double obj = mask.objective(x, out.U, out.V);
    if (!std::isfinite(obj)) throw NumericalError("fit: objective is not finite");
    out.objective_trace.push_back(obj);
    if (converged(out.objective_trace, cfg)) break;
  }
  return out;
}

}  // namespace detail

// One multiplicative sweep: U' from (U, V), then V' from (U', V).
inline std::pair<DenseMatrix, DenseMatrix> nmf_step(const DenseMatrix& x,
                                                    DenseMatrix u, DenseMatrix v,
                                                    double epsilon) {
  if (u.rows() != x.rows() || v.cols() != x.cols() || u.cols() != v.rows()) {
    throw DimensionError("nmf_step: X " + shape_str(x) + ", U " + shape_str(u) +
                         ", V " + shape_str(v));
  }
  if (!(epsilon > 0.0)) throw DomainError("nmf_step: epsilon must be > 0");
  detail::weighted_step(x, {}, u, v, epsilon, nullptr, nullptr);
  return {std::move(u), std::move(v)};
}

inline Factorization nmf_fit(const DenseMatrix& x, const FitConfig& cfg) {
  return detail::weighted_fit(x, {}, cfg, nullptr, nullptr);
}

}  // namespace rnmf
