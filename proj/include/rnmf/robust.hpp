#pragma once

// RobustNMF: X ~ UV + E with E = Ep - En sparse, fit by minimizing
//
//   ||X - UV - (Ep - En)||_F^2 + lambda * sum_j (||Ep_.j||_1 + ||En_.j||_1)^2
//
// subject to U, V, Ep, En >= 0 and X - E >= 0.
//
// U is updated by the Lee-Seung rule on the cleaned data X - E. V, Ep and En
// are updated jointly as the stacked block Vt = [V; Ep; En] against the
// augmented least-squares system
//
//   Xt = [X; 0],   Ut = [ U   I       -I      ]
//                       [ 0   sqrt(l)e sqrt(l)e ]
//
// whose Gram matrix G = Ut^T Ut has negative entries. The update majorizes
// with S = |G| and thresholds at zero:
//
//   Vt <- max(0, Vt + Vt .* (Ut^T Xt - G Vt) ./ (S Vt + eps))
//
// Two implementations of the Vt products exist. The dense path materializes
// Ut, G and S and is the reference. The structured path uses the block form
//
//   G = [ U^T U   U^T      -U^T    ]
//       [ U       I+lJ     -I+lJ   ]
//       [ -U      -I+lJ    I+lJ    ]       (J = all-ones m x m)
//
// and never forms anything larger than m x n.

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "rnmf/fit_config.hpp"
#include "rnmf/matrix.hpp"
#include "rnmf/nmf.hpp"

namespace rnmf {

struct RobustModel {
  DenseMatrix U;   // m x k
  DenseMatrix V;   // k x n
  DenseMatrix Ep;  // m x n
  DenseMatrix En;  // m x n
  std::vector<double> objective_trace;
  std::size_t iterations_run = 0;

  DenseMatrix E() const { return Ep - En; }
};

// Ep = (|E| + E) / 2, En = (|E| - E) / 2.
inline std::pair<DenseMatrix, DenseMatrix> split_noise(const DenseMatrix& e) {
  return {map(e, [](double x) { return (std::fabs(x) + x) / 2.0; }),
          map(e, [](double x) { return (std::fabs(x) - x) / 2.0; })};
}

inline DenseMatrix merge_noise(const DenseMatrix& ep, const DenseMatrix& en) {
  require_same_shape(ep, en, "merge_noise");
  return ep - en;
}

inline double robust_objective(const DenseMatrix& x, const DenseMatrix& u,
                               const DenseMatrix& v, const DenseMatrix& ep,
                               const DenseMatrix& en, double lambda) {
  if (!(lambda >= 0.0)) throw DomainError("robust_objective: lambda must be >= 0");
  const DenseMatrix uv = matmul(u, v);
  require_same_shape(x, uv, "robust_objective");
  require_same_shape(x, ep, "robust_objective");
  require_same_shape(x, en, "robust_objective");
  double fit = 0.0;
  std::vector<double> col_l1(x.cols(), 0.0);
  for (std::size_t i = 0; i < x.rows(); ++i) {
    for (std::size_t j = 0; j < x.cols(); ++j) {
      const double r = x(i, j) - uv(i, j) - (ep(i, j) - en(i, j));
      fit += r * r;
      col_l1[j] += std::fabs(ep(i, j)) + std::fabs(en(i, j));
    }
  }
  double penalty = 0.0;
  for (double c : col_l1) penalty += c * c;
  return fit + lambda * penalty;
}

struct AugmentedSystem {
  DenseMatrix Xt;  // (m+1) x n, last row zero
  DenseMatrix Ut;  // (m+1) x (k+2m)
  bool structured = false;
};

inline AugmentedSystem build_augmented(const DenseMatrix& x, const DenseMatrix& u,
                                       double lambda) {
  if (!(lambda >= 0.0)) throw DomainError("build_augmented: lambda must be >= 0");
  if (u.rows() != x.rows()) {
    throw DimensionError("build_augmented: X " + shape_str(x) + ", U " + shape_str(u));
  }
  const std::size_t m = x.rows();
  const std::size_t k = u.cols();
  AugmentedSystem sys{DenseMatrix(m + 1, x.cols()), DenseMatrix(m + 1, k + 2 * m), false};
  for (std::size_t i = 0; i < m; ++i) {
    std::copy(x.row(i).begin(), x.row(i).end(), sys.Xt.row(i).begin());
    std::copy(u.row(i).begin(), u.row(i).end(), sys.Ut.row(i).begin());
    sys.Ut(i, k + i) = 1.0;
    sys.Ut(i, k + m + i) = -1.0;
  }
  const double root = std::sqrt(lambda);
  for (std::size_t c = k; c < k + 2 * m; ++c) sys.Ut(m, c) = root;
  return sys;
}

// S = |Ut^T Ut| entrywise.
inline DenseMatrix compute_S(const DenseMatrix& ut) { return abs(matmul_tn(ut, ut)); }

inline DenseMatrix stack_vtilde(const DenseMatrix& v, const DenseMatrix& ep,
                                const DenseMatrix& en) {
  return vstack(vstack(v, ep), en);
}

namespace detail {

// Vt <- max(0, Vt + Vt .* (b - gv) ./ (sv + eps)), entrywise over spans.
inline void vtilde_rule(std::span<double> vt, std::span<const double> gv,
                        std::span<const double> sv, std::span<const double> b,
                        double eps) {
  for (std::size_t i = 0; i < vt.size(); ++i) {
    const double cur = vt[i];
    if (cur == 0.0) continue;  // absorbing zero
    const double next = cur + cur * (b[i] - gv[i]) / (sv[i] + eps);
    vt[i] = next > 0.0 ? next : 0.0;
  }
}

}  // namespace detail

// Dense reference: all products formed from Ut, S explicitly.
inline DenseMatrix update_vtilde(const DenseMatrix& xt, const DenseMatrix& ut,
                                 DenseMatrix vt, const DenseMatrix& s,
                                 double epsilon) {
  if (ut.rows() != xt.rows() || ut.cols() != vt.rows() || vt.cols() != xt.cols() ||
      s.rows() != ut.cols() || s.cols() != ut.cols()) {
    throw DimensionError("update_vtilde: inconsistent shapes");
  }
  const DenseMatrix gram = matmul_tn(ut, ut);
  const DenseMatrix gv = matmul(gram, vt);
  const DenseMatrix sv = matmul(s, vt);
  const DenseMatrix b = matmul_tn(ut, xt);
  detail::vtilde_rule(vt.data(), gv.data(), sv.data(), b.data(), epsilon);
  return vt;
}

// Block-structured products for the augmented system, built from U alone.
class BlockGram {
 public:
  BlockGram(const DenseMatrix& u, double lambda)
      : u_(u), abs_u_(abs(u)), abs_utu_(abs(matmul_tn(u, u))), lambda_(lambda) {
    if (!(lambda >= 0.0)) throw DomainError("BlockGram: lambda must be >= 0");
  }

  std::size_t m() const { return u_.rows(); }
  std::size_t k() const { return u_.cols(); }

  struct Products {
    DenseMatrix gv_v, gv_p, gv_n;  // G Vt split by block
    DenseMatrix sv_v, sv_p, sv_n;  // S Vt
  };

  Products apply(const DenseMatrix& v, const DenseMatrix& ep,
                 const DenseMatrix& en) const {
    const std::size_t mm = m();
    const std::size_t n = v.cols();
    const double l = lambda_;
    const double cross = std::fabs(l - 1.0) - l;  // diagonal of |-I+lJ| minus l

    std::vector<double> colsum(n, 0.0);  // sum_i (Ep + En)_ij
    for (std::size_t i = 0; i < mm; ++i)
      for (std::size_t j = 0; j < n; ++j) colsum[j] += ep(i, j) + en(i, j);

    const DenseMatrix uv = matmul(u_, v);
    const DenseMatrix abs_uv = matmul(abs_u_, v);
    DenseMatrix resid(mm, n);  // UV + Ep - En
    for (std::size_t i = 0; i < mm; ++i)
      for (std::size_t j = 0; j < n; ++j) resid(i, j) = uv(i, j) + (ep(i, j) - en(i, j));

    Products p{matmul_tn(u_, resid), DenseMatrix(mm, n), DenseMatrix(mm, n),
               matmul(abs_utu_, v) + matmul_tn(abs_u_, ep + en), DenseMatrix(mm, n),
               DenseMatrix(mm, n)};
    for (std::size_t i = 0; i < mm; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        const double pen = l * colsum[j];
        p.gv_p(i, j) = resid(i, j) + pen;
        p.gv_n(i, j) = -resid(i, j) + pen;
        p.sv_p(i, j) = abs_uv(i, j) + ep(i, j) + pen + cross * en(i, j);
        p.sv_n(i, j) = abs_uv(i, j) + cross * ep(i, j) + pen + en(i, j);
      }
    }
    return p;
  }

  // Ut^T Xt restricted to the V block; the Ep and En blocks are X and -X.
  DenseMatrix rhs_v(const DenseMatrix& x) const { return matmul_tn(u_, x); }

 private:
  DenseMatrix u_;
  DenseMatrix abs_u_;
  DenseMatrix abs_utu_;
  double lambda_;
};

// Structured update of (V, Ep, En) in place.
inline void update_noise_block(const DenseMatrix& x, const DenseMatrix& u,
                               double lambda, DenseMatrix& v, DenseMatrix& ep,
                               DenseMatrix& en, double epsilon) {
  const BlockGram gram(u, lambda);
  const auto p = gram.apply(v, ep, en);
  const DenseMatrix b_v = gram.rhs_v(x);
  const DenseMatrix neg_x = -1.0 * x;
  detail::vtilde_rule(v.data(), p.gv_v.data(), p.sv_v.data(), b_v.data(), epsilon);
  detail::vtilde_rule(ep.data(), p.gv_p.data(), p.sv_p.data(), x.data(), epsilon);
  detail::vtilde_rule(en.data(), p.gv_n.data(), p.sv_n.data(), neg_x.data(), epsilon);
}

// Structured counterpart of update_vtilde on a stacked Vt = [V; Ep; En].
inline DenseMatrix update_vtilde_structured(const DenseMatrix& x, const DenseMatrix& u,
                                            double lambda, const DenseMatrix& vt,
                                            double epsilon) {
  const std::size_t m = x.rows();
  const std::size_t k = u.cols();
  if (vt.rows() != k + 2 * m || vt.cols() != x.cols() || u.rows() != m) {
    throw DimensionError("update_vtilde_structured: inconsistent shapes");
  }
  DenseMatrix v = row_block(vt, 0, k);
  DenseMatrix ep = row_block(vt, k, m);
  DenseMatrix en = row_block(vt, k + m, m);
  update_noise_block(x, u, lambda, v, ep, en, epsilon);
  return stack_vtilde(v, ep, en);
}

// Structured S Vt, stacked.
inline DenseMatrix structured_s_times(const DenseMatrix& u, double lambda,
                                      const DenseMatrix& vt) {
  const std::size_t m = u.rows();
  const std::size_t k = u.cols();
  if (vt.rows() != k + 2 * m) throw DimensionError("structured_s_times: shape");
  const auto p = BlockGram(u, lambda).apply(row_block(vt, 0, k), row_block(vt, k, m),
                                            row_block(vt, k + m, m));
  return stack_vtilde(p.sv_v, p.sv_p, p.sv_n);
}

// Structured G Vt, stacked.
inline DenseMatrix structured_gram_times(const DenseMatrix& u, double lambda,
                                         const DenseMatrix& vt) {
  const std::size_t m = u.rows();
  const std::size_t k = u.cols();
  if (vt.rows() != k + 2 * m) throw DimensionError("structured_gram_times: shape");
  const auto p = BlockGram(u, lambda).apply(row_block(vt, 0, k), row_block(vt, k, m),
                                            row_block(vt, k + m, m));
  return stack_vtilde(p.gv_v, p.gv_p, p.gv_n);
}

enum class FeasibilityCheck { kEnforce, kSkip };

// Lee-Seung U step on the cleaned data X - E, thresholded at zero. With
// kEnforce an infeasible E (X - E < 0 anywhere) is rejected; with kSkip the
// step still decreases the objective, and the threshold keeps U >= 0.
inline DenseMatrix update_u(const DenseMatrix& x, const DenseMatrix& e, DenseMatrix u,
                            const DenseMatrix& v, double epsilon,
                            FeasibilityCheck check = FeasibilityCheck::kEnforce) {
  require_same_shape(x, e, "update_u");
  if (u.rows() != x.rows() || v.cols() != x.cols() || u.cols() != v.rows()) {
    throw DimensionError("update_u: inconsistent shapes");
  }
  const DenseMatrix clean = x - e;
  if (check == FeasibilityCheck::kEnforce && !all_nonnegative(clean)) {
    throw PreconditionError("update_u: X - E has negative entries");
  }
  const DenseMatrix num = matmul_nt(clean, v);
  const DenseMatrix den = matmul_nt(matmul(u, v), v);
  for (std::size_t i = 0; i < u.rows(); ++i) {
    for (std::size_t j = 0; j < u.cols(); ++j) {
      const double next = u(i, j) * num(i, j) / (den(i, j) + epsilon);
      u(i, j) = next > 0.0 ? next : 0.0;
    }
  }
  return u;
}

// Ep' = min(Ep, X + En), En' = En, so that X - (Ep' - En') >= 0 holds exactly
// in floating point.
inline std::pair<DenseMatrix, DenseMatrix> project_feasible(const DenseMatrix& x,
                                                            DenseMatrix ep,
                                                            DenseMatrix en) {
  require_same_shape(x, ep, "project_feasible");
  require_same_shape(x, en, "project_feasible");
  auto px = x.data();
  auto pp = ep.data();
  auto pn = en.data();
  for (std::size_t i = 0; i < px.size(); ++i) {
    if (px[i] - (pp[i] - pn[i]) >= 0.0) continue;
    double clamped = std::min(pp[i], px[i] + pn[i]);
    while (clamped > 0.0 && px[i] - (clamped - pn[i]) < 0.0) {
      clamped = std::nextafter(clamped, 0.0);
    }
    pp[i] = std::max(clamped, 0.0);
  }
  return {std::move(ep), std::move(en)};
}

inline bool is_feasible(const DenseMatrix& x, const DenseMatrix& ep,
                        const DenseMatrix& en) {
  auto px = x.data();
  auto pp = ep.data();
  auto pn = en.data();
  for (std::size_t i = 0; i < px.size(); ++i) {
    if (px[i] - (pp[i] - pn[i]) < 0.0) return false;
  }
  return true;
}

// One full iteration: U, then (V, Ep, En), then the feasibility projection.
inline void robust_iteration(const DenseMatrix& x, RobustModel& model,
                             const FitConfig& cfg) {
  const auto check = cfg.project ? FeasibilityCheck::kEnforce : FeasibilityCheck::kSkip;
  model.U = update_u(x, model.E(), std::move(model.U), model.V, cfg.epsilon, check);
  if (cfg.structured) {
    update_noise_block(x, model.U, cfg.lambda, model.V, model.Ep, model.En, cfg.epsilon);
  } else {
    const AugmentedSystem sys = build_augmented(x, model.U, cfg.lambda);
    const DenseMatrix s = compute_S(sys.Ut);
    const DenseMatrix vt = update_vtilde(sys.Xt, sys.Ut,
                                         stack_vtilde(model.V, model.Ep, model.En), s,
                                         cfg.epsilon);
    const std::size_t k = model.U.cols();
    const std::size_t m = x.rows();
    model.V = row_block(vt, 0, k);
    model.Ep = row_block(vt, k, m);
    model.En = row_block(vt, k + m, m);
  }
  if (cfg.project) {
    std::tie(model.Ep, model.En) =
        project_feasible(x, std::move(model.Ep), std::move(model.En));
  }
}

// Initial model: U, V exactly as nmf_fit draws them; Ep = En = a small
// positive constant (zero under pin_noise).
inline RobustModel robust_init(const DenseMatrix& x, const FitConfig& cfg) {
  const double mu = mean(x);
  auto [u, v] = detail::init_factors(x.rows(), x.cols(), mu, cfg);
  const double e0 = cfg.pin_noise ? 0.0 : cfg.noise_init * (mu > 0.0 ? mu : 1.0);
  return RobustModel{std::move(u), std::move(v), DenseMatrix(x.rows(), x.cols(), e0),
                     DenseMatrix(x.rows(), x.cols(), e0), {}, 0};
}

inline RobustModel robust_fit(const DenseMatrix& x, const FitConfig& cfg) {
  validate(cfg);
  require_nonnegative(x, "robust_fit");
  if (!cfg.structured && cfg.k + 2 * x.rows() > cfg.max_dense_width) {
    throw DomainError("robust_fit: dense path width k + 2m = " +
                      std::to_string(cfg.k + 2 * x.rows()) + " exceeds max_dense_width " +
                      std::to_string(cfg.max_dense_width));
  }
  RobustModel model = robust_init(x, cfg);
  model.objective_trace.reserve(cfg.max_iters);
  for (std::size_t it = 0; it < cfg.max_iters; ++it) {
    robust_iteration(x, model, cfg);
    const double obj =
        robust_objective(x, model.U, model.V, model.Ep, model.En, cfg.lambda);
    if (!std::isfinite(obj)) throw NumericalError("robust_fit: objective is not finite");
    model.objective_trace.push_back(obj);
    model.iterations_run = it + 1;
    if (converged(model.objective_trace, cfg)) break;
  }
  // Canonical split: Ep .* En == 0 with E unchanged.
  std::tie(model.Ep, model.En) = split_noise(model.E());
  return model;
}

// Absolute detection threshold for data X.
inline double detection_threshold(const DenseMatrix& x, const FitConfig& cfg) {
  return cfg.detect_threshold * max_entry(x);
}

}  // namespace rnmf
