#pragma once

// Per-column majorization machinery behind the Vt update, in executable form.
//
// For one column the Vt update minimizes F(v) = 1/2 ||xt - Ut v||^2. With
// S = |Ut^T Ut| and the diagonal K(vt)_aa = (S vt)_a / vt_a,
//
//   Z(v, vt) = F(vt) + (v - vt)^T grad F(vt) + 1/2 (v - vt)^T K(vt) (v - vt)
//
// upper-bounds F and touches it at v = vt. Its unconstrained minimizer is
// vt - K^-1 grad F(vt), which is the Vt rule before thresholding. Because K is
// diagonal, Z separates over coordinates, so clamping the minimizer toward vt
// (and at zero) cannot raise Z above Z(vt, vt) = F(vt).
//
// All functions require vt > 0 wherever K is involved; restrict_to_support()
// drops zero coordinates, which the thresholded update never moves anyway.

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "rnmf/errors.hpp"
#include "rnmf/matrix.hpp"
#include "rnmf/robust.hpp"

namespace rnmf::theory {

using Vec = std::vector<double>;

struct ColumnProblem {
  Vec xt;          // m+1
  DenseMatrix Ut;  // (m+1) x (k+2m)
  Vec vt;          // k+2m, nonnegative
};

namespace detail {

inline void require_len(std::span<const double> v, std::size_t n, const char* what) {
  if (v.size() != n) {
    throw DimensionError(std::string(what) + ": vector length " +
                         std::to_string(v.size()) + ", expected " + std::to_string(n));
  }
}

inline Vec mat_vec(const DenseMatrix& a, std::span<const double> v) {
  require_len(v, a.cols(), "mat_vec");
  Vec out(a.rows(), 0.0);
  for (std::size_t i = 0; i < a.rows(); ++i) {
    double s = 0.0;
    auto row = a.row(i);
    for (std::size_t j = 0; j < a.cols(); ++j) s += row[j] * v[j];
    out[i] = s;
  }
  return out;
}

inline Vec mat_t_vec(const DenseMatrix& a, std::span<const double> v) {
  require_len(v, a.rows(), "mat_t_vec");
  Vec out(a.cols(), 0.0);
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto row = a.row(i);
    for (std::size_t j = 0; j < a.cols(); ++j) out[j] += row[j] * v[i];
  }
  return out;
}

inline double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline void check_problem(const ColumnProblem& p) {
  require_len(p.xt, p.Ut.rows(), "ColumnProblem xt");
  require_len(p.vt, p.Ut.cols(), "ColumnProblem vt");
}

}  // namespace detail

// Column j of an augmented system together with column j of Vt.
inline ColumnProblem column_problem(const AugmentedSystem& sys, const DenseMatrix& vt,
                                    std::size_t j) {
  return {sys.Xt.column(j), sys.Ut, vt.column(j)};
}

// 1/2 ||xt - Ut v||^2
inline double f_value(const ColumnProblem& p, std::span<const double> v) {
  detail::require_len(p.xt, p.Ut.rows(), "f_value");
  const Vec uv = detail::mat_vec(p.Ut, v);
  double s = 0.0;
  for (std::size_t i = 0; i < uv.size(); ++i) {
    const double r = p.xt[i] - uv[i];
    s += r * r;
  }
  return 0.5 * s;
}

// Ut^T (Ut v - xt)
inline Vec grad_f(const ColumnProblem& p, std::span<const double> v) {
  detail::require_len(p.xt, p.Ut.rows(), "grad_f");
  Vec r = detail::mat_vec(p.Ut, v);
  for (std::size_t i = 0; i < r.size(); ++i) r[i] -= p.xt[i];
  return detail::mat_t_vec(p.Ut, r);
}

// Diagonal of K(p.vt): (S vt)_a / vt_a.
inline Vec k_diagonal(const ColumnProblem& p) {
  detail::check_problem(p);
  const DenseMatrix s = compute_S(p.Ut);
  const Vec sv = detail::mat_vec(s, p.vt);
  Vec k(sv.size());
  for (std::size_t a = 0; a < k.size(); ++a) {
    if (p.vt[a] == 0.0) {
      throw SingularityError("k_diagonal: vt[" + std::to_string(a) + "] is zero");
    }
    k[a] = sv[a] / p.vt[a];
  }
  return k;
}

namespace detail {

inline ColumnProblem at(const ColumnProblem& p, std::span<const double> vt) {
  return {p.xt, p.Ut, Vec(vt.begin(), vt.end())};
}

}  // namespace detail

// Z(v, vt)
inline double z_value(const ColumnProblem& p, std::span<const double> v,
                      std::span<const double> vt) {
  detail::require_len(v, p.Ut.cols(), "z_value v");
  const ColumnProblem q = detail::at(p, vt);
  const Vec k = k_diagonal(q);
  const Vec g = grad_f(q, vt);
  double lin = 0.0;
  double quad = 0.0;
  for (std::size_t a = 0; a < v.size(); ++a) {
    const double d = v[a] - vt[a];
    lin += d * g[a];
    quad += d * d * k[a];
  }
  return f_value(q, vt) + lin + 0.5 * quad;
}

// Per-coordinate terms of Z(v, vt) - F(vt); they sum to Z - F(vt).
inline Vec z_coordinate_terms(const ColumnProblem& p, std::span<const double> v,
                              std::span<const double> vt) {
  const ColumnProblem q = detail::at(p, vt);
  const Vec k = k_diagonal(q);
  const Vec g = grad_f(q, vt);
  Vec terms(v.size());
  for (std::size_t a = 0; a < v.size(); ++a) {
    const double d = v[a] - vt[a];
    terms[a] = d * g[a] + 0.5 * k[a] * d * d;
  }
  return terms;
}

// Unconstrained minimizer of Z(., vt): vt - K^-1 grad F(vt).
inline Vec z_minimizer(const ColumnProblem& p, std::span<const double> vt) {
  const ColumnProblem q = detail::at(p, vt);
  const Vec k = k_diagonal(q);
  const Vec g = grad_f(q, vt);
  Vec out(vt.size());
  for (std::size_t a = 0; a < out.size(); ++a) out[a] = vt[a] - g[a] / k[a];
  return out;
}

// mu^T M mu with M_ab = vt_a [K(vt) - Ut^T Ut]_ab vt_b, built explicitly.
// Zero coordinates of vt contribute nothing (their rows and columns of M are
// zero), so K is only evaluated on the support.
inline double quadratic_form_m(const ColumnProblem& p, std::span<const double> vt,
                               std::span<const double> mu) {
  const std::size_t n = p.Ut.cols();
  detail::require_len(vt, n, "quadratic_form_m vt");
  detail::require_len(mu, n, "quadratic_form_m mu");
  const DenseMatrix gram = matmul_tn(p.Ut, p.Ut);
  const DenseMatrix s = abs(gram);
  const Vec sv = detail::mat_vec(s, vt);
  DenseMatrix m(n, n);
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = 0; b < n; ++b) {
      double kab = 0.0;
      if (a == b && vt[a] != 0.0) kab = sv[a] / vt[a];
      m(a, b) = vt[a] * (kab - gram(a, b)) * vt[b];
    }
  }
  return detail::dot(mu, detail::mat_vec(m, mu));
}

struct Lemma4Result {
  bool holds = false;
  Vec minimizer;  // unconstrained
  Vec clamped;    // the point actually checked
  double z_clamped = 0.0;
  double z_start = 0.0;
  double f_clamped = 0.0;
  double f_start = 0.0;
};

// Clamp the Z minimizer componentwise into the box between itself and vt,
// then at zero, and check Z(v', vt) <= Z(vt, vt) and F(v') <= F(vt). Slack
// is 1e-10 scaled by (1 + |F(vt)|).
inline Lemma4Result check_lemma4(const ColumnProblem& p, std::span<const double> vt) {
  Lemma4Result r;
  r.minimizer = z_minimizer(p, vt);
  r.clamped.resize(vt.size());
  for (std::size_t a = 0; a < vt.size(); ++a) {
    const double lo = std::min(r.minimizer[a], vt[a]);
    const double hi = std::max(r.minimizer[a], vt[a]);
    r.clamped[a] = std::clamp(std::max(0.0, r.minimizer[a]), std::max(0.0, lo), hi);
  }
  const ColumnProblem q = detail::at(p, vt);
  r.f_start = f_value(q, vt);
  r.z_start = z_value(q, vt, vt);
  r.z_clamped = z_value(q, r.clamped, vt);
  r.f_clamped = f_value(q, r.clamped);
  const double slack = 1e-10 * (1.0 + std::fabs(r.f_start));
  r.holds = r.z_clamped <= r.z_start + slack && r.f_clamped <= r.f_start + slack &&
            r.f_clamped <= r.z_clamped + slack;
  return r;
}

inline bool verify_lemma4(const ColumnProblem& p, std::span<const double> vt) {
  return check_lemma4(p, vt).holds;
}

// Drop coordinates where vt is zero (columns of Ut go with them).
inline ColumnProblem restrict_to_support(const ColumnProblem& p) {
  detail::check_problem(p);
  std::vector<std::size_t> keep;
  for (std::size_t a = 0; a < p.vt.size(); ++a)
    if (p.vt[a] != 0.0) keep.push_back(a);
  if (keep.empty()) throw SingularityError("restrict_to_support: vt is all zero");
  ColumnProblem out{p.xt, DenseMatrix(p.Ut.rows(), keep.size()), {}};
  for (std::size_t c = 0; c < keep.size(); ++c) {
    out.vt.push_back(p.vt[keep[c]]);
    for (std::size_t i = 0; i < p.Ut.rows(); ++i) out.Ut(i, c) = p.Ut(i, keep[c]);
  }
  return out;
}

}  // namespace rnmf::theory
