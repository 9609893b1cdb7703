#pragma once

// Weighted NMF: minimize ||W .* (X - UV)||_F^2 for a binary mask W, so that
// entries with W_ij = 0 (detected outliers) never influence the factors.
//
//   U <- U .* ((W.*X) V^T) ./ ((W.*(UV)) V^T + eps)
//   V <- V .* (U^T (W.*X)) ./ (U^T (W.*(UV)) + eps)
//
// A column (row) of W with no trusted entry leaves the matching column of V
// (row of U) at its initial value and adds a warning to the result.

#include <cmath>
#include <string>
#include <vector>

#include "rnmf/nmf.hpp"

namespace rnmf {

struct WeightMask {
  DenseMatrix W;  // 1 = trusted, 0 = ignored
};

inline void validate_mask(const WeightMask& mask) {
  for (double w : mask.W.data()) {
    if (w != 0.0 && w != 1.0) throw DomainError("WeightMask: entries must be 0 or 1");
  }
}

// W_ij = 0 where |Ep_ij - En_ij| > threshold, else 1.
inline WeightMask mask_from_noise(const DenseMatrix& ep, const DenseMatrix& en,
                                  double threshold) {
  if (!(threshold >= 0.0)) throw DomainError("mask_from_noise: threshold must be >= 0");
  require_same_shape(ep, en, "mask_from_noise");
  return {zip(ep, en, [threshold](double p, double n) {
    return std::fabs(p - n) > threshold ? 0.0 : 1.0;
  })};
}

inline double wnmf_objective(const DenseMatrix& x, const WeightMask& mask,
                             const DenseMatrix& u, const DenseMatrix& v) {
  require_same_shape(x, mask.W, "wnmf_objective");
  return detail::MaskView{&mask.W}.objective(x, u, v);
}

// `start`, when given, replaces the random initialization (its U and V are
// used as the first iterate).
inline Factorization wnmf_fit(const DenseMatrix& x, const WeightMask& mask,
                              const FitConfig& cfg, const Factorization* start = nullptr) {
  require_same_shape(x, mask.W, "wnmf_fit");
  validate_mask(mask);

  std::vector<bool> empty_rows(x.rows(), true);
  std::vector<bool> empty_cols(x.cols(), true);
  for (std::size_t i = 0; i < x.rows(); ++i) {
    for (std::size_t j = 0; j < x.cols(); ++j) {
      if (mask.W(i, j) != 0.0) {
        empty_rows[i] = false;
        empty_cols[j] = false;
      }
    }
  }

  Factorization out =
      detail::weighted_fit(x, detail::MaskView{&mask.W}, cfg, &empty_rows, &empty_cols, start);
  for (std::size_t j = 0; j < x.cols(); ++j) {
    if (empty_cols[j]) {
      out.warnings.push_back("column " + std::to_string(j) +
                             " has no trusted entries; left at initialization");
    }
  }
  for (std::size_t i = 0; i < x.rows(); ++i) {
    if (empty_rows[i]) {
      out.warnings.push_back("row " + std::to_string(i) +
                             " has no trusted entries; left at initialization");
    }
  }
  return out;
}

}  // namespace rnmf
