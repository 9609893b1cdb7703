#pragma once

#include <cmath>
#include <algorithm>
#include <cstddef>
#include <string>
#include <vector>

#include "rnmf/errors.hpp"
#include "rnmf/random.hpp"

namespace rnmf {

// Controls shared by the NMF, RobustNMF and weighted NMF fits. Fields that a
// given fit does not use are ignored by it.
struct FitConfig {
  std::size_t k = 10;
  double lambda = 0.04;
  std::size_t max_iters = 500;
  // Stop when the objective changes by less than this fraction over
  // `window` iterations. Zero disables early stopping.
  double rel_tol = 1e-6;
  std::size_t window = 5;
  RngSeed seed{42};
  // Added to every multiplicative-update denominator.
  double epsilon = 1e-12;
  // An outlier entry counts as detected when |Ep - En| exceeds
  // detect_threshold * max(X).
  double detect_threshold = 1e-3;

  // RobustNMF only.
  // Use the block-structured products instead of materializing the
  // augmented matrices.
  bool structured = true;
  // Clamp Ep after every noise update so that X - (Ep - En) >= 0.
  bool project = true;
  // Hold Ep = En = 0 and update only U, V (reduction to plain NMF).
  bool pin_noise = false;
  // Ep and En start at noise_init * mean(X), equal to each other, so the
  // initial E is exactly zero but the multiplicative updates can still move.
  double noise_init = 1e-6;
  // Dense path refuses k + 2m above this width.
  std::size_t max_dense_width = 4096;
};

inline void validate(const FitConfig& c) {
  auto bad = [](const std::string& msg) { throw DomainError("FitConfig: " + msg); };
  if (c.k < 1) bad("k must be >= 1");
  if (c.max_iters < 1) bad("max_iters must be >= 1");
  if (!(c.epsilon > 0.0) || !std::isfinite(c.epsilon)) bad("epsilon must be > 0");
  if (!(c.rel_tol >= 0.0)) bad("rel_tol must be >= 0");
  if (!(c.lambda >= 0.0) || !std::isfinite(c.lambda)) bad("lambda must be >= 0");
  if (!(c.detect_threshold >= 0.0)) bad("detect_threshold must be >= 0");
  if (c.window < 1) bad("window must be >= 1");
  if (!(c.noise_init > 0.0) || !std::isfinite(c.noise_init)) bad("noise_init must be > 0");
}

// Windowed relative-change stopping rule over an objective trace.
inline bool converged(const std::vector<double>& trace, const FitConfig& c) {
  if (c.rel_tol <= 0.0 || trace.size() <= c.window) return false;
  const double then = trace[trace.size() - 1 - c.window];
  const double now = trace.back();
  const double denom = std::max(std::fabs(then), 1e-300);
  return std::fabs(then - now) / denom < c.rel_tol;
}

}  // namespace rnmf
