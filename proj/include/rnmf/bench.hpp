#pragma once

// Desk-scale versions of the noise-detection and reconstruction experiments:
// synthetic nonnegative low-rank data, sparse large-value corruption,
// RobustNMF detection scored by pooled precision/recall, and MSRE of NMF,
// RobustNMF and RobustNMF+WNMF against the clean data.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "rnmf/csv.hpp"
#include "rnmf/fit_config.hpp"
#include "rnmf/matrix.hpp"
#include "rnmf/nmf.hpp"
#include "rnmf/random.hpp"
#include "rnmf/robust.hpp"
#include "rnmf/wnmf.hpp"

namespace rnmf {

// Intensity scale of 8-bit images; the default lambda is calibrated to data
// whose corrupted maximum sits there.
inline constexpr double kReferencePeak = 255.0;

enum class CorruptionMode { kPixelCount, kDensity };

struct CorruptionSpec {
  CorruptionMode mode = CorruptionMode::kPixelCount;
  std::size_t count = 0;  // per column, kPixelCount
  double density = 0.0;   // overall fraction, kDensity
  double value = kReferencePeak;
  RngSeed seed{1};
};

struct Corrupted {
  DenseMatrix noisy;
  DenseMatrix truth;  // 1 where the entry was overwritten
};

// kPixelCount: exactly `count` distinct rows per column are set to `value`.
// kDensity: each entry independently with probability `density`, set to 0 or
// `value` with equal probability (salt and pepper).
inline Corrupted inject_corruption(const DenseMatrix& x, const CorruptionSpec& spec) {
  if (!(spec.value >= 0.0) || !std::isfinite(spec.value)) {
    throw DomainError("inject_corruption: value must be finite and >= 0");
  }
  Corrupted out{x, DenseMatrix(x.rows(), x.cols())};
  Rng rng(spec.seed);
  if (spec.mode == CorruptionMode::kPixelCount) {
    if (spec.count > x.rows()) {
      throw DomainError("inject_corruption: count " + std::to_string(spec.count) +
                        " exceeds column length " + std::to_string(x.rows()));
    }
    std::vector<std::size_t> idx(x.rows());
    for (std::size_t j = 0; j < x.cols(); ++j) {
      std::iota(idx.begin(), idx.end(), std::size_t{0});
      // Partial Fisher-Yates: the first `count` slots are a uniform sample.
      for (std::size_t s = 0; s < spec.count; ++s) {
        const std::size_t pick = s + rng.next_below(x.rows() - s);
        std::swap(idx[s], idx[pick]);
        out.noisy(idx[s], j) = spec.value;
        out.truth(idx[s], j) = 1.0;
      }
    }
  } else {
    if (!(spec.density >= 0.0 && spec.density <= 1.0)) {
      throw DomainError("inject_corruption: density must be in [0, 1]");
    }
    for (std::size_t i = 0; i < x.size(); ++i) {
      if (rng.next_unit_closed_open() < spec.density) {
        const bool salt = (rng.next_u64() >> 63) != 0;
        out.noisy.data()[i] = salt ? spec.value : 0.0;
        out.truth.data()[i] = 1.0;
      }
    }
  }
  return out;
}

inline std::size_t count_nonzero(const DenseMatrix& m) {
  return static_cast<std::size_t>(
      std::count_if(m.data().begin(), m.data().end(), [](double v) { return v != 0.0; }));
}

struct PrecisionRecall {
  double precision = 1.0;
  double recall = 1.0;
  bool precision_vacuous = false;  // nothing detected
  bool recall_vacuous = false;     // nothing to find
  std::size_t hits = 0;
  std::size_t detected = 0;
  std::size_t truth = 0;
};

// Pooled over all entries. An empty denominator yields 1.0 plus a flag.
inline PrecisionRecall precision_recall(const DenseMatrix& detected, const DenseMatrix& truth) {
  require_same_shape(detected, truth, "precision_recall");
  PrecisionRecall pr;
  for (std::size_t i = 0; i < detected.size(); ++i) {
    const bool d = detected.data()[i] != 0.0;
    const bool t = truth.data()[i] != 0.0;
    pr.detected += d;
    pr.truth += t;
    pr.hits += d && t;
  }
  if (pr.detected == 0) {
    pr.precision_vacuous = true;
  } else {
    pr.precision = static_cast<double>(pr.hits) / static_cast<double>(pr.detected);
  }
  if (pr.truth == 0) {
    pr.recall_vacuous = true;
  } else {
    pr.recall = static_cast<double>(pr.hits) / static_cast<double>(pr.truth);
  }
  return pr;
}

// (1/N) ||Xclean - UV||_F^2, N = number of columns.
inline double msre(const DenseMatrix& clean, const DenseMatrix& u, const DenseMatrix& v) {
  const DenseMatrix uv = matmul(u, v);
  require_same_shape(clean, uv, "msre");
  return frobenius_sq(clean - uv) / static_cast<double>(clean.cols());
}

// 1 where |E| exceeds the absolute threshold.
inline DenseMatrix detect_outliers(const DenseMatrix& ep, const DenseMatrix& en,
                                   double threshold) {
  const WeightMask trusted = mask_from_noise(ep, en, threshold);
  return map(trusted.W, [](double w) { return 1.0 - w; });
}

struct SyntheticSpec {
  std::size_t m = 256;
  std::size_t n = 100;
  std::size_t rank = 5;
  // Clean data are rescaled so their maximum is this value.
  double peak = kReferencePeak / 10.0;
  RngSeed seed{7};
};

// X = U* V* with U*, V* uniform on (0, 1], rescaled to max(X) = peak.
inline DenseMatrix synthetic_low_rank(const SyntheticSpec& s) {
  if (s.rank < 1) throw DomainError("synthetic_low_rank: rank must be >= 1");
  if (!(s.peak > 0.0)) throw DomainError("synthetic_low_rank: peak must be > 0");
  Rng rng(s.seed);
  const DenseMatrix u = random_uniform(s.m, s.rank, rng, 1.0);
  const DenseMatrix v = random_uniform(s.rank, s.n, rng, 1.0);
  DenseMatrix x = matmul(u, v);
  const double scale = s.peak / max_entry(x);
  for (double& e : x.data()) e *= scale;
  return x;
}

// Per-run seeds derived from one run seed (splitmix64 finalizer).
inline RngSeed derive_seed(std::uint64_t run_seed, std::uint64_t stream) {
  std::uint64_t z = run_seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return RngSeed{z ^ (z >> 31)};
}

// Everything needed to run one detection or MSRE experiment.
struct Scenario {
  SyntheticSpec data;
  std::size_t corruption_count = 13;  // per column
  double corruption_factor = 10.0;    // corruption value / clean max
  FitConfig fit;
  // Use lambda * (255 / max(X))^2 so the default lambda keeps its meaning on
  // data that is not on the 0..255 scale.
  bool normalize_lambda = true;
};

struct ScenarioData {
  DenseMatrix clean;
  Corrupted corrupted;
  FitConfig fit;  // with run seeds and the effective lambda filled in
  double lambda_scale = 1.0;
};

inline ScenarioData materialize(const Scenario& sc, std::uint64_t run_seed) {
  SyntheticSpec ds = sc.data;
  ds.seed = derive_seed(run_seed, 0);
  ScenarioData out{synthetic_low_rank(ds), {}, sc.fit, 1.0};
  CorruptionSpec cs;
  cs.mode = CorruptionMode::kPixelCount;
  cs.count = sc.corruption_count;
  cs.value = sc.corruption_factor * max_entry(out.clean);
  cs.seed = derive_seed(run_seed, 1);
  out.corrupted = inject_corruption(out.clean, cs);
  out.fit.seed = derive_seed(run_seed, 2);
  if (sc.normalize_lambda) {
    const double r = kReferencePeak / max_entry(out.corrupted.noisy);
    out.lambda_scale = r * r;
    out.fit.lambda = sc.fit.lambda * out.lambda_scale;
  }
  return out;
}

struct DetectionReport {
  DenseMatrix mask;
  DenseMatrix truth;
  PrecisionRecall scores;
  double lambda_effective = 0.0;
  double lambda_scale = 1.0;
  std::size_t iterations = 0;
};

// Fit RobustNMF to the corrupted matrix and score the support of E.
inline DetectionReport detect_and_score(const ScenarioData& sd) {
  const DenseMatrix& x = sd.corrupted.noisy;
  const RobustModel model = robust_fit(x, sd.fit);
  DetectionReport rep;
  rep.mask = detect_outliers(model.Ep, model.En, detection_threshold(x, sd.fit));
  rep.truth = sd.corrupted.truth;
  rep.scores = precision_recall(rep.mask, rep.truth);
  rep.lambda_effective = sd.fit.lambda;
  rep.lambda_scale = sd.lambda_scale;
  rep.iterations = model.iterations_run;
  return rep;
}

inline DetectionReport run_detection(const Scenario& sc, std::uint64_t run_seed) {
  return detect_and_score(materialize(sc, run_seed));
}

enum class SweepParam { kLambda, kNSamples };

inline const char* sweep_param_name(SweepParam p) {
  return p == SweepParam::kLambda ? "lambda" : "n_samples";
}

struct SweepRow {
  SweepParam param;
  double value;
  std::uint64_t run_seed;
  double precision;
  double recall;
  std::string error;  // non-empty when the point failed
};

struct SweepSpec {
  SweepParam param = SweepParam::kLambda;
  std::vector<double> values;
  std::vector<std::uint64_t> run_seeds;
};

// Rows are ordered by (value index, seed index). A failing point is recorded
// with NaN scores and the error text; the sweep continues.
inline std::vector<SweepRow> run_detection_sweep(const Scenario& base, const SweepSpec& sweep) {
  if (sweep.values.empty() || sweep.run_seeds.empty()) {
    throw DomainError("run_detection_sweep: empty sweep");
  }
  std::vector<SweepRow> rows;
  for (double value : sweep.values) {
    Scenario sc = base;
    if (sweep.param == SweepParam::kLambda) {
      sc.fit.lambda = value;
    } else {
      if (!(value >= 1.0) || value != std::floor(value)) {
        throw DomainError("run_detection_sweep: n_samples must be a positive integer");
      }
      sc.data.n = static_cast<std::size_t>(value);
    }
    for (std::uint64_t seed : sweep.run_seeds) {
      SweepRow row{sweep.param, value, seed, std::nan(""), std::nan(""), {}};
      try {
        const DetectionReport rep = run_detection(sc, seed);
        row.precision = rep.scores.precision;
        row.recall = rep.scores.recall;
      } catch (const std::exception& e) {
        row.error = e.what();
      }
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

inline std::string format_sweep_csv(const std::vector<SweepRow>& rows) {
  std::string out = "# precision and recall pooled over all entries of each run\n";
  out += "sweep_param,value,run_seed,precision,recall\n";
  for (const auto& r : rows) {
    out += std::string(sweep_param_name(r.param)) + "," + format_double(r.value) + "," +
           std::to_string(r.run_seed) + "," + format_double(r.precision) + "," +
           format_double(r.recall) + "\n";
  }
  return out;
}

inline double median(std::vector<double> xs) {
  if (xs.empty()) return std::nan("");
  std::sort(xs.begin(), xs.end());
  const std::size_t h = xs.size() / 2;
  return xs.size() % 2 ? xs[h] : 0.5 * (xs[h - 1] + xs[h]);
}

struct SweepSummary {
  double value;
  double median_precision;
  double median_recall;
  double mean_precision;
  double mean_recall;
  std::size_t runs;
};

inline std::vector<SweepSummary> summarize_sweep(const std::vector<SweepRow>& rows) {
  std::vector<SweepSummary> out;
  for (std::size_t i = 0; i < rows.size();) {
    std::size_t j = i;
    std::vector<double> p, r;
    while (j < rows.size() && rows[j].value == rows[i].value) {
      if (rows[j].error.empty()) {
        p.push_back(rows[j].precision);
        r.push_back(rows[j].recall);
      }
      ++j;
    }
    auto avg = [](const std::vector<double>& v) {
      return v.empty() ? std::nan("") : std::accumulate(v.begin(), v.end(), 0.0) / v.size();
    };
    out.push_back({rows[i].value, median(p), median(r), avg(p), avg(r), p.size()});
    i = j;
  }
  return out;
}

inline std::string format_summary_csv(SweepParam param, const std::vector<SweepSummary>& s) {
  std::string out = std::string(sweep_param_name(param)) +
                    ",median_precision,median_recall,mean_precision,mean_recall,runs\n";
  for (const auto& r : s) {
    out += format_double(r.value) + "," + format_double(r.median_precision) + "," +
           format_double(r.median_recall) + "," + format_double(r.mean_precision) + "," +
           format_double(r.mean_recall) + "," + std::to_string(r.runs) + "\n";
  }
  return out;
}

enum class Method { kNmf, kRobust, kRobustWnmf };

inline const char* method_name(Method m) {
  switch (m) {
    case Method::kNmf: return "NMF";
    case Method::kRobust: return "RobustNMF";
    case Method::kRobustWnmf: return "RobustNMF+WNMF";
  }
  return "?";
}

struct MsreReport {
  Method method;
  double msre;
  std::size_t n_samples;
  std::uint64_t run_seed;
  FitConfig config;
};

struct Reconstructions {
  Factorization nmf;
  RobustModel robust;
  Factorization wnmf;
  WeightMask mask;
};

// NMF on X; RobustNMF on X; WNMF on X with the RobustNMF outliers masked.
inline Reconstructions reconstruct_all(const DenseMatrix& x, const FitConfig& cfg) {
  Reconstructions r{nmf_fit(x, cfg), robust_fit(x, cfg), {}, {}};
  r.mask = mask_from_noise(r.robust.Ep, r.robust.En, detection_threshold(x, cfg));
  const Factorization start{r.robust.U, r.robust.V, {}, {}};
  r.wnmf = wnmf_fit(x, r.mask, cfg, &start);
  return r;
}

inline std::vector<MsreReport> run_msre_comparison(const Scenario& sc, std::uint64_t run_seed) {
  const ScenarioData sd = materialize(sc, run_seed);
  const Reconstructions r = reconstruct_all(sd.corrupted.noisy, sd.fit);
  const std::size_t n = sd.clean.cols();
  return {{Method::kNmf, msre(sd.clean, r.nmf.U, r.nmf.V), n, run_seed, sd.fit},
          {Method::kRobust, msre(sd.clean, r.robust.U, r.robust.V), n, run_seed, sd.fit},
          {Method::kRobustWnmf, msre(sd.clean, r.wnmf.U, r.wnmf.V), n, run_seed, sd.fit}};
}

inline std::string format_msre_csv(const std::vector<MsreReport>& reports) {
  std::string out = "method,msre,seed\n";
  for (const auto& r : reports) {
    out += std::string(method_name(r.method)) + "," + format_double(r.msre) + "," +
           std::to_string(r.run_seed) + "\n";
  }
  return out;
}

// Spearman rank correlation (average ranks for ties).
inline double spearman(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size() || a.size() < 2) throw DimensionError("spearman: bad lengths");
  auto ranks = [](const std::vector<double>& v) {
    std::vector<std::size_t> idx(v.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::sort(idx.begin(), idx.end(), [&](std::size_t i, std::size_t j) { return v[i] < v[j]; });
    std::vector<double> r(v.size());
    for (std::size_t i = 0; i < idx.size();) {
      std::size_t j = i;
      while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
      const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
      for (std::size_t t = i; t <= j; ++t) r[idx[t]] = avg;
      i = j + 1;
    }
    return r;
  };
  const auto ra = ranks(a);
  const auto rb = ranks(b);
  const double ma = std::accumulate(ra.begin(), ra.end(), 0.0) / ra.size();
  const double mb = std::accumulate(rb.begin(), rb.end(), 0.0) / rb.size();
  double num = 0.0, da = 0.0, db = 0.0;
  for (std::size_t i = 0; i < ra.size(); ++i) {
    num += (ra[i] - ma) * (rb[i] - mb);
    da += (ra[i] - ma) * (ra[i] - ma);
    db += (rb[i] - mb) * (rb[i] - mb);
  }
  if (da == 0.0 || db == 0.0) return 0.0;  // a constant series has no trend
  return num / std::sqrt(da * db);
}

}  // namespace rnmf
