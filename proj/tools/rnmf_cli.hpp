#pragma once

// Command-line front end. run() is the whole program except process exit, so
// tests can drive it in-process.
//
// Every subcommand writes its outputs plus manifest.txt into --out-dir. The
// manifest holds the resolved options (opt.*), the resolved bench config
// (config.*), derived facts (info.*), the tool version and the wall-clock
// time; `rnmf rerun --manifest FILE` replays it.
//
// Exit codes: 0 success, 2 usage, 1 runtime.

#include <chrono>
#include <filesystem>
#include <functional>
#include <map>
#include <ostream>
#include <set>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "rnmf/bench.hpp"
#include "rnmf/csv.hpp"
#include "rnmf/imaging.hpp"
#include "rnmf/kv.hpp"
#include "rnmf/robust.hpp"
#include "rnmf/wnmf.hpp"

namespace rnmf::cli {

inline constexpr const char* kToolVersion = "rnmf 0.1.0";

enum ExitCode : int { kOk = 0, kRuntime = 1, kUsage = 2 };

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct OptionSpec {
  std::string name;
  std::string fallback;  // empty and required => must be given
  std::string help;
  bool required = false;
};

inline std::vector<OptionSpec> fit_option_specs() {
  return {{"k", "10", "factorization rank"},
          {"lambda", "0.04", "noise penalty"},
          {"seed", "42", "initialization seed"},
          {"max-iters", "500", "iteration cap"},
          {"tol", "1e-6", "relative objective change for early stop (0 disables)"}};
}

inline const std::map<std::string, std::vector<OptionSpec>>& command_specs() {
  static const auto specs = [] {
    std::map<std::string, std::vector<OptionSpec>> m;
    auto with_fit = [](std::vector<OptionSpec> v) {
      for (auto& o : fit_option_specs()) v.push_back(o);
      return v;
    };
    m["factorize"] = with_fit({{"method", "robust", "nmf | robust"},
                               {"input", "", "data matrix CSV", true},
                               {"out-dir", "", "output directory", true}});
    m["detect"] = with_fit({{"input", "", "data matrix CSV", true},
                            {"truth", "", "optional 0/1 CSV of corrupted positions"},
                            {"threshold", "", "absolute |E| threshold (default 1e-3 * max X; inf allowed)"},
                            {"normalize-lambda", "true", "scale lambda by (255 / max X)^2"},
                            {"out-dir", "", "output directory", true}});
    m["denoise"] = with_fit({{"input", "", "binary PGM image", true},
                             {"method", "robust", "nmf | robust | robust+wnmf"},
                             {"patch-size", "8", "square patch side"},
                             {"density", "0", "salt-and-pepper density injected before denoising"},
                             {"out-dir", "", "output directory", true}});
    m["bench"] = {{"suite", "", "detect-sweep | msre", true},
                  {"config", "", "key=value config file"},
                  {"seeds", "", "run seeds, comma separated (overrides config)"},
                  {"max-iters", "", "iteration cap (overrides config)"},
                  {"out-dir", "", "output directory", true}};
    m["generate"] = {{"m", "256", "rows"},
                     {"n", "100", "columns"},
                     {"rank", "5", "true rank"},
                     {"corruption-count", "13", "corrupted entries per column"},
                     {"corruption-factor", "10", "corruption value / clean max"},
                     {"seed", "0", "run seed"},
                     {"out-dir", "", "output directory", true}};
    return m;
  }();
  return specs;
}

struct Invocation {
  std::string command;
  KeyValues opts;
  KeyValues config;  // bench only
};

template <class F>
auto wrap(F&& f) {
  try {
    return f();
  } catch (const FormatError& e) {
    throw UsageError(e.what());
  }
}

// Typed access with usage errors for bad values.
class Options {
 public:
  explicit Options(const KeyValues& kv) : kv_(kv) {}

  const std::string& str(const std::string& key) const {
    const auto it = kv_.find(key);
    if (it == kv_.end()) throw UsageError("missing option --" + key);
    return it->second;
  }
  bool has(const std::string& key) const { return !str(key).empty(); }

  double real(const std::string& key, bool allow_inf = false) const {
    const std::string& v = str(key);
    if (allow_inf && (v == "inf" || v == "infinity")) return std::numeric_limits<double>::infinity();
    return wrap([&] { return kv_double("--" + key, v); });
  }
  std::uint64_t count(const std::string& key) const {
    return wrap([&] { return kv_u64("--" + key, str(key)); });
  }
  bool flag(const std::string& key) const {
    return wrap([&] { return kv_bool("--" + key, str(key)); });
  }

 private:
  const KeyValues& kv_;
};

inline FitConfig resolve_fit(const Options& o) {
  FitConfig cfg;
  cfg.k = o.count("k");
  cfg.lambda = o.real("lambda");
  cfg.seed = RngSeed{o.count("seed")};
  cfg.max_iters = o.count("max-iters");
  cfg.rel_tol = o.real("tol");
  try {
    validate(cfg);
  } catch (const DomainError& e) {
    throw UsageError(e.what());
  }
  return cfg;
}

inline void require_choice(const std::string& what, const std::string& value,
                           const std::set<std::string>& allowed) {
  if (!allowed.count(value)) {
    std::string list;
    for (const auto& a : allowed) list += (list.empty() ? "" : ", ") + a;
    throw UsageError("--" + what + " must be one of: " + list + " (got '" + value + "')");
  }
}

inline std::string trace_csv(const std::vector<double>& trace) {
  std::string out = "iteration,objective\n";
  for (std::size_t i = 0; i < trace.size(); ++i) {
    out += std::to_string(i + 1) + "," + format_double(trace[i]) + "\n";
  }
  return out;
}

class Run {
 public:
  Run(const Invocation& inv, std::ostream& out) : inv_(inv), o_(inv.opts), out_(out) {
    dir_ = o_.str("out-dir");
    if (dir_.empty()) throw UsageError("--out-dir must not be empty");
  }

  const Options& opts() const { return o_; }
  std::ostream& out() { return out_; }
  void info(const std::string& key, const std::string& value) { info_[key] = value; }

  void write(const std::string& name, const std::string& content) {
    std::filesystem::create_directories(dir_);
    write_text_file((dir_ / name).string(), content);
  }

  void write_manifest(double seconds) {
    std::string text = "# rnmf run manifest\ncommand=" + inv_.command + "\n";
    for (const auto& [k, v] : inv_.config) text += "config." + k + "=" + v + "\n";
    for (const auto& [k, v] : info_) text += "info." + k + "=" + v + "\n";
    for (const auto& [k, v] : inv_.opts) text += "opt." + k + "=" + v + "\n";
    text += std::string("tool_version=") + kToolVersion + "\n";
    text += "wall_clock_seconds=" + format_double(seconds) + "\n";
    write("manifest.txt", text);
  }

 private:
  const Invocation& inv_;
  Options o_;
  std::ostream& out_;
  std::filesystem::path dir_;
  KeyValues info_;
};

inline void cmd_factorize(Run& r) {
  const Options& o = r.opts();
  const std::string method = o.str("method");
  require_choice("method", method, {"nmf", "robust"});
  const FitConfig cfg = resolve_fit(o);
  const DenseMatrix x = read_csv(o.str("input"));
  std::vector<double> trace;
  if (method == "nmf") {
    const Factorization f = nmf_fit(x, cfg);
    r.write("U.csv", format_csv(f.U));
    r.write("V.csv", format_csv(f.V));
    trace = f.objective_trace;
  } else {
    const RobustModel m = robust_fit(x, cfg);
    r.write("U.csv", format_csv(m.U));
    r.write("V.csv", format_csv(m.V));
    r.write("E.csv", format_csv(m.E()));
    trace = m.objective_trace;
  }
  r.write("trace.csv", trace_csv(trace));
  r.info("iterations", std::to_string(trace.size()));
  r.info("final_objective", format_double(trace.back()));
  r.out() << method << ": " << trace.size() << " iterations, objective "
          << format_double(trace.back()) << "\n";
}

inline std::string pr_csv(const PrecisionRecall& pr) {
  return "precision,recall,hits,detected,truth,precision_vacuous,recall_vacuous\n" +
         format_double(pr.precision) + "," + format_double(pr.recall) + "," +
         std::to_string(pr.hits) + "," + std::to_string(pr.detected) + "," +
         std::to_string(pr.truth) + "," + (pr.precision_vacuous ? "1" : "0") + "," +
         (pr.recall_vacuous ? "1" : "0") + "\n";
}

inline void cmd_detect(Run& r) {
  const Options& o = r.opts();
  FitConfig cfg = resolve_fit(o);
  const bool normalize = o.flag("normalize-lambda");
  const bool explicit_threshold = o.has("threshold");
  const double threshold_opt = explicit_threshold ? o.real("threshold", true) : 0.0;
  if (!(threshold_opt >= 0.0)) throw UsageError("--threshold must be >= 0");

  const DenseMatrix x = read_csv(o.str("input"));
  DenseMatrix truth;
  const bool have_truth = o.has("truth");
  if (have_truth) {
    truth = read_csv(o.str("truth"));
    require_same_shape(x, truth, "detect: input vs truth");
  }
  double scale = 1.0;
  if (normalize && max_entry(x) > 0.0) {
    scale = kReferencePeak / max_entry(x);
    scale *= scale;
  }
  cfg.lambda *= scale;
  const double threshold = explicit_threshold ? threshold_opt : detection_threshold(x, cfg);

  const RobustModel m = robust_fit(x, cfg);
  const DenseMatrix mask = detect_outliers(m.Ep, m.En, threshold);
  r.write("mask.csv", format_csv(mask));
  r.info("lambda_scale", format_double(scale));
  r.info("lambda_effective", format_double(cfg.lambda));
  r.info("threshold_effective", format_double(threshold));
  r.info("iterations", std::to_string(m.iterations_run));
  r.out() << "detected " << count_nonzero(mask) << " of " << x.size() << " entries\n";
  if (have_truth) {
    const PrecisionRecall pr = precision_recall(mask, truth);
    r.write("report.csv", pr_csv(pr));
    r.out() << "precision=" << format_double(pr.precision)
            << (pr.precision_vacuous ? " (vacuous)" : "")
            << " recall=" << format_double(pr.recall) << (pr.recall_vacuous ? " (vacuous)" : "")
            << "\n";
  }
}

inline void cmd_denoise(Run& r) {
  const Options& o = r.opts();
  const std::string method = o.str("method");
  require_choice("method", method, {"nmf", "robust", "robust+wnmf"});
  const FitConfig cfg = resolve_fit(o);
  const std::size_t patch = o.count("patch-size");
  if (patch == 0) throw UsageError("--patch-size must be >= 1");
  const double density = o.real("density");
  if (!(density >= 0.0 && density <= 1.0)) throw UsageError("--density must be in [0, 1]");

  const GrayImage original = read_pgm(o.str("input"));
  GrayImage noisy = original;
  if (density > 0.0) {
    CorruptionSpec cs;
    cs.mode = CorruptionMode::kDensity;
    cs.density = density;
    cs.value = kReferencePeak;
    cs.seed = derive_seed(cfg.seed.value, 1);
    noisy = image_from_matrix(inject_corruption(image_to_matrix(original), cs).noisy);
    r.write("noisy.pgm", format_pgm(noisy));
  }
  const PatchGrid grid = extract_patches(noisy, patch);
  const DenseMatrix& x = grid.columns;
  DenseMatrix recon;
  if (method == "nmf") {
    const Factorization f = nmf_fit(x, cfg);
    recon = matmul(f.U, f.V);
  } else {
    const RobustModel m = robust_fit(x, cfg);
    if (method == "robust") {
      recon = matmul(m.U, m.V);
    } else {
      const WeightMask w = mask_from_noise(m.Ep, m.En, detection_threshold(x, cfg));
      const Factorization start{m.U, m.V, {}, {}};
      const Factorization f = wnmf_fit(x, w, cfg, &start);
      recon = matmul(f.U, f.V);
    }
  }
  const GrayImage denoised = reassemble(grid, recon);
  r.write("denoised.pgm", format_pgm(denoised));
  const double mse =
      frobenius_sq(image_to_matrix(denoised) - image_to_matrix(original)) /
      static_cast<double>(original.pixels.size());
  r.write("report.csv", "method,mse_vs_input\n" + method + "," + format_double(mse) + "\n");
  r.info("mse_vs_input", format_double(mse));
  r.out() << method << ": mse vs input " << format_double(mse) << "\n";
}

// Bench config keys and their defaults.
inline const KeyValues& bench_defaults() {
  static const KeyValues d = [] {
    const Scenario sc;
    KeyValues kv;
    kv["m"] = std::to_string(sc.data.m);
    kv["n"] = std::to_string(sc.data.n);
    kv["rank"] = std::to_string(sc.data.rank);
    kv["peak"] = format_double(sc.data.peak);
    kv["corruption_count"] = std::to_string(sc.corruption_count);
    kv["corruption_factor"] = format_double(sc.corruption_factor);
    kv["normalize_lambda"] = "true";
    kv["k"] = std::to_string(sc.fit.k);
    kv["lambda"] = format_double(sc.fit.lambda);
    kv["max_iters"] = std::to_string(sc.fit.max_iters);
    kv["rel_tol"] = format_double(sc.fit.rel_tol);
    kv["detect_threshold"] = format_double(sc.fit.detect_threshold);
    kv["noise_init"] = format_double(sc.fit.noise_init);
    kv["sweep_param"] = "lambda";
    kv["sweep_values"] = "0.02,0.04,0.08,0.16";
    kv["run_seeds"] = "0,1,2,3,4,5,6,7,8,9";
    return kv;
  }();
  return d;
}

struct BenchSetup {
  Scenario scenario;
  SweepSpec sweep;
};

inline BenchSetup resolve_bench(const KeyValues& cfg) {
  for (const auto& [k, v] : cfg) {
    if (!bench_defaults().count(k)) throw UsageError("config: unknown key '" + k + "'");
  }
  auto get = [&](const std::string& k) -> const std::string& { return cfg.at(k); };
  try {
    BenchSetup b;
    Scenario& sc = b.scenario;
    sc.data.m = kv_u64("m", get("m"));
    sc.data.n = kv_u64("n", get("n"));
    sc.data.rank = kv_u64("rank", get("rank"));
    sc.data.peak = kv_double("peak", get("peak"));
    sc.corruption_count = kv_u64("corruption_count", get("corruption_count"));
    sc.corruption_factor = kv_double("corruption_factor", get("corruption_factor"));
    sc.normalize_lambda = kv_bool("normalize_lambda", get("normalize_lambda"));
    sc.fit.k = kv_u64("k", get("k"));
    sc.fit.lambda = kv_double("lambda", get("lambda"));
    sc.fit.max_iters = kv_u64("max_iters", get("max_iters"));
    sc.fit.rel_tol = kv_double("rel_tol", get("rel_tol"));
    sc.fit.detect_threshold = kv_double("detect_threshold", get("detect_threshold"));
    sc.fit.noise_init = kv_double("noise_init", get("noise_init"));
    validate(sc.fit);
    const std::string& param = get("sweep_param");
    if (param == "lambda") {
      b.sweep.param = SweepParam::kLambda;
    } else if (param == "n_samples") {
      b.sweep.param = SweepParam::kNSamples;
    } else {
      throw UsageError("config: sweep_param must be lambda or n_samples");
    }
    b.sweep.values = kv_double_list("sweep_values", get("sweep_values"));
    b.sweep.run_seeds = kv_u64_list("run_seeds", get("run_seeds"));
    if (b.sweep.values.empty() || b.sweep.run_seeds.empty()) {
      throw UsageError("config: sweep_values and run_seeds must be non-empty");
    }
    return b;
  } catch (const FormatError& e) {
    throw UsageError(e.what());
  } catch (const DomainError& e) {
    throw UsageError(std::string("config: ") + e.what());
  }
}

inline void cmd_bench(Run& r, const KeyValues& config) {
  const Options& o = r.opts();
  const std::string suite = o.str("suite");
  require_choice("suite", suite, {"detect-sweep", "msre"});
  const BenchSetup b = resolve_bench(config);
  std::vector<std::string> failures;
  if (suite == "detect-sweep") {
    const auto rows = run_detection_sweep(b.scenario, b.sweep);
    r.write("sweep.csv", format_sweep_csv(rows));
    r.write("summary.csv", format_summary_csv(b.sweep.param, summarize_sweep(rows)));
    for (const auto& row : rows) {
      if (!row.error.empty()) failures.push_back(row.error);
    }
    r.out() << "detect-sweep: " << rows.size() << " runs\n";
  } else {
    std::vector<MsreReport> all;
    std::map<Method, std::vector<double>> by_method;
    for (std::uint64_t seed : b.sweep.run_seeds) {
      for (const auto& rep : run_msre_comparison(b.scenario, seed)) {
        all.push_back(rep);
        by_method[rep.method].push_back(rep.msre);
      }
    }
    r.write("msre.csv", format_msre_csv(all));
    std::string summary = "method,median_msre\n";
    for (const auto& [m, v] : by_method) {
      summary += std::string(method_name(m)) + "," + format_double(median(v)) + "\n";
      r.out() << method_name(m) << ": median msre " << format_double(median(v)) << "\n";
    }
    r.write("msre_summary.csv", summary);
    const ScenarioData sd = materialize(b.scenario, b.sweep.run_seeds.front());
    r.info("lambda_scale_first_seed", format_double(sd.lambda_scale));
    r.info("lambda_effective_first_seed", format_double(sd.fit.lambda));
  }
  r.info("lambda_normalization", b.scenario.normalize_lambda
                                     ? "lambda * (255 / max(noisy X))^2 per run"
                                     : "none");
  r.info("failed_points", std::to_string(failures.size()));
}

inline void cmd_generate(Run& r) {
  const Options& o = r.opts();
  Scenario sc;
  sc.data.m = o.count("m");
  sc.data.n = o.count("n");
  sc.data.rank = o.count("rank");
  sc.corruption_count = o.count("corruption-count");
  sc.corruption_factor = o.real("corruption-factor");
  if (sc.data.m == 0 || sc.data.n == 0 || sc.data.rank == 0) {
    throw UsageError("--m, --n and --rank must be >= 1");
  }
  const ScenarioData sd = materialize(sc, o.count("seed"));
  r.write("clean.csv", format_csv(sd.clean));
  r.write("noisy.csv", format_csv(sd.corrupted.noisy));
  r.write("truth.csv", format_csv(sd.corrupted.truth));
  r.out() << "generated " << sd.clean.rows() << "x" << sd.clean.cols() << " with "
          << count_nonzero(sd.corrupted.truth) << " corrupted entries\n";
}

// Paths in the manifest are absolute so a rerun works from any directory.
inline void absolutize(KeyValues& opts, const std::vector<std::string>& keys) {
  for (const auto& k : keys) {
    auto it = opts.find(k);
    if (it != opts.end() && !it->second.empty()) {
      it->second = std::filesystem::absolute(it->second).lexically_normal().string();
    }
  }
}

inline int execute(Invocation inv, std::ostream& out, std::ostream& err) {
  const auto start = std::chrono::steady_clock::now();
  try {
    const auto& specs = command_specs();
    const auto spec = specs.find(inv.command);
    if (spec == specs.end()) throw UsageError("unknown command '" + inv.command + "'");
    for (const auto& [k, v] : inv.opts) {
      bool known = false;
      for (const auto& s : spec->second) known = known || s.name == k;
      if (!known) throw UsageError("unknown option --" + k + " for " + inv.command);
    }
    for (const auto& s : spec->second) {
      if (!inv.opts.count(s.name)) inv.opts[s.name] = s.fallback;
      if (s.required && inv.opts[s.name].empty()) throw UsageError("--" + s.name + " is required");
    }
    absolutize(inv.opts, {"input", "truth", "config", "out-dir"});

    if (inv.command == "bench") {
      // Config file, then flag overrides; the merged result is what runs and
      // what the manifest records.
      KeyValues merged = bench_defaults();
      KeyValues& given = inv.config;
      if (given.empty() && !inv.opts["config"].empty()) {
        try {
          given = read_kv(inv.opts["config"]);
        } catch (const std::exception& e) {
          throw UsageError(e.what());
        }
      }
      for (const auto& [k, v] : given) merged[k] = v;
      if (!inv.opts["seeds"].empty()) merged["run_seeds"] = inv.opts["seeds"];
      if (!inv.opts["max-iters"].empty()) merged["max_iters"] = inv.opts["max-iters"];
      inv.config = merged;
    }

    Run run(inv, out);
    if (inv.command == "factorize") cmd_factorize(run);
    else if (inv.command == "detect") cmd_detect(run);
    else if (inv.command == "denoise") cmd_denoise(run);
    else if (inv.command == "bench") cmd_bench(run, inv.config);
    else cmd_generate(run);

    const std::chrono::duration<double> took = std::chrono::steady_clock::now() - start;
    run.write_manifest(took.count());
    return kOk;
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kRuntime;
  }
}

inline Invocation invocation_from_manifest(const std::string& path) {
  KeyValues kv;
  try {
    kv = read_kv(path);
  } catch (const std::exception& e) {
    throw UsageError(std::string("manifest: ") + e.what());
  }
  Invocation inv;
  auto cmd = kv.find("command");
  if (cmd == kv.end()) throw UsageError("manifest: no command");
  inv.command = cmd->second;
  for (const auto& [k, v] : kv) {
    if (k.rfind("opt.", 0) == 0) inv.opts[k.substr(4)] = v;
    if (k.rfind("config.", 0) == 0) inv.config[k.substr(7)] = v;
  }
  return inv;
}

inline int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Robust NMF with L1-regularized outlier estimation"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kToolVersion);

  std::map<std::string, KeyValues> given;
  std::map<std::string, CLI::App*> subs;
  const std::map<std::string, std::string> about{
      {"factorize", "fit NMF or RobustNMF to a CSV matrix"},
      {"detect", "locate outliers in a CSV matrix"},
      {"denoise", "patch-based denoising of a PGM image"},
      {"bench", "run a benchmark suite"},
      {"generate", "write a synthetic corrupted low-rank data set"}};
  for (const auto& [name, specs] : command_specs()) {
    CLI::App* sub = app.add_subcommand(name, about.at(name));
    subs[name] = sub;
    for (const auto& s : specs) {
      std::string desc = s.help;
      if (!s.fallback.empty()) desc += " [" + s.fallback + "]";
      auto* opt = sub->add_option("--" + s.name, given[name][s.name], desc);
      if (s.required) opt->required();
    }
  }
  std::string manifest, rerun_out;
  CLI::App* rerun = app.add_subcommand("rerun", "replay a run from its manifest");
  rerun->add_option("--manifest", manifest, "manifest.txt of an earlier run")->required();
  rerun->add_option("--out-dir", rerun_out, "write outputs here instead");

  std::vector<const char*> argv{"rnmf"};
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForVersion&) {
    out << kToolVersion << "\n";
    return kOk;
  } catch (const CLI::ParseError& e) {
    std::string help;
    for (auto* s : app.get_subcommands()) help = s->help();
    err << "usage error: " << e.what() << "\n" << (help.empty() ? app.help() : help);
    return kUsage;
  }

  if (rerun->parsed()) {
    try {
      Invocation inv = invocation_from_manifest(manifest);
      if (!rerun_out.empty()) inv.opts["out-dir"] = rerun_out;
      return execute(std::move(inv), out, err);
    } catch (const UsageError& e) {
      err << "usage error: " << e.what() << "\n";
      return kUsage;
    }
  }
  for (const auto& [name, sub] : subs) {
    if (!sub->parsed()) continue;
    Invocation inv{name, {}, {}};
    for (const auto& s : command_specs().at(name)) {
      if (sub->count("--" + s.name)) inv.opts[s.name] = given[name][s.name];
    }
    return execute(std::move(inv), out, err);
  }
  return kUsage;
}

}  // namespace rnmf::cli
