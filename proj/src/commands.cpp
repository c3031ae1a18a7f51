#include "assocmem/commands.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <iomanip>
#include <sstream>
#include <thread>

#include "assocmem/csv.hpp"
#include "assocmem/errors.hpp"
#include "assocmem/experiments.hpp"
#include "assocmem/hebbian.hpp"
#include "assocmem/rng.hpp"
#include "assocmem/spectral.hpp"
#include "assocmem/theory.hpp"

#ifndef ASSOCMEM_VERSION
#define ASSOCMEM_VERSION "unknown"
#endif

namespace assocmem {

namespace fs = std::filesystem;

const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names = {"sweep", "theory", "spectrum", "hebbian",
                                                 "hist",  "fss",    "train"};
  return names;
}

std::string_view command_summary(std::string_view command) {
  if (command == "sweep") return "accuracy over an (alpha, d, kappa, mode, method) grid plus thresholds";
  if (command == "theory") return "alpha_c table, q* minimisation, G bounds and capacity extrapolation";
  if (command == "spectrum") return "singular values of a trained model against the capacity law";
  if (command == "hebbian") return "Hebbian score moments and the success heuristic";
  if (command == "hist") return "target and non-target score pools at unit non-target variance";
  if (command == "fss") return "finite-size fit of log(alpha_c - 1/2) against log log p";
  if (command == "train") return "train one model and record its trajectory and weights";
  return "";
}

std::string_view code_version() { return ASSOCMEM_VERSION; }

int resolve_threads(const Config& config) {
  const int requested = config.get_int("threads");
  if (requested < 0) throw ConfigError("threads: must be >= 0");
  if (requested > 0) return requested;
  return std::max(1u, std::thread::hardware_concurrency());
}

namespace {

std::ostream& log_of(const CommandContext& ctx) {
  static std::ostringstream sink;
  if (ctx.log) return *ctx.log;
  sink.str({});
  return sink;
}

void ensure_out_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw IoError("cannot create output directory " + dir.string());
}

void write_manifest(const CommandContext& ctx, std::string_view command,
                    std::vector<std::string> outputs, nlohmann::json extra = nlohmann::json::object()) {
  std::sort(outputs.begin(), outputs.end());
  nlohmann::json manifest = {
      {"command", std::string(command)},
      {"code_version", std::string(code_version())},
      {"config", ctx.config.to_json(sections_for_command(command))},
      {"outputs", outputs},
  };
  if (!extra.empty()) manifest["details"] = std::move(extra);
  write_text_file(ctx.out_dir / "manifest.json", manifest.dump(2) + "\n");
}

std::uint64_t fnv1a(std::string_view text) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

Mode mode_key(const Config& config, const std::string& key) {
  try {
    return parse_mode(config.get(key));
  } catch (const std::invalid_argument& e) {
    throw ConfigError(key + ": " + e.what());
  }
}

double require_kappa(const Config& config, const std::string& key) {
  const double kappa = config.get_double(key);
  if (!(kappa > 0.0 && kappa <= 1.0)) throw ConfigError(key + ": must lie in (0, 1]");
  return kappa;
}

int require_dim(const Config& config, const std::string& key) {
  const int d = config.get_int(key);
  if (d < 2) throw ConfigError(key + ": must be >= 2");
  return d;
}

double require_alpha(const Config& config, const std::string& key) {
  const double alpha = config.get_double(key);
  if (!(alpha > 0.0)) throw ConfigError(key + ": must be > 0");
  return alpha;
}

struct Moments {
  double mean = 0.0;
  double std = 0.0;
};

Moments moments(const std::vector<double>& v) {
  Moments m;
  if (v.empty()) return m;
  for (double x : v) m.mean += x;
  m.mean /= static_cast<double>(v.size());
  double var = 0.0;
  for (double x : v) var += (x - m.mean) * (x - m.mean);
  m.std = std::sqrt(var / static_cast<double>(v.size()));
  return m;
}

void write_histogram_rows(CsvWriter& csv, const std::string& label, const Histogram& h) {
  for (std::size_t i = 0; i < h.counts.size(); ++i) {
    csv.row({label, format_double(h.edges[i]), format_double(h.edges[i + 1]), format_double(h.density[i]),
             std::to_string(h.counts[i])});
  }
}

}  // namespace

// ---------------------------------------------------------------------------

void cmd_sweep(const CommandContext& ctx) {
  SweepSpec spec = sweep_spec_from(ctx.config);
  spec.threads = resolve_threads(ctx.config);
  ensure_out_dir(ctx.out_dir);

  // The journal is keyed by everything that affects results, not by threads.
  Config keyed = ctx.config;
  keyed.set("threads", "0");
  std::ostringstream name;
  name << "journal-" << std::hex << std::setw(16) << std::setfill('0')
       << fnv1a(keyed.to_text(sections_for_command("sweep"))) << ".csv";

  std::ostream& log = log_of(ctx);
  SweepOptions options;
  options.journal = ctx.out_dir / name.str();
  options.on_record = [&log](const SweepRecord& r) {
    log << to_string(r.mode) << ' ' << r.method << " d=" << r.d << " kappa=" << r.kappa
        << " alpha=" << r.alpha << " p=" << r.p << " acc=" << r.accuracy << " steps=" << r.steps_used
        << '\n'
        << std::flush;
  };
  const auto records = run_sweep(spec, options);
  write_sweep_csv(ctx.out_dir / "sweep.csv", records);
  const auto thresholds = thresholds_by_group(records);
  write_thresholds_csv(ctx.out_dir / "thresholds.csv", thresholds);
  for (const auto& t : thresholds) {
    if (!t.in_range()) {
      log << "warning: " << to_string(t.mode) << ' ' << t.method << " d=" << t.d << " kappa=" << t.kappa
          << (t.all_satisfied ? " never violated" : " violated at the first alpha")
          << "; threshold outside the swept range\n";
    }
  }
  write_manifest(ctx, "sweep", {"sweep.csv", "thresholds.csv"},
                 {{"journal", name.str()}, {"cells", records.size()}});
}

void cmd_theory(const CommandContext& ctx) {
  const Config& c = ctx.config;
  const auto kappas = c.get_double_list("theory.kappas");
  const auto alphas = c.get_double_list("theory.alphas");
  const int p = c.get_int("theory.p");
  const int n_mc = c.get_int("theory.n_mc");
  const std::uint64_t seed = c.get_u64("master_seed");
  MinimizeOptions minimize;
  minimize.prescan_points = c.get_int("theory.prescan_points");
  minimize.tolerance = c.get_double("theory.tolerance");
  const auto bounds_t = c.get_double_list("theory.bounds_t");
  const int bounds_k = c.get_int("theory.bounds_k");
  const bool extrapolate = c.get_bool("theory.extrapolate");
  for (double k : kappas) {
    if (!(k > 0.0 && k <= 1.0)) throw ConfigError("theory.kappas: values must lie in (0, 1]");
  }
  for (double a : alphas) {
    if (!(a >= 0.0)) throw ConfigError("theory.alphas: values must be >= 0");
  }
  for (double t : bounds_t) {
    if (!(t >= 0.0 && t <= 1.0 - kTFloor)) throw ConfigError("theory.bounds_t: values must lie in [0, 1 - 1e-4]");
  }
  if (p < 2) throw ConfigError("theory.p: must be >= 2");
  if (n_mc < 1) throw ConfigError("theory.n_mc: must be >= 1");
  if (minimize.prescan_points < 3) throw ConfigError("theory.prescan_points: must be >= 3");
  if (!(minimize.tolerance > 0.0)) throw ConfigError("theory.tolerance: must be > 0");
  if (bounds_k < 1) throw ConfigError("theory.bounds_k: must be >= 1");
  if (extrapolate && p < 100) throw ConfigError("theory.p: extrapolation needs p >= 100");
  ensure_out_dir(ctx.out_dir);
  std::ostream& log = log_of(ctx);
  std::vector<std::string> outputs;

  {
    CsvWriter csv(ctx.out_dir / "alpha_c.csv", {"kappa", "alpha_c", "lower_edge"});
    for (double k : kappas) {
      csv.row({format_double(k), format_double(alpha_c(k)), format_double(rho_c_lower_edge(k))});
    }
    outputs.push_back("alpha_c.csv");
  }

  const EnergeticSampler sampler(p, n_mc, seed);
  if (!alphas.empty()) {
    CsvWriter csv(ctx.out_dir / "q_star.csv", {"alpha", "p", "n_mc", "q_star", "phi", "energetic",
                                               "mc_stderr", "at_boundary", "q_floor"});
    for (double a : alphas) {
      const FreeEntropyEval e = minimize_q(a, sampler, minimize);
      log << "alpha=" << a << " q*=" << e.q_star << (e.at_boundary ? " (boundary)" : "") << '\n' << std::flush;
      csv.row({format_double(a), std::to_string(p), std::to_string(n_mc), format_double(e.q_star),
               format_double(e.phi_value), format_double(e.energetic_term), format_double(e.mc_stderr),
               e.at_boundary ? "1" : "0", format_double(e.q_floor)});
    }
    outputs.push_back("q_star.csv");
  }

  if (!bounds_t.empty()) {
    CsvWriter csv(ctx.out_dir / "g_bounds.csv", {"t", "lower", "upper", "g_hat", "g_stderr", "k"});
    for (double t : bounds_t) {
      const GBounds b = g_bounds(t, bounds_k);
      const McEstimate g = sampler.G(t);
      csv.row({format_double(t), format_double(b.lower), format_double(b.upper), format_double(g.estimate),
               format_double(g.std_error), std::to_string(bounds_k)});
    }
    outputs.push_back("g_bounds.csv");
  }

  nlohmann::json details = nlohmann::json::object();
  if (extrapolate) {
    const CapacityEstimate cap = capacity_extrapolation(sampler);
    log << "capacity extrapolation: alpha_c_hat=" << cap.alpha_c_hat << (cap.monotone ? "" : " (unreliable)")
        << '\n';
    CsvWriter csv(ctx.out_dir / "capacity.csv", {"q", "value"});
    for (std::size_t i = 0; i < cap.q.size(); ++i) csv.row({format_double(cap.q[i]), format_double(cap.values[i])});
    csv.row({"1", format_double(cap.limit)});
    CsvWriter summary(ctx.out_dir / "capacity_summary.csv", {"p", "n_mc", "limit", "alpha_c_hat", "monotone"});
    summary.row({std::to_string(p), std::to_string(n_mc), format_double(cap.limit), format_double(cap.alpha_c_hat),
                 cap.monotone ? "1" : "0"});
    outputs.push_back("capacity.csv");
    outputs.push_back("capacity_summary.csv");
    details["capacity"] = cap.to_json();
  }
  details["phi_convention"] = "phi(q) = 1/2 log(1-q) + q/(2(1-q)) + alpha G(q), additive constants dropped";
  write_manifest(ctx, "theory", outputs, details);
}

void cmd_spectrum(const CommandContext& ctx) {
  const Config& c = ctx.config;
  const std::string weights_path = c.get("spectrum.weights");
  const int grid_points = c.get_int("spectrum.grid_points");
  if (grid_points < 2) throw ConfigError("spectrum.grid_points: must be >= 2");
  SpectrumNormalization normalization;
  const std::string& norm = c.get("spectrum.normalization");
  if (norm == "top2") {
    normalization = SpectrumNormalization::TopEqualsTwo;
  } else if (norm == "raw") {
    normalization = SpectrumNormalization::Raw;
  } else {
    throw ConfigError("spectrum.normalization: expected top2 or raw, got '" + norm + "'");
  }
  const TrainConfig train_config = train_config_from(c);
  const double kappa_cfg = require_kappa(c, "spectrum.kappa");
  const int d = require_dim(c, "spectrum.d");
  const double alpha = require_alpha(c, "spectrum.alpha");
  const Mode mode = mode_key(c, "spectrum.mode");
  ensure_out_dir(ctx.out_dir);
  std::ostream& log = log_of(ctx);

  std::vector<std::string> outputs;
  WeightModel model = WeightModel::full_rank(Eigen::MatrixXd::Zero(1, 1));
  double accuracy_value = std::nan("");
  int p = 0;
  int steps = 0;
  double kappa = kappa_cfg;
  if (!weights_path.empty()) {
    model = read_weights(weights_path);
    kappa = model.is_factored() ? static_cast<double>(model.m()) / model.d() : 1.0;
  } else {
    p = p_from_alpha(alpha, d);
    const ProblemInstance instance = sample_instance(d, p, mode, instance_seed(c.get_u64("master_seed"), d, 0, 0));
    WeightModel init = init_model(d, kappa, derive_seed(instance.master_seed(), StreamRole::Init, 1));
    log << "training d=" << d << " p=" << p << " kappa=" << kappa << '\n' << std::flush;
    TrainReport report = train(instance, std::move(init), train_config);
    accuracy_value = report.final_accuracy();
    steps = report.steps_used;
    model = std::move(report.model);
    write_weights(ctx.out_dir / "weights.bin", model);
    outputs.push_back("weights.bin");
  }

  const Spectrum spectrum = svd_spectrum(model, normalization);
  {
    CsvWriter csv(ctx.out_dir / "spectrum.csv", {"index", "sigma"});
    for (std::size_t i = 0; i < spectrum.values.size(); ++i) {
      csv.row({std::to_string(i), format_double(spectrum.values[i])});
    }
    outputs.push_back("spectrum.csv");
  }
  const std::vector<double> nonzero = spectrum.nonzero_ascending();
  if (nonzero.size() >= 2) {
    CsvWriter csv(ctx.out_dir / "spectrum_histogram.csv", {"pool", "left", "right", "density", "count"});
    write_histogram_rows(csv, "nonzero", histogram_fd(nonzero));
    outputs.push_back("spectrum_histogram.csv");
  }
  // The capacity law lives on the top-equals-two scale.
  double ks = std::nan("");
  {
    const DensityCurve curve = rho_c_curve(kappa, linear_grid(0.0, 2.0, grid_points));
    if (normalization == SpectrumNormalization::TopEqualsTwo && !nonzero.empty()) ks = ks_distance(spectrum, curve);
    CsvWriter csv(ctx.out_dir / "rho_c_curve.csv", {"sigma", "density", "point_mass_at_zero"});
    for (std::size_t i = 0; i < curve.grid.size(); ++i) {
      csv.row({format_double(curve.grid[i]), format_double(curve.density[i]),
               format_double(curve.point_mass_at_zero)});
    }
    outputs.push_back("rho_c_curve.csv");
  }
  {
    const auto [lo, hi] = init_support_sq(kappa);
    (void)lo;
    const DensityCurve curve = init_density(kappa, linear_grid(0.0, std::sqrt(hi), grid_points));
    CsvWriter csv(ctx.out_dir / "init_curve.csv", {"sigma", "density", "point_mass_at_zero"});
    for (std::size_t i = 0; i < curve.grid.size(); ++i) {
      csv.row({format_double(curve.grid[i]), format_double(curve.density[i]),
               format_double(curve.point_mass_at_zero)});
    }
    outputs.push_back("init_curve.csv");
  }
  {
    CsvWriter csv(ctx.out_dir / "spectrum_summary.csv",
                  {"d", "m", "p", "alpha", "kappa", "accuracy", "steps_used", "normalization", "scale",
                   "zero_fraction", "rho_c_lower_edge", "ks_rho_c"});
    csv.row({std::to_string(model.d()), std::to_string(model.m()), std::to_string(p),
             weights_path.empty() ? format_double(alpha) : "nan", format_double(kappa),
             format_double(accuracy_value), std::to_string(steps), std::string(to_string(normalization)),
             format_double(spectrum.scale), format_double(spectrum.zero_fraction),
             format_double(rho_c_lower_edge(kappa)), format_double(ks)});
    outputs.push_back("spectrum_summary.csv");
  }
  log << "KS distance to the capacity law: " << ks << '\n';
  write_manifest(ctx, "spectrum", outputs);
}

void cmd_hebbian(const CommandContext& ctx) {
  const Config& c = ctx.config;
  const int d = require_dim(c, "hebbian.d");
  const int p = c.get_int("hebbian.p");
  if (p < 2) throw ConfigError("hebbian.p: must be >= 2");
  const auto alphas = c.get_double_list("hebbian.heuristic_alphas");
  const int heuristic_p = c.get_int("hebbian.heuristic_p");
  const int n_mc = c.get_int("hebbian.n_mc");
  if (heuristic_p < 2) throw ConfigError("hebbian.heuristic_p: must be >= 2");
  if (n_mc < 1) throw ConfigError("hebbian.n_mc: must be >= 1");
  for (double a : alphas) {
    if (!(a >= 0.0)) throw ConfigError("hebbian.heuristic_alphas: values must be >= 0");
  }
  const std::uint64_t master = c.get_u64("master_seed");
  ensure_out_dir(ctx.out_dir);

  const ProblemInstance instance = sample_instance(d, p, Mode::OP, instance_seed(master, d, 0, 0));
  const HebbScoreStats stats = hebbian_score_stats(instance);
  const double acc = accuracy(hebbian_weights(instance), instance);
  {
    CsvWriter csv(ctx.out_dir / "hebbian_stats.csv",
                  {"d", "p", "alpha", "diag_mean", "diag_var", "offdiag_mean", "offdiag_var",
                   "offdiag_var_predicted", "offdiag_count", "accuracy"});
    csv.row({std::to_string(d), std::to_string(p), format_double(alpha_of(p, d)), format_double(stats.diag_mean),
             format_double(stats.diag_var), format_double(stats.offdiag_mean), format_double(stats.offdiag_var),
             format_double(static_cast<double>(p) / (static_cast<double>(d) * d)),
             std::to_string(stats.offdiag_count), format_double(acc)});
  }
  {
    CsvWriter csv(ctx.out_dir / "hebbian_heuristic.csv",
                  {"alpha", "p", "n_mc", "probability", "row_failure", "row_failure_stderr", "rate_inf"});
    const std::uint64_t heuristic_seed = derive_seed(master, StreamRole::MonteCarlo, 1);
    for (double a : alphas) {
      const HebbHeuristic h = hebb_heuristic_success(a, heuristic_p, n_mc, heuristic_seed);
      csv.row({format_double(a), std::to_string(heuristic_p), std::to_string(n_mc), format_double(h.probability),
               format_double(h.row_failure), format_double(h.row_failure_stderr),
               a > 0.0 ? format_double(rate_function_inf(a)) : "inf"});
    }
  }
  write_manifest(ctx, "hebbian", {"hebbian_stats.csv", "hebbian_heuristic.csv"});
}

void cmd_hist(const CommandContext& ctx) {
  const Config& c = ctx.config;
  const int d = require_dim(c, "hist.d");
  const double alpha = require_alpha(c, "hist.alpha");
  const double kappa = require_kappa(c, "hist.kappa");
  const Mode mode = mode_key(c, "hist.mode");
  const Method method = [&] {
    try {
      return parse_method(c.get("hist.method"));
    } catch (const ConfigError& e) {
      throw ConfigError(std::string("hist.method: ") + e.what());
    }
  }();
  if (method == Method::Hebbian && mode != Mode::OP) throw ConfigError("hist.mode: the hebbian method needs OP");
  const TrainConfig train_config = train_config_from(c);
  ensure_out_dir(ctx.out_dir);

  const int p = p_from_alpha(alpha, d);
  const ProblemInstance instance = sample_instance(d, p, mode, instance_seed(c.get_u64("master_seed"), d, 0, 0));
  WeightModel model = WeightModel::full_rank(Eigen::MatrixXd::Zero(1, 1));
  int steps = 0;
  if (method == Method::Hebbian) {
    model = hebbian_weights(instance);
  } else {
    TrainReport report = train(instance, init_model(d, kappa, derive_seed(instance.master_seed(), StreamRole::Init, 1)),
                               train_config);
    steps = report.steps_used;
    model = std::move(report.model);
  }
  const double acc = accuracy(model, instance);
  const ScoreHistograms h = score_histograms(model, instance);
  {
    CsvWriter csv(ctx.out_dir / "scores.csv", {"pool", "value"});
    for (double v : h.target) csv.row({"target", format_double(v)});
    for (double v : h.nontarget) csv.row({"nontarget", format_double(v)});
    for (double v : h.max_nontarget) csv.row({"max_nontarget", format_double(v)});
  }
  {
    CsvWriter csv(ctx.out_dir / "score_histogram.csv", {"pool", "left", "right", "density", "count"});
    write_histogram_rows(csv, "target", histogram_fd(h.target));
    write_histogram_rows(csv, "nontarget", histogram_fd(h.nontarget));
    write_histogram_rows(csv, "max_nontarget", histogram_fd(h.max_nontarget));
  }
  {
    const Moments t = moments(h.target), n = moments(h.nontarget);
    CsvWriter csv(ctx.out_dir / "hist_summary.csv",
                  {"d", "p", "alpha", "kappa", "mode", "method", "accuracy", "steps_used", "scale", "target_mean",
                   "target_std", "nontarget_mean", "nontarget_std"});
    csv.row({std::to_string(d), std::to_string(p), format_double(alpha), format_double(kappa),
             std::string(to_string(mode)), std::string(to_string(method)), format_double(acc),
             std::to_string(steps), format_double(h.scale), format_double(t.mean), format_double(t.std),
             format_double(n.mean), format_double(n.std)});
  }
  write_manifest(ctx, "hist", {"scores.csv", "score_histogram.csv", "hist_summary.csv"});
}

void cmd_fss(const CommandContext& ctx) {
  const Config& c = ctx.config;
  const std::string input = c.get("fss.input");
  struct Series {
    std::string mode, method;
    double kappa = 1.0;
    std::vector<FiniteSizePoint> points;
    std::vector<FiniteSizePoint> out_of_range;
  };
  std::vector<Series> series;
  if (input.empty()) {
    const double cc = c.get_double("fss.synthetic_c");
    const double power = c.get_double("fss.synthetic_power");
    const auto ps = c.get_double_list("fss.synthetic_p");
    Series s{"synthetic", "synthetic", 1.0, {}, {}};
    for (double pv : ps) {
      if (!(pv >= 3.0) || pv != std::floor(pv)) throw ConfigError("fss.synthetic_p: values must be integers >= 3");
      s.points.push_back({0, static_cast<int>(pv), 0.5 + cc / std::pow(std::log(pv), power)});
    }
    series.push_back(std::move(s));
  } else {
    const auto thresholds = thresholds_by_group(read_sweep_csv(input));
    for (const auto& t : thresholds) {
      auto it = std::find_if(series.begin(), series.end(), [&](const Series& s) {
        return s.mode == to_string(t.mode) && s.method == t.method && s.kappa == t.kappa;
      });
      if (it == series.end()) {
        series.push_back({std::string(to_string(t.mode)), t.method, t.kappa, {}, {}});
        it = std::prev(series.end());
      }
      (t.in_range() ? it->points : it->out_of_range).push_back({t.d, t.p_at_threshold, t.alpha_c_hat});
    }
  }
  ensure_out_dir(ctx.out_dir);
  std::ostream& log = log_of(ctx);
  CsvWriter points_csv(ctx.out_dir / "fss_points.csv",
                       {"mode", "method", "kappa", "d", "p", "alpha_c_hat", "log_log_p", "status"});
  CsvWriter fit_csv(ctx.out_dir / "fss_fit.csv",
                    {"mode", "method", "kappa", "slope", "intercept", "r_squared", "n_used", "n_excluded"});
  for (const auto& s : series) {
    const std::vector<std::string> prefix = {s.mode, s.method, format_double(s.kappa)};
    auto point_row = [&](const FiniteSizePoint& pt, const std::string& status) {
      auto row = prefix;
      row.insert(row.end(), {std::to_string(pt.d), std::to_string(pt.p), format_double(pt.alpha_c_hat),
                             format_double(std::log(std::log(static_cast<double>(pt.p)))), status});
      points_csv.row(row);
    };
    for (const auto& pt : s.out_of_range) point_row(pt, "out_of_range");
    FiniteSizeFit fit;
    bool fitted = false;
    try {
      fit = finite_size_fit(s.points);
      fitted = true;
    } catch (const std::invalid_argument& e) {
      log << "warning: " << s.mode << ' ' << s.method << " kappa=" << s.kappa << ": " << e.what() << '\n';
      for (const auto& pt : s.points) point_row(pt, pt.alpha_c_hat > 0.5 ? "used" : "below_half");
    }
    if (!fitted) continue;
    for (const auto& pt : fit.used) point_row(pt, "used");
    for (const auto& pt : fit.excluded) {
      log << "warning: excluded threshold " << pt.alpha_c_hat << " <= 1/2 at p=" << pt.p << '\n';
      point_row(pt, "below_half");
    }
    auto row = prefix;
    row.insert(row.end(), {format_double(fit.slope), format_double(fit.intercept), format_double(fit.r_squared),
                           std::to_string(fit.used.size()), std::to_string(fit.excluded.size() + s.out_of_range.size())});
    fit_csv.row(row);
    log << s.mode << ' ' << s.method << " slope=" << fit.slope << '\n';
  }
  points_csv.flush();
  fit_csv.flush();
  write_manifest(ctx, "fss", {"fss_points.csv", "fss_fit.csv"});
}

void cmd_train(const CommandContext& ctx) {
  const Config& c = ctx.config;
  const int d = require_dim(c, "problem.d");
  const double alpha = require_alpha(c, "problem.alpha");
  const double kappa = require_kappa(c, "problem.kappa");
  const Mode mode = mode_key(c, "problem.mode");
  const int replicate = c.get_int("problem.seed_index");
  if (replicate < 0) throw ConfigError("problem.seed_index: must be >= 0");
  const TrainConfig train_config = train_config_from(c);
  ensure_out_dir(ctx.out_dir);

  const int p = p_from_alpha(alpha, d);
  const ProblemInstance instance =
      sample_instance(d, p, mode, instance_seed(c.get_u64("master_seed"), d, 0, replicate));
  const TrainReport report =
      train(instance, init_model(d, kappa, derive_seed(instance.master_seed(), StreamRole::Init, 1)), train_config);
  {
    CsvWriter csv(ctx.out_dir / "trajectory.csv", {"step", "loss", "accuracy", "lr"});
    for (std::size_t t = 0; t < report.losses.size(); ++t) {
      const int step = static_cast<int>(t);
      csv.row({std::to_string(step), format_double(report.losses[t]), format_double(report.accuracies[t]),
               step < report.steps_used ? format_double(scheduled_lr(train_config, step)) : "nan"});
    }
  }
  {
    CsvWriter csv(ctx.out_dir / "train_summary.csv", {"mode", "d", "m", "p", "alpha", "kappa", "seed", "accuracy",
                                                       "final_loss", "steps_used", "stop_reason"});
    csv.row({std::string(to_string(mode)), std::to_string(d), std::to_string(report.model.m()), std::to_string(p),
             format_double(alpha), format_double(kappa), std::to_string(instance.master_seed()),
             format_double(report.final_accuracy()), format_double(report.final_loss()),
             std::to_string(report.steps_used), std::string(to_string(report.stop_reason))});
  }
  write_weights(ctx.out_dir / "weights.bin", report.model);
  log_of(ctx) << "accuracy " << report.final_accuracy() << " after " << report.steps_used << " steps\n";
  write_manifest(ctx, "train", {"trajectory.csv", "train_summary.csv", "weights.bin"},
                 {{"instance", instance.descriptor()}});
}

int run_command(std::string_view command, const CommandContext& ctx, std::ostream& err) {
  try {
    if (command == "sweep") {
      cmd_sweep(ctx);
    } else if (command == "theory") {
      cmd_theory(ctx);
    } else if (command == "spectrum") {
      cmd_spectrum(ctx);
    } else if (command == "hebbian") {
      cmd_hebbian(ctx);
    } else if (command == "hist") {
      cmd_hist(ctx);
    } else if (command == "fss") {
      cmd_fss(ctx);
    } else if (command == "train") {
      cmd_train(ctx);
    } else {
      throw ConfigError("unknown command '" + std::string(command) + "'");
    }
    return kExitOk;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const IoError& e) {
    err << "I/O error: " << e.what() << '\n';
    return kExitIo;
  } catch (const fs::filesystem_error& e) {
    err << "I/O error: " << e.what() << '\n';
    return kExitIo;
  } catch (const NumericError& e) {
    err << "numeric failure: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const std::invalid_argument& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
}

}  // namespace assocmem
