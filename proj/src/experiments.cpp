#include "assocmem/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <map>
#include <mutex>
#include <set>
#include <thread>

#include "assocmem/csv.hpp"
#include "assocmem/errors.hpp"
#include "assocmem/hebbian.hpp"
#include "assocmem/numerics.hpp"
#include "assocmem/rng.hpp"

namespace assocmem {

std::string_view to_string(Method method) {
  return method == Method::Trained ? "trained" : "hebbian";
}

Method parse_method(std::string_view text) {
  if (text == "trained") return Method::Trained;
  if (text == "hebbian") return Method::Hebbian;
  throw ConfigError("unknown method '" + std::string(text) + "' (expected trained or hebbian)");
}

std::string_view to_string(ScanPolicy policy) {
  return policy == ScanPolicy::FullGrid ? "grid" : "first_violation";
}

ScanPolicy parse_scan_policy(std::string_view text) {
  if (text == "grid") return ScanPolicy::FullGrid;
  if (text == "first_violation") return ScanPolicy::StopAtViolation;
  throw ConfigError("unknown scan policy '" + std::string(text) +
                    "' (expected grid or first_violation)");
}

std::vector<std::string> to_fields(const SweepRecord& r) {
  return {std::string(to_string(r.mode)),
          r.method,
          std::to_string(r.d),
          std::to_string(r.m),
          format_double(r.kappa),
          format_double(r.alpha),
          std::to_string(r.p),
          std::to_string(r.seed),
          format_double(r.accuracy),
          format_double(r.final_loss),
          std::to_string(r.steps_used),
          r.stop_reason};
}

SweepRecord record_from_fields(const std::vector<std::string>& f) {
  if (f.size() != kSweepColumns.size()) throw IoError("sweep row has the wrong number of fields");
  try {
    SweepRecord r;
    r.mode = parse_mode(f[0]);
    r.method = f[1];
    r.d = std::stoi(f[2]);
    r.m = std::stoi(f[3]);
    r.kappa = std::stod(f[4]);
    r.alpha = std::stod(f[5]);
    r.p = std::stoi(f[6]);
    r.seed = std::stoull(f[7]);
    r.accuracy = std::stod(f[8]);
    r.final_loss = std::stod(f[9]);
    r.steps_used = std::stoi(f[10]);
    r.stop_reason = f[11];
    return r;
  } catch (const std::logic_error& e) {
    throw IoError(std::string("malformed sweep row: ") + e.what());
  }
}

void SweepSpec::validate() const {
  if (alphas.empty()) throw ConfigError("sweep.alphas: must not be empty");
  if (dims.empty()) throw ConfigError("sweep.dims: must not be empty");
  if (kappas.empty()) throw ConfigError("sweep.kappas: must not be empty");
  if (modes.empty()) throw ConfigError("sweep.modes: must not be empty");
  if (methods.empty()) throw ConfigError("sweep.methods: must not be empty");
  if (n_seeds < 1) throw ConfigError("sweep.seeds: must be >= 1");
  if (threads < 1) throw ConfigError("threads: must be >= 1");
  for (double a : alphas) {
    if (!(a > 0.0)) throw ConfigError("sweep.alphas: values must be > 0");
  }
  if (!std::is_sorted(alphas.begin(), alphas.end()) ||
      std::adjacent_find(alphas.begin(), alphas.end()) != alphas.end()) {
    throw ConfigError("sweep.alphas: values must be strictly increasing");
  }
  for (int d : dims) {
    if (d < 2) throw ConfigError("sweep.dims: values must be >= 2");
  }
  for (double k : kappas) {
    if (!(k > 0.0 && k <= 1.0)) throw ConfigError("sweep.kappas: values must lie in (0, 1]");
  }
  train.validate();
}

nlohmann::json SweepSpec::to_json() const {
  std::vector<std::string> mode_names, method_names;
  for (Mode m : modes) mode_names.emplace_back(to_string(m));
  for (Method m : methods) method_names.emplace_back(to_string(m));
  return {{"alphas", alphas},     {"dims", dims},
          {"kappas", kappas},     {"modes", mode_names},
          {"methods", method_names}, {"seeds", n_seeds},
          {"master_seed", master_seed}, {"scan", std::string(to_string(scan))},
          {"train", train.to_json()}};
}

std::uint64_t instance_seed(std::uint64_t master_seed, int d, int alpha_index, int replicate) {
  const std::uint64_t a = (static_cast<std::uint64_t>(static_cast<std::uint32_t>(d)) << 32) |
                          static_cast<std::uint32_t>(alpha_index);
  return derive_seed(master_seed, StreamRole::SeedDerivation, a,
                     static_cast<std::uint64_t>(replicate));
}

SweepRecord run_cell(Mode mode, Method method, int d, double kappa, double alpha,
                     std::uint64_t seed, const TrainConfig& config) {
  SweepRecord rec;
  rec.mode = mode;
  rec.method = std::string(to_string(method));
  rec.d = d;
  rec.kappa = kappa;
  rec.alpha = alpha;
  rec.p = p_from_alpha(alpha, d);
  rec.seed = seed;
  const ProblemInstance instance = sample_instance(d, rec.p, mode, seed);
  if (method == Method::Hebbian) {
    const WeightModel w = hebbian_weights(instance);
    rec.m = d;
    rec.accuracy = accuracy(w, instance);
    rec.final_loss = cross_entropy_loss(w, instance);
    rec.steps_used = 0;
    rec.stop_reason = "not_trained";
    return rec;
  }
  WeightModel init = init_model(d, kappa, derive_seed(seed, StreamRole::Init, 1));
  rec.m = init.m();
  try {
    const TrainReport report = train(instance, std::move(init), config);
    rec.accuracy = report.final_accuracy();
    rec.final_loss = report.final_loss();
    rec.steps_used = report.steps_used;
    rec.stop_reason = std::string(to_string(report.stop_reason));
  } catch (const NumericError& e) {
    rec.accuracy = std::nan("");
    rec.final_loss = std::nan("");
    rec.steps_used = static_cast<int>(std::max(0L, e.step()));
    rec.stop_reason = "numeric_error";
  }
  return rec;
}

namespace {

bool satisfied(const SweepRecord& r) { return r.accuracy >= 1.0; }

struct CellKey {
  Mode mode;
  Method method;
  int d;
  double kappa;
  int alpha_index;
  int replicate;
};

struct Group {
  Mode mode;
  Method method;
  int d;
  double kappa;
};

std::string journal_key(const SweepRecord& r) {
  return std::string(to_string(r.mode)) + "|" + r.method + "|" + std::to_string(r.d) + "|" +
         format_double(r.kappa) + "|" + format_double(r.alpha) + "|" + std::to_string(r.seed);
}

class Journal {
 public:
  explicit Journal(std::optional<std::filesystem::path> path) : path_(std::move(path)) {
    if (!path_) return;
    if (std::filesystem::exists(*path_)) {
      const CsvTable table = read_csv(*path_, /*tolerate_partial=*/true);
      if (table.header != kSweepColumns) throw IoError("journal " + path_->string() + " has a foreign header");
      for (const auto& row : table.rows) {
        SweepRecord r = record_from_fields(row);
        done_.emplace(journal_key(r), std::move(r));
      }
    }
    // Rewrite so a partially written last line cannot merge with new entries.
    std::string text;
    auto append_row = [&text](const std::vector<std::string>& fields) {
      for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i > 0) text += ',';
        text += fields[i];
      }
      text += '\n';
    };
    append_row(kSweepColumns);
    for (const auto& [key, r] : done_) append_row(to_fields(r));
    write_text_file(*path_, text);
  }

  std::optional<SweepRecord> lookup(const SweepRecord& probe) const {
    auto it = done_.find(journal_key(probe));
    if (it == done_.end()) return std::nullopt;
    return it->second;
  }

  void append(const SweepRecord& r) {
    if (!path_) return;
    std::lock_guard lock(mutex_);
    std::string line;
    const auto fields = to_fields(r);
    for (std::size_t i = 0; i < fields.size(); ++i) {
      if (i > 0) line += ',';
      line += fields[i];
    }
    line += '\n';
    std::ofstream out(*path_, std::ios::binary | std::ios::app);
    out << line;
    out.flush();
    if (!out) throw IoError("failed appending to journal " + path_->string());
  }

 private:
  std::optional<std::filesystem::path> path_;
  std::map<std::string, SweepRecord> done_;
  std::mutex mutex_;
};

}  // namespace

std::vector<SweepRecord> run_sweep(const SweepSpec& spec, const SweepOptions& options) {
  spec.validate();
  std::vector<Group> groups;
  for (Mode mode : spec.modes) {
    for (Method method : spec.methods) {
      // The Hebbian construction needs shared outputs and is full rank.
      if (method == Method::Hebbian && mode != Mode::OP) continue;
      for (int d : spec.dims) {
        for (double kappa : spec.kappas) {
          if (method == Method::Hebbian && kappa != 1.0) continue;
          groups.push_back({mode, method, d, kappa});
        }
      }
    }
  }

  Journal journal(options.journal);
  std::mutex callback_mutex;
  auto run_one = [&](const Group& g, int ai, int rep) {
    const std::uint64_t seed = instance_seed(spec.master_seed, g.d, ai, rep);
    SweepRecord probe;
    probe.mode = g.mode;
    probe.method = std::string(to_string(g.method));
    probe.d = g.d;
    probe.kappa = g.kappa;
    probe.alpha = spec.alphas[static_cast<std::size_t>(ai)];
    probe.seed = seed;
    if (auto cached = journal.lookup(probe)) return *cached;
    SweepRecord rec = run_cell(g.mode, g.method, g.d, g.kappa, probe.alpha, seed, spec.train);
    journal.append(rec);
    if (options.on_record) {
      std::lock_guard lock(callback_mutex);
      options.on_record(rec);
    }
    return rec;
  };

  const int n_alpha = static_cast<int>(spec.alphas.size());
  std::vector<std::vector<std::optional<SweepRecord>>> slots(groups.size());
  for (auto& s : slots) s.resize(static_cast<std::size_t>(n_alpha) * spec.n_seeds);

  // Work units: single cells for the full grid, whole groups for the scan.
  std::vector<std::pair<std::size_t, int>> units;  // (group, cell index or -1)
  for (std::size_t g = 0; g < groups.size(); ++g) {
    if (spec.scan == ScanPolicy::FullGrid) {
      for (int c = 0; c < n_alpha * spec.n_seeds; ++c) units.emplace_back(g, c);
    } else {
      units.emplace_back(g, -1);
    }
  }
  auto run_unit = [&](const std::pair<std::size_t, int>& unit) {
    const Group& g = groups[unit.first];
    auto& s = slots[unit.first];
    if (unit.second >= 0) {
      const int ai = unit.second / spec.n_seeds;
      const int rep = unit.second % spec.n_seeds;
      s[static_cast<std::size_t>(unit.second)] = run_one(g, ai, rep);
      return;
    }
    for (int ai = 0; ai < n_alpha; ++ai) {
      for (int rep = 0; rep < spec.n_seeds; ++rep) {
        SweepRecord rec = run_one(g, ai, rep);
        const bool ok = satisfied(rec);
        s[static_cast<std::size_t>(ai * spec.n_seeds + rep)] = std::move(rec);
        if (!ok) return;
      }
    }
  };

  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    while (true) {
      const std::size_t i = next.fetch_add(1);
      if (i >= units.size()) return;
      try {
        run_unit(units[i]);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = units.size();
        return;
      }
    }
  };
  const int n_threads = std::max(1, std::min<int>(spec.threads, static_cast<int>(units.size())));
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (failure) std::rethrow_exception(failure);

  std::vector<SweepRecord> records;
  for (auto& s : slots) {
    for (auto& cell : s) {
      if (cell) records.push_back(std::move(*cell));
    }
  }
  return records;
}

void write_sweep_csv(const std::filesystem::path& path, const std::vector<SweepRecord>& records) {
  std::string text;
  auto append_row = [&text](const std::vector<std::string>& fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) {
      if (i > 0) text += ',';
      text += fields[i];
    }
    text += '\n';
  };
  append_row(kSweepColumns);
  for (const auto& r : records) append_row(to_fields(r));
  write_text_file(path, text);
}

std::vector<SweepRecord> read_sweep_csv(const std::filesystem::path& path) {
  const CsvTable table = read_csv(path);
  if (table.header != kSweepColumns) throw IoError(path.string() + " is not a sweep CSV");
  std::vector<SweepRecord> out;
  out.reserve(table.rows.size());
  for (const auto& row : table.rows) out.push_back(record_from_fields(row));
  return out;
}

// ---------------------------------------------------------------------------
// Thresholds

ThresholdEstimate empirical_threshold(const std::vector<SweepRecord>& records) {
  if (records.empty()) throw std::invalid_argument("empirical_threshold: no records");
  const SweepRecord& first = records.front();
  for (const auto& r : records) {
    if (r.mode != first.mode || r.method != first.method || r.d != first.d || r.kappa != first.kappa) {
      throw std::invalid_argument("empirical_threshold: records span several groups");
    }
  }
  std::map<double, std::pair<bool, int>> by_alpha;  // alpha -> (all satisfied, p)
  for (const auto& r : records) {
    auto [it, inserted] = by_alpha.try_emplace(r.alpha, true, r.p);
    it->second.first = it->second.first && satisfied(r);
  }
  ThresholdEstimate est;
  est.mode = first.mode;
  est.method = first.method;
  est.d = first.d;
  est.kappa = first.kappa;
  const auto violation = std::find_if(by_alpha.begin(), by_alpha.end(),
                                      [](const auto& kv) { return !kv.second.first; });
  if (violation == by_alpha.end()) {
    est.all_satisfied = true;
    est.alpha_c_hat = by_alpha.rbegin()->first;
    est.p_at_threshold = by_alpha.rbegin()->second.second;
    est.alpha_first_violation = std::nan("");
    return est;
  }
  est.alpha_first_violation = violation->first;
  if (violation == by_alpha.begin()) {
    est.none_satisfied = true;
    est.alpha_c_hat = violation->first;
    est.p_at_threshold = violation->second.second;
    return est;
  }
  const auto last_ok = std::prev(violation);
  est.alpha_c_hat = last_ok->first;
  est.p_at_threshold = last_ok->second.second;
  return est;
}

std::vector<ThresholdEstimate> thresholds_by_group(const std::vector<SweepRecord>& records) {
  std::vector<std::vector<SweepRecord>> groups;
  for (const auto& r : records) {
    auto it = std::find_if(groups.begin(), groups.end(), [&](const auto& g) {
      const auto& f = g.front();
      return f.mode == r.mode && f.method == r.method && f.d == r.d && f.kappa == r.kappa;
    });
    if (it == groups.end()) {
      groups.push_back({r});
    } else {
      it->push_back(r);
    }
  }
  std::vector<ThresholdEstimate> out;
  for (const auto& g : groups) out.push_back(empirical_threshold(g));
  return out;
}

void write_thresholds_csv(const std::filesystem::path& path,
                          const std::vector<ThresholdEstimate>& thresholds) {
  CsvWriter csv(path, {"mode", "method", "d", "kappa", "alpha_c_hat", "p_at_threshold",
                       "alpha_first_violation", "rule", "flag"});
  for (const auto& t : thresholds) {
    const std::string flag = t.all_satisfied ? "all_satisfied" : t.none_satisfied ? "none_satisfied" : "ok";
    csv.row({std::string(to_string(t.mode)), t.method, std::to_string(t.d), format_double(t.kappa),
             format_double(t.alpha_c_hat), std::to_string(t.p_at_threshold),
             format_double(t.alpha_first_violation), "first_violation", flag});
  }
}

FiniteSizeFit finite_size_fit(const std::vector<FiniteSizePoint>& points) {
  FiniteSizeFit fit;
  std::vector<double> x, y;
  for (const auto& pt : points) {
    if (pt.alpha_c_hat > 0.5 && pt.p > 2) {
      fit.used.push_back(pt);
      x.push_back(std::log(std::log(static_cast<double>(pt.p))));
      y.push_back(std::log(pt.alpha_c_hat - 0.5));
    } else {
      fit.excluded.push_back(pt);
    }
  }
  if (fit.used.size() < 3) {
    throw std::invalid_argument("finite_size_fit: need at least three thresholds above 1/2, got " +
                                std::to_string(fit.used.size()));
  }
  const LineFit line = fit_line(x, y);
  fit.slope = line.slope;
  fit.intercept = line.intercept;
  fit.r_squared = line.r_squared;
  return fit;
}

// ---------------------------------------------------------------------------

ScoreHistograms score_histograms(const WeightModel& model, const ProblemInstance& instance) {
  const int p = instance.p();
  ScoreHistograms out;
  out.target.reserve(static_cast<std::size_t>(p));
  out.nontarget.reserve(static_cast<std::size_t>(p) * (p - 1));
  out.max_nontarget.reserve(static_cast<std::size_t>(p));
  for (int mu = 0; mu < p; ++mu) {
    const Eigen::VectorXd s = scores(model, instance, mu);
    double best = -std::numeric_limits<double>::infinity();
    for (int rho = 0; rho < p; ++rho) {
      if (rho == mu) {
        out.target.push_back(s(rho));
      } else {
        out.nontarget.push_back(s(rho));
        best = std::max(best, s(rho));
      }
    }
    out.max_nontarget.push_back(best);
  }
  double mean = 0.0;
  for (double v : out.nontarget) mean += v;
  mean /= static_cast<double>(out.nontarget.size());
  double var = 0.0;
  for (double v : out.nontarget) var += (v - mean) * (v - mean);
  var /= static_cast<double>(out.nontarget.size());
  if (!(var > 0.0) || !std::isfinite(var)) {
    throw NumericError("score_histograms: non-target scores have zero variance");
  }
  out.scale = 1.0 / std::sqrt(var);
  for (auto* pool : {&out.target, &out.nontarget, &out.max_nontarget}) {
    for (double& v : *pool) v *= out.scale;
  }
  return out;
}

}  // namespace assocmem
