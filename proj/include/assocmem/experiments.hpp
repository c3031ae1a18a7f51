#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "assocmem/model.hpp"
#include "assocmem/problem.hpp"

namespace assocmem {

enum class Method { Trained, Hebbian };
std::string_view to_string(Method method);
Method parse_method(std::string_view text);

/// One (mode, method, d, kappa, alpha, replicate) cell of a sweep.
struct SweepRecord {
  Mode mode = Mode::OP;
  std::string method = "trained";
  int d = 0;
  int m = 0;
  double kappa = 1.0;
  double alpha = 0.0;
  int p = 0;
  std::uint64_t seed = 0;
  double accuracy = 0.0;
  double final_loss = 0.0;
  int steps_used = 0;
  std::string stop_reason;
};

inline const std::vector<std::string> kSweepColumns = {
    "mode", "method", "d", "m", "kappa", "alpha", "p", "seed",
    "accuracy", "final_loss", "steps_used", "stop_reason"};

std::vector<std::string> to_fields(const SweepRecord& record);
SweepRecord record_from_fields(const std::vector<std::string>& fields);

/// How cells within one (mode, method, d, kappa) group are visited.
enum class ScanPolicy {
  FullGrid,        ///< every alpha and every replicate
  StopAtViolation  ///< ascending alpha; the group ends at its first imperfect cell
};
std::string_view to_string(ScanPolicy policy);
ScanPolicy parse_scan_policy(std::string_view text);

struct SweepSpec {
  std::vector<double> alphas;
  std::vector<int> dims;
  std::vector<double> kappas = {1.0};
  std::vector<Mode> modes = {Mode::OP};
  std::vector<Method> methods = {Method::Trained};
  int n_seeds = 5;
  std::uint64_t master_seed = 0;
  TrainConfig train;
  ScanPolicy scan = ScanPolicy::FullGrid;
  int threads = 1;

  /// Throws ConfigError on empty grids or out-of-range values.
  void validate() const;
  nlohmann::json to_json() const;
};

/// Seed of the instance for (d, alpha index, replicate). Shared by both modes,
/// every kappa and every method so that they see the same inputs.
std::uint64_t instance_seed(std::uint64_t master_seed, int d, int alpha_index, int replicate);

/// Runs one cell (no journal, no threading).
SweepRecord run_cell(Mode mode, Method method, int d, double kappa, double alpha,
                     std::uint64_t seed, const TrainConfig& config);

struct SweepOptions {
  /// Append-only journal of finished cells; existing entries are reused.
  std::optional<std::filesystem::path> journal;
  /// Called after every finished cell (from the worker thread).
  std::function<void(const SweepRecord&)> on_record;
};

/// Records in canonical order: modes, methods, dims, kappas, alphas, seeds as
/// listed in `spec`. Deterministic for any thread count and across resumes.
std::vector<SweepRecord> run_sweep(const SweepSpec& spec, const SweepOptions& options = {});

void write_sweep_csv(const std::filesystem::path& path, const std::vector<SweepRecord>& records);
std::vector<SweepRecord> read_sweep_csv(const std::filesystem::path& path);

struct ThresholdEstimate {
  Mode mode = Mode::OP;
  std::string method = "trained";
  int d = 0;
  double kappa = 1.0;
  /// Largest alpha before the first violation; the estimate of alpha_c.
  double alpha_c_hat = 0.0;
  int p_at_threshold = 0;
  /// Smallest alpha with accuracy < 1 for some replicate.
  double alpha_first_violation = 0.0;
  bool all_satisfied = false;   ///< no violation in range
  bool none_satisfied = false;  ///< violation already at the first alpha
  bool in_range() const { return !all_satisfied && !none_satisfied; }
};

/// Applies the first-violation rule to records of one group; `alphas` is the
/// swept grid in ascending order.
ThresholdEstimate empirical_threshold(const std::vector<SweepRecord>& records);

/// One estimate per (mode, method, d, kappa) group present in `records`.
std::vector<ThresholdEstimate> thresholds_by_group(const std::vector<SweepRecord>& records);

void write_thresholds_csv(const std::filesystem::path& path,
                          const std::vector<ThresholdEstimate>& thresholds);

struct FiniteSizePoint {
  int d = 0;
  int p = 0;
  double alpha_c_hat = 0.0;
};

struct FiniteSizeFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
  std::vector<FiniteSizePoint> used;
  std::vector<FiniteSizePoint> excluded;  ///< alpha_c_hat <= 1/2
};

/// Least squares of log(alpha_c_hat - 1/2) against log log p. Needs at least
/// three points above 1/2.
FiniteSizeFit finite_size_fit(const std::vector<FiniteSizePoint>& points);

struct ScoreHistograms {
  std::vector<double> target;      ///< s_{mu mu}, rescaled
  std::vector<double> nontarget;   ///< s_{mu rho}, rho != mu, rescaled
  std::vector<double> max_nontarget;  ///< per-mu max over rho != mu, rescaled
  double scale = 1.0;              ///< 1 / std(nontarget) of the raw scores
};

/// All scores of `model` on `instance`, rescaled so that the non-target pool
/// has unit variance.
ScoreHistograms score_histograms(const WeightModel& model, const ProblemInstance& instance);

}  // namespace assocmem
