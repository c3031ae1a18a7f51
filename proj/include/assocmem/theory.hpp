#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <mutex>
#include <span>
#include <vector>

#include <json.hpp>

namespace assocmem {

/// alpha_c(kappa) = 1/2 int_{X_qc(1-kappa)}^2 rho_qc(s) s^2 ds.
double alpha_c(double kappa);

/// Largest admissible t (and q): beta_t = sqrt(t/(1-t)) diverges at 1.
inline constexpr double kTFloor = 1e-4;

double beta_of(double t);

/// log f_p(t; eta) with f_p = E_xi prod_{rho>=2} Phi(xi + beta_t (eta_1 - eta_rho)),
/// where eta_row[0] is eta_1 and the rest are the competitors.
double log_f_p(double t, std::span<const double> eta_row);

/// Same kernel with lambda = -eta_1 and the competitors already sorted in
/// descending order; the form used by the Monte-Carlo sampler.
double log_f_p_sorted(double t, double lambda, std::span<const double> competitors_desc);

struct KernelDiagnostics {
  int nodes = 0;          ///< Gauss-Hermite nodes of the accepted estimate
  double mode = 0.0;      ///< maximizer of the log-integrand
  double scale = 0.0;     ///< curvature scale used for the nodes
  double change = 0.0;    ///< |difference| to the previous node count
};
double log_f_p_sorted(double t, double lambda, std::span<const double> competitors_desc,
                      KernelDiagnostics* diagnostics);

struct McEstimate {
  double estimate = 0.0;
  double std_error = 0.0;
};

/// Pre-drawn eta samples shared by every evaluation (common random numbers):
/// G_hat(t) = mean_k log f_p(t; eta^(k)) / log p.
class EnergeticSampler {
 public:
  EnergeticSampler(int p, int n_mc, std::uint64_t seed);

  int p() const { return p_; }
  int n_mc() const { return n_mc_; }
  std::uint64_t seed() const { return seed_; }

  /// Memoized per t, so repeated searches reuse earlier evaluations.
  McEstimate G(double t) const;

 private:
  int p_;
  int n_mc_;
  std::uint64_t seed_;
  std::vector<double> lambda_;       // n_mc
  std::vector<double> competitors_;  // n_mc rows of p-1, each sorted descending
  mutable std::mutex memo_mutex_;
  mutable std::map<double, McEstimate> memo_;
};

McEstimate energetic_G(double t, int p, int n_mc, std::uint64_t seed);

struct GBounds {
  double lower = 0.0;
  double upper = 0.0;
};

/// Large-p bounds: lower -(1 + beta_t)^2, upper -(k/(k+1)) beta_t^2.
GBounds g_bounds(double t, int k);

/// 1/2 log(1-q) + q / (2(1-q)).
double entropic_term(double q);

/// Entropic term + alpha * G_hat(q).
double free_entropy(double alpha, double q, int p, int n_mc, std::uint64_t seed);
double free_entropy(double alpha, double q, const EnergeticSampler& sampler);

struct FreeEntropyEval {
  double alpha = 0.0;
  int p_surrogate = 0;
  double q_star = 0.0;
  double phi_value = 0.0;
  double energetic_term = 0.0;  ///< G_hat(q*)
  int mc_samples = 0;
  double mc_stderr = 0.0;       ///< stderr of G_hat(q*)
  bool at_boundary = false;     ///< minimizer pinned at q = 1 - q_floor
  double q_floor = kTFloor;

  nlohmann::json to_json() const;
};

struct MinimizeOptions {
  int prescan_points = 41;   ///< uniform grid in q used to bracket the minimum
  double tolerance = 1e-5;   ///< golden-section bracket width
};

/// Minimizer of the free entropy over q in [0, 1 - q_floor].
FreeEntropyEval minimize_q(double alpha, int p, int n_mc, std::uint64_t seed,
                           const MinimizeOptions& options = {});
/// Uses (and memoizes) one sampler so that several alphas share the same eta.
FreeEntropyEval minimize_q(double alpha, const EnergeticSampler& sampler,
                           const MinimizeOptions& options = {});

struct CapacityEstimate {
  std::vector<double> q;
  std::vector<double> values;  ///< -2 (1-q) G(q)
  double limit = 0.0;          ///< extrapolated value at q = 1
  double alpha_c_hat = 0.0;    ///< 1 / limit
  bool monotone = true;        ///< false flags an unreliable extrapolation

  nlohmann::json to_json() const;
};

inline constexpr double kExtrapolationQ[] = {0.9, 0.95, 0.99, 0.995};

/// Polynomial extrapolation of -2(1-q)G(q) to 1-q = 0 from kExtrapolationQ.
CapacityEstimate capacity_extrapolation(const std::function<double(double)>& g);
CapacityEstimate capacity_extrapolation(int p, int n_mc, std::uint64_t seed);
CapacityEstimate capacity_extrapolation(const EnergeticSampler& sampler);

}  // namespace assocmem
