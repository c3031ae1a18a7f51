#pragma once

#include <cstdint>

#include <Eigen/Dense>

#include "assocmem/model.hpp"
#include "assocmem/problem.hpp"

namespace assocmem {

/// W = (1/d) sum_mu u_mu e_mu^T for column-stacked inputs E and outputs U.
Eigen::MatrixXd hebbian_matrix(const Eigen::MatrixXd& inputs, const Eigen::MatrixXd& outputs);

/// Hebbian weights of an OP instance. Throws std::invalid_argument for DP.
WeightModel hebbian_weights(const ProblemInstance& instance);

/// Moments of the normalized scores s_{mu rho} = (1/d) u_mu^T W e_rho.
struct HebbScoreStats {
  int d = 0;
  int p = 0;
  double diag_mean = 0.0;
  double diag_var = 0.0;
  /// Zero when p = 1 (no off-diagonal pairs); see offdiag_count.
  double offdiag_mean = 0.0;
  double offdiag_var = 0.0;
  long long offdiag_count = 0;
};

HebbScoreStats hebbian_score_stats(const Eigen::MatrixXd& inputs, const Eigen::MatrixXd& outputs);
HebbScoreStats hebbian_score_stats(const ProblemInstance& instance);

/// J_alpha(x) = (x-1)^2/(2 alpha) for x <= sqrt(2 alpha),
///              (2x^2 - 2x + 1)/(2 alpha) - 1 otherwise.
double rate_function(double alpha, double x);

/// inf_x J_alpha(x) in closed form.
double rate_function_inf(double alpha);

struct HebbHeuristic {
  double probability = 0.0;       ///< P[every row succeeds] = (1 - P[E^c])^p
  double row_failure = 0.0;       ///< Monte-Carlo estimate of P[E^c]
  double row_failure_stderr = 0.0;
};

/// Independent-Gaussian model: s_mumu ~ N(1, sigma^2), s_murho ~ N(0, sigma^2),
/// sigma^2 = alpha / log p. Samples the diagonal score and integrates the
/// off-diagonal maximum exactly.
HebbHeuristic hebb_heuristic_success(double alpha, int p, int n_mc, std::uint64_t seed);

}  // namespace assocmem
