#include "assocmem/hebbian.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "assocmem/numerics.hpp"
#include "assocmem/rng.hpp"

namespace assocmem {

Eigen::MatrixXd hebbian_matrix(const Eigen::MatrixXd& inputs, const Eigen::MatrixXd& outputs) {
  if (inputs.rows() != outputs.rows() || inputs.cols() != outputs.cols() || inputs.size() == 0) {
    throw std::invalid_argument("hebbian_matrix: inputs and outputs must both be d x p");
  }
  return outputs * inputs.transpose() / static_cast<double>(inputs.rows());
}

WeightModel hebbian_weights(const ProblemInstance& instance) {
  if (instance.mode() != Mode::OP) {
    throw std::invalid_argument("hebbian_weights: the Hebbian construction needs shared outputs (OP)");
  }
  return WeightModel::full_rank(hebbian_matrix(instance.inputs(), instance.outputs_shared()));
}

HebbScoreStats hebbian_score_stats(const Eigen::MatrixXd& inputs, const Eigen::MatrixXd& outputs) {
  const Eigen::MatrixXd w = hebbian_matrix(inputs, outputs);
  const auto d = inputs.rows();
  const auto p = inputs.cols();
  // Row mu of U^T W E holds s_{mu, .}; processed in column blocks.
  const Eigen::MatrixXd left = outputs.transpose() * w / static_cast<double>(d);  // p x d
  double diag_sum = 0.0, diag_sq = 0.0, off_sum = 0.0, off_sq = 0.0;
  constexpr Eigen::Index kChunk = 1024;
  Eigen::MatrixXd s;
  for (Eigen::Index c0 = 0; c0 < p; c0 += kChunk) {
    const Eigen::Index nb = std::min(kChunk, p - c0);
    s.noalias() = left * inputs.middleCols(c0, nb);
    for (Eigen::Index j = 0; j < nb; ++j) {
      const Eigen::Index rho = c0 + j;
      for (Eigen::Index mu = 0; mu < p; ++mu) {
        const double v = s(mu, j);
        if (mu == rho) {
          diag_sum += v;
          diag_sq += v * v;
        } else {
          off_sum += v;
          off_sq += v * v;
        }
      }
    }
  }
  HebbScoreStats stats;
  stats.d = static_cast<int>(d);
  stats.p = static_cast<int>(p);
  const double nd = static_cast<double>(p);
  stats.diag_mean = diag_sum / nd;
  stats.diag_var = std::max(0.0, diag_sq / nd - stats.diag_mean * stats.diag_mean);
  stats.offdiag_count = static_cast<long long>(p) * (p - 1);
  if (stats.offdiag_count > 0) {
    const double no = static_cast<double>(stats.offdiag_count);
    stats.offdiag_mean = off_sum / no;
    stats.offdiag_var = std::max(0.0, off_sq / no - stats.offdiag_mean * stats.offdiag_mean);
  }
  return stats;
}

HebbScoreStats hebbian_score_stats(const ProblemInstance& instance) {
  if (instance.mode() != Mode::OP) {
    throw std::invalid_argument("hebbian_score_stats: needs an OP instance");
  }
  return hebbian_score_stats(instance.inputs(), instance.outputs_shared());
}

double rate_function(double alpha, double x) {
  if (!(alpha > 0.0)) throw std::invalid_argument("rate_function: alpha must be positive");
  const double knee = std::sqrt(2.0 * alpha);
  if (x <= knee) return (x - 1.0) * (x - 1.0) / (2.0 * alpha);
  return (2.0 * x * x - 2.0 * x + 1.0) / (2.0 * alpha) - 1.0;
}

double rate_function_inf(double alpha) {
  if (!(alpha > 0.0)) throw std::invalid_argument("rate_function_inf: alpha must be positive");
  const double knee = std::sqrt(2.0 * alpha);
  // Region 1 is minimized at min(1, knee); region 2 at 1/2 if that lies to
  // the right of the knee, otherwise its infimum is the value at the knee.
  const double region1 = rate_function(alpha, std::min(1.0, knee));
  const double region2 = 0.5 > knee ? rate_function(alpha, 0.5) : rate_function(alpha, knee);
  return std::min(region1, region2);
}

HebbHeuristic hebb_heuristic_success(double alpha, int p, int n_mc, std::uint64_t seed) {
  if (p < 2) throw std::invalid_argument("hebb_heuristic_success: p must be >= 2");
  if (n_mc < 1) throw std::invalid_argument("hebb_heuristic_success: n_mc must be >= 1");
  if (!(alpha >= 0.0)) throw std::invalid_argument("hebb_heuristic_success: alpha must be >= 0");
  HebbHeuristic out;
  if (alpha == 0.0) {
    out.probability = 1.0;
    return out;
  }
  const double sigma = std::sqrt(alpha / std::log(static_cast<double>(p)));
  const double competitors = static_cast<double>(p - 1);
  NormalStream stream(seed, StreamRole::MonteCarlo);
  double sum = 0.0, sq = 0.0;
  for (int k = 0; k < n_mc; ++k) {
    const double diag = 1.0 + sigma * stream.next();
    // P[max of p-1 off-diagonal scores > diag] = 1 - Phi(diag/sigma)^(p-1)
    const double fail = -std::expm1(competitors * log_normal_cdf(diag / sigma));
    sum += fail;
    sq += fail * fail;
  }
  const double n = static_cast<double>(n_mc);
  out.row_failure = sum / n;
  const double var = n_mc > 1 ? std::max(0.0, (sq - n * out.row_failure * out.row_failure) / (n - 1)) : 0.0;
  out.row_failure_stderr = std::sqrt(var / n);
  out.probability = std::exp(static_cast<double>(p) * std::log1p(-out.row_failure));
  return out;
}

}  // namespace assocmem
