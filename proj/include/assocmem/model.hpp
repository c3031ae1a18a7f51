#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "assocmem/errors.hpp"
#include "assocmem/problem.hpp"

namespace assocmem {

enum class Precision { F32, F64 };
std::string_view to_string(Precision precision);
Precision parse_precision(std::string_view text);

/// Linear map W (d x d), stored either directly or as W = Q R^T with Q, R d x m.
class WeightModel {
 public:
  WeightModel() = default;
  static WeightModel full_rank(Eigen::MatrixXd w);
  static WeightModel factored(Eigen::MatrixXd q, Eigen::MatrixXd r);

  bool is_factored() const { return factored_; }
  int d() const { return static_cast<int>(factored_ ? q_.rows() : w_.rows()); }
  /// Rank budget: m for factored models, d otherwise.
  int m() const { return static_cast<int>(factored_ ? q_.cols() : w_.cols()); }

  const Eigen::MatrixXd& w() const;
  const Eigen::MatrixXd& q() const;
  const Eigen::MatrixXd& r() const;
  Eigen::MatrixXd& w();
  Eigen::MatrixXd& q();
  Eigen::MatrixXd& r();

  /// Dense W; forms Q R^T for factored models.
  Eigen::MatrixXd effective_weight() const;
  /// v = W x without forming W.
  Eigen::VectorXd apply(const Eigen::Ref<const Eigen::VectorXd>& x) const;

 private:
  bool factored_ = false;
  Eigen::MatrixXd w_;
  Eigen::MatrixXd q_;
  Eigen::MatrixXd r_;
};

/// m = round(kappa d), clamped to [1, d].
int rank_from_kappa(double kappa, int d);

/// Entries i.i.d. N(0, 1/d^2). kappa == 1 gives a full-rank model unless
/// `force_factored` is set.
WeightModel init_model(int d, double kappa, std::uint64_t seed, bool force_factored = false);

/// Scores s_{mu rho} = u_rho^(mu)T W e_mu for rho = 0..p-1.
Eigen::VectorXd scores(const WeightModel& model, const ProblemInstance& instance, int mu);

/// Mean cross-entropy over all mu with target rho = mu.
double cross_entropy_loss(const WeightModel& model, const ProblemInstance& instance);

/// Gradient of the mean cross-entropy, in the model's own parameterization.
WeightModel loss_gradient(const WeightModel& model, const ProblemInstance& instance);

/// Fraction of mu whose target score strictly beats every other score.
double accuracy(const WeightModel& model, const ProblemInstance& instance);

struct TrainConfig {
  double learning_rate = 1e-2;
  int max_steps = 512;
  double warmup_fraction = 0.05;
  double stop_accuracy = 0.999;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  Precision precision = Precision::F64;
  /// DP only: materialize all candidate blocks if they fit in this many MiB,
  /// otherwise regenerate them every step.
  double dp_cache_mb = 2048.0;

  void validate() const;
  nlohmann::json to_json() const;
};

/// Learning rate used for the update at 0-based step t.
double scheduled_lr(const TrainConfig& config, int t);

enum class StopReason { AccuracyReached, MaxSteps };
std::string_view to_string(StopReason reason);

struct TrainReport {
  /// Entry k is measured after k updates; length steps_used + 1.
  std::vector<double> losses;
  std::vector<double> accuracies;
  int steps_used = 0;
  StopReason stop_reason = StopReason::MaxSteps;
  WeightModel model;

  double final_loss() const { return losses.back(); }
  double final_accuracy() const { return accuracies.back(); }
  nlohmann::json to_json() const;
};

/// Full-batch Adam with warmup + cosine decay and early stopping.
TrainReport train(const ProblemInstance& instance, WeightModel model, const TrainConfig& config);

/// Binary layout: uint32 LE {d, m, variant (0 full, 1 factored), 0}, then
/// little-endian f64 row-major W, or Q followed by R.
void write_weights(const std::filesystem::path& path, const WeightModel& model);
WeightModel read_weights(const std::filesystem::path& path);

}  // namespace assocmem
