#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

namespace assocmem {

/// OP: every input competes against one shared output set.
/// DP: input mu has its own independent candidate set U^(mu).
enum class Mode { OP, DP };

std::string_view to_string(Mode mode);
Mode parse_mode(std::string_view text);

/// Associations (e_mu -> target mu) with standard-Gaussian embeddings.
///
/// Inputs are stored column-wise (column mu is e_mu). In OP mode the shared
/// outputs are stored the same way. In DP mode only one derived seed per mu is
/// kept; the block U^(mu) is regenerated on demand, so resident memory stays
/// O(d p) instead of O(d p^2).
class ProblemInstance {
 public:
  int d() const { return d_; }
  int p() const { return p_; }
  Mode mode() const { return mode_; }
  std::uint64_t master_seed() const { return master_seed_; }

  const Eigen::MatrixXd& inputs() const { return inputs_; }
  /// Shared outputs (d x p); empty in DP mode.
  const Eigen::MatrixXd& outputs_shared() const { return outputs_shared_; }
  /// Per-input seeds for U^(mu); empty in OP mode.
  const std::vector<std::uint64_t>& per_mu_seed() const { return per_mu_seed_; }

  /// Candidate output rho as seen by input mu.
  Eigen::VectorXd output_vector(int mu, int rho) const;

  /// Write the full candidate block for input mu (d x p, column rho) into `block`.
  void fill_output_block(int mu, Eigen::Ref<Eigen::MatrixXd> block) const;

  /// Bytes held by the instance (embeddings + seeds).
  std::size_t resident_bytes() const;

  nlohmann::json descriptor() const;

  friend ProblemInstance sample_instance(int d, int p, Mode mode, std::uint64_t master_seed);

 private:
  int d_ = 0;
  int p_ = 0;
  Mode mode_ = Mode::OP;
  std::uint64_t master_seed_ = 0;
  Eigen::MatrixXd inputs_;
  Eigen::MatrixXd outputs_shared_;
  std::vector<std::uint64_t> per_mu_seed_;
};

/// Throws std::invalid_argument for d < 1 or p < 2.
ProblemInstance sample_instance(int d, int p, Mode mode, std::uint64_t master_seed);

/// Rebuild an instance from its JSON descriptor {d, p, mode, master_seed}.
ProblemInstance instance_from_descriptor(const nlohmann::json& descriptor);

/// Load parameter alpha = p ln p / d^2.
double alpha_of(int p, int d);

/// Integer p >= 2 minimising |p ln p - alpha d^2|.
int p_from_alpha(double alpha, int d);

struct LoadPoint {
  double alpha = 0.0;
  int d = 0;
  int p = 0;
};

LoadPoint resolve_load(double alpha, int d);

}  // namespace assocmem
