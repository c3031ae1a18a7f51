#include "assocmem/problem.hpp"

#include <cmath>
#include <stdexcept>

#include "assocmem/rng.hpp"

namespace assocmem {

std::string_view to_string(Mode mode) { return mode == Mode::OP ? "OP" : "DP"; }

Mode parse_mode(std::string_view text) {
  if (text == "OP" || text == "op") return Mode::OP;
  if (text == "DP" || text == "dp") return Mode::DP;
  throw std::invalid_argument("unknown mode '" + std::string(text) + "' (expected OP or DP)");
}

ProblemInstance sample_instance(int d, int p, Mode mode, std::uint64_t master_seed) {
  if (d < 1) throw std::invalid_argument("sample_instance: d must be >= 1");
  if (p < 2) throw std::invalid_argument("sample_instance: p must be >= 2");

  ProblemInstance inst;
  inst.d_ = d;
  inst.p_ = p;
  inst.mode_ = mode;
  inst.master_seed_ = master_seed;
  inst.inputs_.resize(d, p);
  for (int mu = 0; mu < p; ++mu) {
    fill_normals(master_seed, StreamRole::Input, static_cast<std::uint32_t>(mu), 0,
                 {inst.inputs_.col(mu).data(), static_cast<std::size_t>(d)});
  }
  if (mode == Mode::OP) {
    inst.outputs_shared_.resize(d, p);
    for (int rho = 0; rho < p; ++rho) {
      fill_normals(master_seed, StreamRole::SharedOutput, static_cast<std::uint32_t>(rho), 0,
                   {inst.outputs_shared_.col(rho).data(), static_cast<std::size_t>(d)});
    }
  } else {
    inst.per_mu_seed_.resize(static_cast<std::size_t>(p));
    for (int mu = 0; mu < p; ++mu) {
      inst.per_mu_seed_[static_cast<std::size_t>(mu)] =
          derive_seed(master_seed, StreamRole::SeedDerivation, static_cast<std::uint64_t>(mu));
    }
  }
  return inst;
}

Eigen::VectorXd ProblemInstance::output_vector(int mu, int rho) const {
  if (mu < 0 || mu >= p_ || rho < 0 || rho >= p_) {
    throw std::out_of_range("output_vector: index out of range");
  }
  if (mode_ == Mode::OP) return outputs_shared_.col(rho);
  Eigen::VectorXd out(d_);
  fill_normals(per_mu_seed_[static_cast<std::size_t>(mu)], StreamRole::DecoupledOutput,
               static_cast<std::uint32_t>(rho), 0, {out.data(), static_cast<std::size_t>(d_)});
  return out;
}

void ProblemInstance::fill_output_block(int mu, Eigen::Ref<Eigen::MatrixXd> block) const {
  if (mu < 0 || mu >= p_) throw std::out_of_range("fill_output_block: index out of range");
  if (block.rows() != d_ || block.cols() != p_) {
    throw std::invalid_argument("fill_output_block: block must be d x p");
  }
  if (mode_ == Mode::OP) {
    block = outputs_shared_;
    return;
  }
  const std::uint64_t seed = per_mu_seed_[static_cast<std::size_t>(mu)];
  for (int rho = 0; rho < p_; ++rho) {
    fill_normals(seed, StreamRole::DecoupledOutput, static_cast<std::uint32_t>(rho), 0,
                 {block.col(rho).data(), static_cast<std::size_t>(d_)});
  }
}

std::size_t ProblemInstance::resident_bytes() const {
  return sizeof(double) * static_cast<std::size_t>(inputs_.size() + outputs_shared_.size()) +
         sizeof(std::uint64_t) * per_mu_seed_.size();
}

nlohmann::json ProblemInstance::descriptor() const {
  return {{"d", d_}, {"p", p_}, {"mode", std::string(to_string(mode_))},
          {"master_seed", master_seed_}};
}

ProblemInstance instance_from_descriptor(const nlohmann::json& descriptor) {
  return sample_instance(descriptor.at("d").get<int>(), descriptor.at("p").get<int>(),
                         parse_mode(descriptor.at("mode").get<std::string>()),
                         descriptor.at("master_seed").get<std::uint64_t>());
}

double alpha_of(int p, int d) {
  const double pp = static_cast<double>(p);
  return pp * std::log(pp) / (static_cast<double>(d) * d);
}

int p_from_alpha(double alpha, int d) {
  if (!(alpha > 0.0)) throw std::invalid_argument("p_from_alpha: alpha must be positive");
  if (d < 2) throw std::invalid_argument("p_from_alpha: d must be >= 2");
  const double target = alpha * static_cast<double>(d) * d;
  auto load = [](double p) { return p * std::log(p); };
  if (target <= load(2.0)) return 2;

  // p ln p is increasing on [2, inf); bracket then bisect.
  double lo = 2.0, hi = 4.0;
  while (load(hi) < target) hi *= 2.0;
  for (int it = 0; it < 200 && hi - lo > 1e-9 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    (load(mid) < target ? lo : hi) = mid;
  }
  const int below = std::max(2, static_cast<int>(std::floor(lo)));
  int best = below;
  for (int cand = below; cand <= below + 2; ++cand) {
    if (std::abs(load(cand) - target) < std::abs(load(best) - target)) best = cand;
  }
  return best;
}

LoadPoint resolve_load(double alpha, int d) { return {alpha, d, p_from_alpha(alpha, d)}; }

}  // namespace assocmem
