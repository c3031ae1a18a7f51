#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "assocmem/hebbian.hpp"

using namespace assocmem;

namespace {

double phi_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

}  // namespace

TEST_CASE("hebbian_matrix is the normalized sum of outer products") {
  const auto inst = sample_instance(5, 4, Mode::OP, 2);
  const Eigen::MatrixXd w = hebbian_matrix(inst.inputs(), inst.outputs_shared());
  Eigen::MatrixXd ref = Eigen::MatrixXd::Zero(5, 5);
  for (int mu = 0; mu < 4; ++mu) ref += inst.outputs_shared().col(mu) * inst.inputs().col(mu).transpose();
  ref /= 5.0;
  CHECK((w - ref).cwiseAbs().maxCoeff() < 1e-14);
  CHECK_THROWS_AS(hebbian_weights(sample_instance(5, 4, Mode::DP, 2)), std::invalid_argument);
}

TEST_CASE("score statistics agree with an explicit double loop") {
  const int d = 7, p = 9;
  const auto inst = sample_instance(d, p, Mode::OP, 3);
  const Eigen::MatrixXd w = hebbian_matrix(inst.inputs(), inst.outputs_shared());
  double dm = 0, dv = 0, om = 0, ov = 0;
  std::vector<double> diag, off;
  for (int mu = 0; mu < p; ++mu) {
    for (int rho = 0; rho < p; ++rho) {
      const double s = inst.outputs_shared().col(mu).dot(w * inst.inputs().col(rho)) / d;
      (mu == rho ? diag : off).push_back(s);
    }
  }
  for (double x : diag) dm += x;
  dm /= diag.size();
  for (double x : diag) dv += (x - dm) * (x - dm);
  dv /= diag.size();
  for (double x : off) om += x;
  om /= off.size();
  for (double x : off) ov += (x - om) * (x - om);
  ov /= off.size();
  const auto stats = hebbian_score_stats(inst);
  CHECK(stats.diag_mean == doctest::Approx(dm).epsilon(1e-12));
  CHECK(stats.diag_var == doctest::Approx(dv).epsilon(1e-10));
  CHECK(stats.offdiag_mean == doctest::Approx(om).epsilon(1e-10));
  CHECK(stats.offdiag_var == doctest::Approx(ov).epsilon(1e-10));
  CHECK(stats.offdiag_count == p * (p - 1));
}

TEST_CASE("single association has no off-diagonal pairs") {
  Eigen::MatrixXd e(3, 1), u(3, 1);
  e << 1, 2, 3;
  u << 1, 0, -1;
  const auto stats = hebbian_score_stats(e, u);
  CHECK(stats.offdiag_count == 0);
  CHECK(stats.offdiag_var == 0.0);
  // s = (1/d^2) |u|^2 |e|^2 = 2 * 14 / 9
  CHECK(stats.diag_mean == doctest::Approx(28.0 / 9.0));
}

TEST_CASE("off-diagonal variance matches its exact Gaussian moment") {
  // Var s_{mu rho} = (p + 2d + 2) / d^2 for standard Gaussian embeddings.
  const int d = 60, p = 300;
  double mean_var = 0;
  const int reps = 4;
  for (int r = 0; r < reps; ++r) mean_var += hebbian_score_stats(sample_instance(d, p, Mode::OP, 50 + r)).offdiag_var;
  mean_var /= reps;
  CHECK(mean_var == doctest::Approx((p + 2.0 * d + 2.0) / (d * d)).epsilon(0.05));
}

TEST_CASE("rate function infimum matches a ternary search") {
  // Both branches are convex and the slope jumps up at the knee, so J is convex.
  for (double alpha : {0.01, 0.05, 0.1, 0.125, 0.2, 0.3, 0.5, 1.0}) {
    double lo = -1.0, hi = 3.0;
    for (int i = 0; i < 300; ++i) {
      const double a = lo + (hi - lo) / 3, b = hi - (hi - lo) / 3;
      if (rate_function(alpha, a) < rate_function(alpha, b)) {
        hi = b;
      } else {
        lo = a;
      }
    }
    CHECK(rate_function_inf(alpha) == doctest::Approx(rate_function(alpha, 0.5 * (lo + hi))).epsilon(1e-12));
  }
  // The Hebbian heuristic threshold: inf J = 1 at alpha = 1/8.
  CHECK(rate_function_inf(0.125) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("heuristic row failure agrees with quadrature") {
  const double alpha = 0.3;
  const int p = 50;
  const double sigma = std::sqrt(alpha / std::log(static_cast<double>(p)));
  // Trapezoid over the diagonal score density.
  double ref = 0;
  const int n = 20000;
  const double lo = 1 - 10 * sigma, hi = 1 + 10 * sigma, h = (hi - lo) / n;
  for (int i = 0; i <= n; ++i) {
    const double x = lo + i * h;
    const double dens = std::exp(-0.5 * (x - 1) * (x - 1) / (sigma * sigma)) / (sigma * std::sqrt(2 * M_PI));
    const double fail = 1 - std::pow(phi_cdf(x / sigma), p - 1);
    ref += (i == 0 || i == n ? 0.5 : 1.0) * dens * fail * h;
  }
  const auto est = hebb_heuristic_success(alpha, p, 200000, 9);
  CHECK(std::abs(est.row_failure - ref) < 5 * est.row_failure_stderr);
  CHECK(est.probability == doctest::Approx(std::pow(1 - est.row_failure, p)).epsilon(1e-12));
  CHECK(hebb_heuristic_success(0.0, p, 10, 1).probability == 1.0);
}
