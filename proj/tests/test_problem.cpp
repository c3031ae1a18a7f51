#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "assocmem/problem.hpp"

using namespace assocmem;

TEST_CASE("alpha_of matches p ln p / d^2") {
  CHECK(alpha_of(100, 10) == doctest::Approx(100 * std::log(100.0) / 100.0).epsilon(1e-15));
  CHECK(alpha_of(2, 1) == doctest::Approx(2 * std::log(2.0)).epsilon(1e-15));
}

TEST_CASE("p_from_alpha picks the integer closest in p ln p") {
  for (int d : {10, 40, 50, 150, 300}) {
    for (double alpha : {0.05, 0.2, 0.5, 1.0, 1.4}) {
      const int p = p_from_alpha(alpha, d);
      const double target = alpha * d * d;
      // Brute-force oracle over a window around the answer.
      int best = 2;
      double best_gap = std::abs(2 * std::log(2.0) - target);
      for (int q = 2; q < 20 * d * d; ++q) {
        const double gap = std::abs(q * std::log(static_cast<double>(q)) - target);
        if (gap < best_gap) {
          best_gap = gap;
          best = q;
        }
        if (q * std::log(static_cast<double>(q)) > target + 10 * d) break;
      }
      CHECK(p == best);
      // Rounding slack in alpha is at most half a step of p ln p.
      CHECK(std::abs(alpha_of(p, d) - alpha) <= (std::log(p + 1.0) + 1.0) / (d * d));
    }
  }
  CHECK(p_from_alpha(1e-9, 10) == 2);
  CHECK_THROWS_AS(p_from_alpha(-1.0, 10), std::invalid_argument);
  CHECK_THROWS_AS(p_from_alpha(0.5, 0), std::invalid_argument);
}

TEST_CASE("instances are deterministic in the master seed") {
  const auto a = sample_instance(8, 5, Mode::OP, 99);
  const auto b = sample_instance(8, 5, Mode::OP, 99);
  const auto c = sample_instance(8, 5, Mode::OP, 100);
  CHECK(a.inputs() == b.inputs());
  CHECK(a.outputs_shared() == b.outputs_shared());
  CHECK(a.inputs() != c.inputs());
  CHECK(a.inputs() != a.outputs_shared());
}

TEST_CASE("OP and DP share inputs for the same seed") {
  const auto op = sample_instance(6, 4, Mode::OP, 5);
  const auto dp = sample_instance(6, 4, Mode::DP, 5);
  CHECK(op.inputs() == dp.inputs());
  CHECK(dp.outputs_shared().size() == 0);
  CHECK(dp.per_mu_seed().size() == 4);
}

TEST_CASE("DP blocks regenerate identically and differ across mu") {
  const auto dp = sample_instance(6, 4, Mode::DP, 5);
  Eigen::MatrixXd b0(6, 4), b0_again(6, 4), b1(6, 4);
  dp.fill_output_block(0, b0);
  dp.fill_output_block(0, b0_again);
  dp.fill_output_block(1, b1);
  CHECK(b0 == b0_again);
  CHECK(b0 != b1);
  for (int rho = 0; rho < 4; ++rho) CHECK(dp.output_vector(0, rho) == Eigen::VectorXd(b0.col(rho)));
  CHECK(dp.resident_bytes() < 6 * 4 * 4 * sizeof(double));

  const auto op = sample_instance(6, 4, Mode::OP, 5);
  Eigen::MatrixXd block(6, 4);
  op.fill_output_block(2, block);
  CHECK(block == op.outputs_shared());
  Eigen::MatrixXd wrong(6, 3);
  CHECK_THROWS_AS(op.fill_output_block(0, wrong), std::invalid_argument);
}

TEST_CASE("descriptor round trip") {
  const auto dp = sample_instance(7, 9, Mode::DP, 1234567890123ULL);
  const auto back = instance_from_descriptor(dp.descriptor());
  CHECK(back.d() == 7);
  CHECK(back.p() == 9);
  CHECK(back.mode() == Mode::DP);
  CHECK(back.inputs() == dp.inputs());
  CHECK(back.per_mu_seed() == dp.per_mu_seed());
}

TEST_CASE("invalid instance shapes are rejected") {
  CHECK_THROWS_AS(sample_instance(0, 5, Mode::OP, 1), std::invalid_argument);
  CHECK_THROWS_AS(sample_instance(5, 1, Mode::OP, 1), std::invalid_argument);
}
