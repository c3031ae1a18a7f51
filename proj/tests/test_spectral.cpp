#include <doctest.h>

#include <cmath>
#include <numeric>

#include <Eigen/SVD>

#include "assocmem/rng.hpp"
#include "assocmem/spectral.hpp"

using namespace assocmem;

namespace {

double qc_cdf_closed_form(double s) {
  return (s * std::sqrt(4 - s * s) / 2 + 2 * std::asin(s / 2)) / M_PI;
}

Eigen::MatrixXd gaussian(int rows, int cols, std::uint64_t seed) {
  Eigen::MatrixXd m(rows, cols);
  fill_normals(seed, StreamRole::MonteCarlo, 5, 0, {m.data(), static_cast<std::size_t>(m.size())});
  return m;
}

double trapezoid(const std::vector<double>& x, const std::vector<double>& y) {
  double s = 0;
  for (std::size_t i = 1; i < x.size(); ++i) s += 0.5 * (x[i] - x[i - 1]) * (y[i] + y[i - 1]);
  return s;
}

}  // namespace

TEST_CASE("quarter-circle law, CDF and quantile") {
  for (double s : {0.0, 0.3, 1.0, 1.7, 2.0}) CHECK(quarter_circle_cdf(s) == doctest::Approx(qc_cdf_closed_form(s)).epsilon(1e-14));
  const auto grid = linear_grid(0, 2, 200001);
  std::vector<double> dens;
  for (double s : grid) dens.push_back(quarter_circle(s));
  CHECK(trapezoid(grid, dens) == doctest::Approx(1.0).epsilon(1e-6));
  for (double u : {0.01, 0.25, 0.5, 0.75, 0.99}) CHECK(quarter_circle_cdf(quarter_circle_quantile(u)) == doctest::Approx(u).epsilon(1e-12));
  CHECK_THROWS(quarter_circle(2.5));
  CHECK(quarter_circle_quantile(0.0) == 0.0);
  CHECK(quarter_circle_quantile(1.0) == doctest::Approx(2.0));
}

TEST_CASE("spectrum of a scaled identity is all twos") {
  const auto s = svd_spectrum(WeightModel::full_rank(3.7 * Eigen::MatrixXd::Identity(6, 6)), SpectrumNormalization::TopEqualsTwo);
  for (double v : s.values) CHECK(v == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(s.zero_fraction == 0.0);
  CHECK(s.scale == doctest::Approx(2.0 / 3.7));
}

TEST_CASE("factored spectrum matches the SVD of the dense product") {
  const Eigen::MatrixXd q = gaussian(30, 7, 1), r = gaussian(30, 7, 2);
  const auto s = svd_spectrum(WeightModel::factored(q, r), SpectrumNormalization::Raw);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(q * r.transpose());
  const Eigen::VectorXd ref = svd.singularValues();
  REQUIRE(s.values.size() == 30);
  for (int i = 0; i < 7; ++i) CHECK(s.values[i] == doctest::Approx(ref(i)).epsilon(1e-11));
  for (int i = 7; i < 30; ++i) CHECK(s.values[i] == 0.0);
  CHECK(s.zero_fraction == doctest::Approx(23.0 / 30.0));
  CHECK(s.nonzero_ascending().size() == 7);
}

TEST_CASE("capacity law: masses, edge and conditional CDF") {
  CHECK(rho_c_lower_edge(1.0) == 0.0);
  for (double kappa : {0.25, 0.5, 1.0}) {
    const auto grid = linear_grid(0, 2, 20001);
    const auto curve = rho_c_curve(kappa, grid);
    CHECK(curve.point_mass_at_zero == doctest::Approx(1 - kappa));
    CHECK(curve.continuous_mass() == doctest::Approx(kappa).epsilon(1e-4));
    const double edge = rho_c_lower_edge(kappa);
    CHECK(qc_cdf_closed_form(edge) == doctest::Approx(1 - kappa).epsilon(1e-12));
    CHECK(curve.conditional_cdf_at(edge) == doctest::Approx(0.0).scale(1.0).epsilon(1e-12));
    CHECK(curve.conditional_cdf_at(2.0) == doctest::Approx(1.0));
    const double mid = 0.5 * (edge + 2.0);
    CHECK(curve.conditional_cdf_at(mid) == doctest::Approx((qc_cdf_closed_form(mid) - (1 - kappa)) / kappa).epsilon(1e-12));
  }
  CHECK(rho_c_lower_edge(0.5) == doctest::Approx(0.807946).epsilon(1e-6));
}

TEST_CASE("initialization law matches sampled Q R^T / d") {
  for (double kappa : {0.5, 1.0}) {
    const int d = 400;
    const int m = static_cast<int>(kappa * d);
    const Eigen::MatrixXd w = gaussian(d, m, 11) * gaussian(d, m, 12).transpose() / d;
    Eigen::BDCSVD<Eigen::MatrixXd> svd(w);
    std::vector<double> sv(svd.singularValues().data(), svd.singularValues().data() + m);
    std::sort(sv.begin(), sv.end());
    const auto [lo, hi] = init_support_sq(kappa);
    const auto curve = init_density(kappa, linear_grid(0, std::sqrt(hi), 4001));
    CHECK(curve.point_mass_at_zero == doctest::Approx(1 - kappa));
    // The kappa = 1 density diverges like sigma^(-1/3) at zero, so only check the grid mass below 1.
    if (kappa < 1) CHECK(curve.continuous_mass() == doctest::Approx(kappa).epsilon(2e-3));
    CHECK(curve.conditional_cdf_at(std::sqrt(hi)) == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(ks_distance(sv, curve) < 0.03);
    CHECK(sv.back() * sv.back() == doctest::Approx(hi).epsilon(0.05));
    if (kappa < 1) CHECK(sv.front() * sv.front() == doctest::Approx(lo).epsilon(0.15));
  }
  // Mean of the nonzero squared singular values is one.
  const auto [lo, hi] = init_support_sq(0.25);
  double mean = 0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double x = lo + (hi - lo) * (i + 0.5) / n;
    mean += x * init_density_sq(0.25, x) * (hi - lo) / n;
  }
  CHECK(mean == doctest::Approx(1.0).epsilon(1e-3));
}

TEST_CASE("KS distance on hand-checked cases") {
  const auto curve = rho_c_curve(1.0, linear_grid(0, 2, 101));
  const double median = quarter_circle_quantile(0.5);
  CHECK(ks_distance(std::vector<double>{median}, curve) == doctest::Approx(0.5).epsilon(1e-12));
  std::vector<double> quantiles;
  for (int i = 0; i < 100; ++i) quantiles.push_back(quarter_circle_quantile((i + 0.5) / 100));
  CHECK(ks_distance(quantiles, curve) == doctest::Approx(0.005).epsilon(1e-9));
}

TEST_CASE("Freedman-Diaconis histogram is a density") {
  std::vector<double> v(1000);
  fill_normals(3, StreamRole::MonteCarlo, 0, 0, v);
  const auto h = histogram_fd(v);
  CHECK(std::accumulate(h.counts.begin(), h.counts.end(), 0L) == 1000);
  double mass = 0;
  for (std::size_t i = 0; i < h.density.size(); ++i) mass += h.density[i] * (h.edges[i + 1] - h.edges[i]);
  CHECK(mass == doctest::Approx(1.0));
  CHECK(h.edges.size() == h.counts.size() + 1);
}
