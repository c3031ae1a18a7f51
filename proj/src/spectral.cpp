#include "assocmem/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include <Eigen/QR>
#include <Eigen/SVD>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <boost/math/tools/roots.hpp>

#include "assocmem/errors.hpp"
#include "assocmem/numerics.hpp"

namespace assocmem {

std::string_view to_string(SpectrumNormalization normalization) {
  return normalization == SpectrumNormalization::Raw ? "raw" : "top_equals_2";
}

namespace {

double zero_threshold(double top, std::size_t n) {
  return top * static_cast<double>(std::max<std::size_t>(n, 1)) *
         std::numeric_limits<double>::epsilon() * 10.0;
}

}  // namespace

std::vector<double> Spectrum::nonzero_ascending() const {
  std::vector<double> out;
  if (values.empty()) return out;
  const double tol = zero_threshold(values.front(), values.size());
  for (double v : values) {
    if (v > tol) out.push_back(v);
  }
  std::sort(out.begin(), out.end());
  return out;
}

Spectrum svd_spectrum(const WeightModel& model, SpectrumNormalization normalization) {
  const int d = model.d();
  if (d < 1) throw std::invalid_argument("svd_spectrum: empty model");
  Eigen::VectorXd sv;
  if (model.is_factored()) {
    const int m = model.m();
    const Eigen::HouseholderQR<Eigen::MatrixXd> qr_q(model.q());
    const Eigen::HouseholderQR<Eigen::MatrixXd> qr_r(model.r());
    // Q R^T = Q1 (Tq Tr^T) Q2^T with orthonormal Q1, Q2; only the core matters.
    const Eigen::MatrixXd tq = qr_q.matrixQR().topRows(m).triangularView<Eigen::Upper>();
    const Eigen::MatrixXd tr = qr_r.matrixQR().topRows(m).triangularView<Eigen::Upper>();
    const Eigen::MatrixXd core = tq * tr.transpose();
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(core);
    sv = Eigen::VectorXd::Zero(d);
    sv.head(m) = svd.singularValues();
  } else {
    Eigen::BDCSVD<Eigen::MatrixXd> svd(model.w());
    if (svd.info() != Eigen::Success) throw NumericError("SVD failed");
    sv = svd.singularValues();
  }
  if (!sv.allFinite()) throw NumericError("SVD produced non-finite singular values");

  Spectrum out;
  out.values.assign(sv.data(), sv.data() + sv.size());
  std::sort(out.values.begin(), out.values.end(), std::greater<>());
  const double top = out.values.front();
  const double tol = zero_threshold(top, out.values.size());
  long zeros = 0;
  for (double& v : out.values) {
    if (v <= tol) {
      v = 0.0;
      ++zeros;
    }
  }
  out.zero_fraction = static_cast<double>(zeros) / d;
  out.normalization = normalization;
  if (normalization == SpectrumNormalization::TopEqualsTwo && top > 0.0) {
    out.scale = 2.0 / top;
    for (double& v : out.values) v *= out.scale;
    out.values.front() = 2.0;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Density curves

double DensityCurve::continuous_mass() const {
  double mass = 0.0;
  for (std::size_t i = 1; i < grid.size(); ++i) {
    mass += 0.5 * (density[i] + density[i - 1]) * (grid[i] - grid[i - 1]);
  }
  return mass;
}

double DensityCurve::conditional_cdf_at(double sigma) const {
  if (conditional_cdf) return std::clamp(conditional_cdf(sigma), 0.0, 1.0);
  const double total = continuous_mass();
  if (!(total > 0.0) || grid.empty()) return sigma >= 0.0 ? 1.0 : 0.0;
  if (sigma <= grid.front()) return 0.0;
  double mass = 0.0;
  for (std::size_t i = 1; i < grid.size(); ++i) {
    const double a = grid[i - 1], b = grid[i];
    if (sigma <= b) {
      const double frac = (sigma - a) / (b - a);
      const double at_sigma = density[i - 1] + frac * (density[i] - density[i - 1]);
      mass += 0.5 * (density[i - 1] + at_sigma) * (sigma - a);
      return std::clamp(mass / total, 0.0, 1.0);
    }
    mass += 0.5 * (density[i] + density[i - 1]) * (b - a);
  }
  return 1.0;
}

DensityCurve DensityCurve::rescaled(double factor) const {
  if (!(factor > 0.0)) throw std::invalid_argument("rescaled: factor must be positive");
  DensityCurve out = *this;
  for (double& s : out.grid) s *= factor;
  for (double& v : out.density) v /= factor;
  if (conditional_cdf) {
    auto inner = conditional_cdf;
    out.conditional_cdf = [inner, factor](double s) { return inner(s / factor); };
  }
  return out;
}

double quarter_circle(double sigma) {
  if (!(sigma >= 0.0 && sigma <= 2.0)) throw std::domain_error("quarter_circle: sigma outside [0, 2]");
  return std::sqrt(std::max(0.0, 4.0 - sigma * sigma)) / std::numbers::pi;
}

double quarter_circle_cdf(double sigma) {
  if (!(sigma >= 0.0 && sigma <= 2.0)) {
    throw std::domain_error("quarter_circle_cdf: sigma outside [0, 2]");
  }
  const double root = std::sqrt(std::max(0.0, 4.0 - sigma * sigma));
  const double value = (0.5 * sigma * root + 2.0 * std::asin(0.5 * sigma)) / std::numbers::pi;
  return std::clamp(value, 0.0, 1.0);
}

double quarter_circle_quantile(double u) {
  if (!(u >= 0.0 && u <= 1.0)) throw std::domain_error("quarter_circle_quantile: u outside [0, 1]");
  if (u == 0.0) return 0.0;
  if (u == 1.0) return 2.0;
  std::uintmax_t max_iter = 200;
  const auto bracket = boost::math::tools::toms748_solve(
      [u](double s) { return quarter_circle_cdf(s) - u; }, 0.0, 2.0, -u, 1.0 - u,
      boost::math::tools::eps_tolerance<double>(52), max_iter);
  return 0.5 * (bracket.first + bracket.second);
}

std::vector<double> linear_grid(double lo, double hi, int n) {
  if (n < 2 || !(hi > lo)) throw std::invalid_argument("linear_grid: need n >= 2 and hi > lo");
  std::vector<double> grid(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) grid[static_cast<std::size_t>(i)] = lo + (hi - lo) * i / (n - 1);
  grid.back() = hi;
  return grid;
}

namespace {

void check_kappa(double kappa) {
  if (!(kappa > 0.0 && kappa <= 1.0)) throw std::invalid_argument("kappa must lie in (0, 1]");
}

}  // namespace

double rho_c_lower_edge(double kappa) {
  check_kappa(kappa);
  return quarter_circle_quantile(1.0 - kappa);
}

DensityCurve rho_c_curve(double kappa, const std::vector<double>& grid) {
  const double edge = rho_c_lower_edge(kappa);
  DensityCurve curve;
  curve.grid = grid;
  curve.point_mass_at_zero = 1.0 - kappa;
  curve.density.reserve(grid.size());
  for (double s : grid) {
    curve.density.push_back(s >= edge && s <= 2.0 ? quarter_circle(s) : 0.0);
  }
  curve.conditional_cdf = [kappa, edge](double s) {
    if (s <= edge) return 0.0;
    if (s >= 2.0) return 1.0;
    return (quarter_circle_cdf(s) - (1.0 - kappa)) / kappa;
  };
  return curve;
}

// ---------------------------------------------------------------------------
// Initialization spectrum

double init_density_sq(double kappa, double x) {
  check_kappa(kappa);
  // Below 1e-30 the kappa = 1 singularity x^(-2/3) carries mass < 1e-10
  // and the normalized coefficients would overflow.
  if (!(x > 1e-30)) return 0.0;
  const double k1 = 1.0 - kappa;
  const double a3 = kappa * kappa * x * x;
  const double b = 2.0 * kappa * k1 * x / a3;
  const double c = (k1 * k1 - x) / a3;
  const double d = 1.0 / a3;
  // Depressed cubic y^3 + P y + Q = 0 with G = y - b/3.
  const double big_p = c - b * b / 3.0;
  const double big_q = 2.0 * b * b * b / 27.0 - b * c / 3.0 + d;
  const double disc = 0.25 * big_q * big_q + big_p * big_p * big_p / 27.0;
  if (!(disc > 0.0)) return 0.0;  // three real roots: outside the support
  const double root = std::sqrt(disc);
  const double u = std::cbrt(-0.5 * big_q + root);
  const double v = std::cbrt(-0.5 * big_q - root);
  // Complex pair: -(u+v)/2 +- i sqrt(3)/2 (u - v); density = |Im G| / pi.
  return 0.5 * std::sqrt(3.0) * std::abs(u - v) / std::numbers::pi;
}

double init_density_value(double kappa, double sigma) {
  if (!(sigma > 0.0)) return 0.0;
  return 2.0 * kappa * sigma * init_density_sq(kappa, sigma * sigma);
}

std::pair<double, double> init_support_sq(double kappa) {
  check_kappa(kappa);
  constexpr int kScan = 40000;
  constexpr double kMax = 64.0;
  double first = -1.0, last = -1.0;
  for (int i = 1; i <= kScan; ++i) {
    const double x = kMax * i / kScan;
    if (init_density_sq(kappa, x) > 0.0) {
      if (first < 0.0) first = x;
      last = x;
    }
  }
  if (first < 0.0) throw NumericError("init_support_sq: no support found");
  const double step = kMax / kScan;
  auto refine = [&](double inside, double outside) {
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (inside + outside);
      (init_density_sq(kappa, mid) > 0.0 ? inside : outside) = mid;
    }
    return 0.5 * (inside + outside);
  };
  const double hi = refine(last, last + step);
  const double lo = first - step <= 0.0 ? 0.0 : refine(first, first - step);
  return {lo, hi};
}

DensityCurve init_density(double kappa, const std::vector<double>& grid) {
  const auto [lo_sq, hi_sq] = init_support_sq(kappa);
  DensityCurve curve;
  curve.grid = grid;
  curve.point_mass_at_zero = 1.0 - kappa;
  curve.density.reserve(grid.size());
  for (double s : grid) curve.density.push_back(init_density_value(kappa, s));
  curve.conditional_cdf = [kappa, lo_sq, hi_sq](double s) {
    const double x = s * s;
    if (s <= 0.0 || x <= lo_sq) return 0.0;
    if (x >= hi_sq) return 1.0;
    boost::math::quadrature::tanh_sinh<double> integrator;
    const double mass = integrator.integrate(
        [kappa](double t) { return init_density_sq(kappa, t); }, lo_sq, x);
    return mass;
  };
  return curve;
}

// ---------------------------------------------------------------------------

double ks_distance(std::vector<double> values, const DensityCurve& curve) {
  if (values.empty()) {
    if (curve.point_mass_at_zero >= 1.0 - 1e-12) return 0.0;
    throw std::invalid_argument("ks_distance: spectrum has no nonzero values");
  }
  std::sort(values.begin(), values.end());
  const double n = static_cast<double>(values.size());
  double worst = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double f = curve.conditional_cdf_at(values[i]);
    worst = std::max({worst, f - static_cast<double>(i) / n, static_cast<double>(i + 1) / n - f});
  }
  return worst;
}

double ks_distance(const Spectrum& spectrum, const DensityCurve& curve) {
  return ks_distance(spectrum.nonzero_ascending(), curve);
}

Histogram histogram_fd(const std::vector<double>& values) {
  if (values.empty()) throw std::invalid_argument("histogram_fd: no values");
  const int bins = freedman_diaconis_bins(values);
  const auto [min_it, max_it] = std::minmax_element(values.begin(), values.end());
  double lo = *min_it, hi = *max_it;
  if (!(hi > lo)) {
    lo -= 0.5;
    hi += 0.5;
  }
  Histogram h;
  h.edges = linear_grid(lo, hi, bins + 1);
  h.counts.assign(static_cast<std::size_t>(bins), 0);
  const double width = (hi - lo) / bins;
  for (double v : values) {
    auto idx = static_cast<long>((v - lo) / width);
    idx = std::clamp<long>(idx, 0, bins - 1);
    ++h.counts[static_cast<std::size_t>(idx)];
  }
  h.density.resize(static_cast<std::size_t>(bins));
  for (int i = 0; i < bins; ++i) {
    h.density[static_cast<std::size_t>(i)] =
        static_cast<double>(h.counts[static_cast<std::size_t>(i)]) / (values.size() * width);
  }
  return h;
}

}  // namespace assocmem
