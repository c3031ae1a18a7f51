#pragma once

#include <functional>
#include <string_view>
#include <vector>

#include "assocmem/model.hpp"

namespace assocmem {

enum class SpectrumNormalization { Raw, TopEqualsTwo };
std::string_view to_string(SpectrumNormalization normalization);

struct Spectrum {
  /// Descending, length d (factored models are padded with exact zeros).
  std::vector<double> values;
  SpectrumNormalization normalization = SpectrumNormalization::Raw;
  /// Fraction of values that are zero up to rounding.
  double zero_fraction = 0.0;
  /// Factor that was applied to the raw singular values.
  double scale = 1.0;

  /// Values above the zero threshold, ascending.
  std::vector<double> nonzero_ascending() const;
};

/// Singular values of the effective weight. Factored models are handled via
/// thin QR of Q and R and an SVD of the m x m core, never forming Q R^T.
Spectrum svd_spectrum(const WeightModel& model, SpectrumNormalization normalization);

/// Density of a singular-value law: continuous part on `grid` plus a point
/// mass at zero. When `conditional_cdf` is set it is the exact CDF of the
/// continuous part normalized to 1; otherwise the CDF is integrated from the
/// grid.
struct DensityCurve {
  std::vector<double> grid;
  std::vector<double> density;
  double point_mass_at_zero = 0.0;
  std::function<double(double)> conditional_cdf;

  /// Trapezoid integral of the continuous part.
  double continuous_mass() const;
  double conditional_cdf_at(double sigma) const;
  /// sigma -> c sigma for all grid points, density -> density / c.
  DensityCurve rescaled(double factor) const;
};

/// Quarter-circle law (1/pi) sqrt(4 - s^2) on [0, 2].
double quarter_circle(double sigma);
double quarter_circle_cdf(double sigma);
double quarter_circle_quantile(double u);

/// n equally spaced points on [lo, hi].
std::vector<double> linear_grid(double lo, double hi, int n = 512);

/// Spectrum at capacity: point mass 1-kappa at zero plus the quarter-circle
/// density restricted to [X_qc(1-kappa), 2].
DensityCurve rho_c_curve(double kappa, const std::vector<double>& grid);
double rho_c_lower_edge(double kappa);

/// Singular-value law at initialization of W = Q R^T / d, with Q, R d x m
/// having i.i.d. N(0, 1) entries. The nonzero squared singular values have
/// Stieltjes transform G solving
///   k^2 x^2 G^3 + 2k(1-k) x G^2 + ((1-k)^2 - x) G + 1 = 0
/// and mean 1; the remaining fraction 1-k sits at zero.
double init_density_sq(double kappa, double x);   ///< density of nonzero x = sigma^2
/// Continuous part of the sigma-density (integrates to kappa).
double init_density_value(double kappa, double sigma);
/// Support [lo, hi] of the nonzero squared singular values.
std::pair<double, double> init_support_sq(double kappa);
DensityCurve init_density(double kappa, const std::vector<double>& grid);

/// sup |F_emp - F| between the nonzero values of `spectrum` and the curve's
/// conditional CDF.
double ks_distance(const Spectrum& spectrum, const DensityCurve& curve);
double ks_distance(std::vector<double> values_ascending, const DensityCurve& curve);

struct Histogram {
  std::vector<double> edges;    ///< bins + 1 ascending edges
  std::vector<double> density;  ///< normalized so that sum(density * width) = 1
  std::vector<long> counts;
};

/// Freedman-Diaconis histogram of `values`.
Histogram histogram_fd(const std::vector<double>& values);

}  // namespace assocmem
