#pragma once

#include <functional>
#include <span>
#include <vector>

namespace assocmem {

double normal_pdf(double x);
double normal_cdf(double x);
double log_normal_pdf(double x);

/// log Phi(x), accurate in both tails. Uses the asymptotic Mills-ratio series
/// below x = -8 and log1p of the upper tail above x = 5.
double log_normal_cdf(double x);

/// phi(x) / Phi(x), evaluated without underflow for very negative x.
double inverse_mills(double x);

/// log(sum_i exp(v_i)); -inf for an empty span.
double log_sum_exp(std::span<const double> values);

/// Gauss-Hermite rule for the standard normal weight:
///   E[g(X)] ~ sum_i exp(log_weight_i) g(node_i),  X ~ N(0, 1).
/// Nodes are ascending. Log weights stay finite even where the weights
/// themselves would underflow.
struct GaussHermiteRule {
  std::vector<double> nodes;
  std::vector<double> log_weights;
};

/// Cached, thread-safe; n >= 1.
const GaussHermiteRule& gauss_hermite(int n);

/// Value at x = 0 of the polynomial interpolating (h_i, y_i) (Neville).
double neville_at_zero(std::span<const double> h, std::span<const double> y);

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
};

/// Ordinary least squares y = intercept + slope x; needs >= 2 distinct x.
LineFit fit_line(std::span<const double> x, std::span<const double> y);

struct GoldenResult {
  double x = 0.0;
  double value = 0.0;
  int evaluations = 0;
};

/// Golden-section search for a minimum of f on [lo, hi] down to width `tol`.
GoldenResult golden_section_minimize(const std::function<double(double)>& f, double lo,
                                     double hi, double tol);

/// Bin width h = 2 IQR n^(-1/3); returns the number of bins spanning [min, max]
/// (at least 1).
int freedman_diaconis_bins(std::span<const double> values);

/// Quantile of sorted data with linear interpolation between order statistics.
double sorted_quantile(std::span<const double> sorted, double u);

}  // namespace assocmem
