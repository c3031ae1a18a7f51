#include "assocmem/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <stdexcept>

#include <Eigen/Eigenvalues>

namespace assocmem {

namespace {

constexpr double kLogSqrt2Pi = 0.91893853320467274178;  // log(sqrt(2 pi))
constexpr double kInvSqrt2 = 0.70710678118654752440;

// sum_k (-1)^k (2k-1)!! / x^(2k), the asymptotic factor in
// Phi(x) ~ phi(x) / (-x) * series(x) for x -> -inf.
double mills_series(double x) {
  const double inv_x2 = 1.0 / (x * x);
  double term = 1.0;
  double sum = 1.0;
  for (int k = 1; k < 200; ++k) {
    const double next = -term * (2 * k - 1) * inv_x2;
    if (std::abs(next) >= std::abs(term)) break;  // series starts diverging
    term = next;
    sum += term;
    if (std::abs(term) < 1e-17 * std::abs(sum)) break;
  }
  return sum;
}

}  // namespace

double normal_pdf(double x) { return std::exp(log_normal_pdf(x)); }

double log_normal_pdf(double x) { return -0.5 * x * x - kLogSqrt2Pi; }

double normal_cdf(double x) { return 0.5 * std::erfc(-x * kInvSqrt2); }

double log_normal_cdf(double x) {
  if (x > 0.0) return std::log1p(-0.5 * std::erfc(x * kInvSqrt2));
  if (x >= -8.0) return std::log(0.5 * std::erfc(-x * kInvSqrt2));
  return log_normal_pdf(x) - std::log(-x) + std::log(mills_series(x));
}

double inverse_mills(double x) {
  if (x < -8.0) return -x / mills_series(x);
  return std::exp(log_normal_pdf(x) - log_normal_cdf(x));
}

double log_sum_exp(std::span<const double> values) {
  if (values.empty()) return -std::numeric_limits<double>::infinity();
  const double top = *std::max_element(values.begin(), values.end());
  if (!std::isfinite(top)) return top;
  double sum = 0.0;
  for (double v : values) sum += std::exp(v - top);
  return top + std::log(sum);
}

// ---------------------------------------------------------------------------
// Gauss-Hermite

namespace {

// Orthonormal probabilists' Hermite polynomials p_{n-1}(x), p_n(x), sharing a
// log scale so that large |x| does not overflow: true value = value * exp(log_scale).
struct HermitePair {
  double prev = 0.0;
  double cur = 0.0;
  double log_scale = 0.0;
};

HermitePair hermite_pair(int n, double x) {
  HermitePair h{0.0, 1.0, 0.0};  // p_{-1}, p_0
  for (int k = 0; k < n; ++k) {
    // p_{k+1} = (x p_k - sqrt(k) p_{k-1}) / sqrt(k+1)
    const double next = (x * h.cur - std::sqrt(static_cast<double>(k)) * h.prev) /
                        std::sqrt(static_cast<double>(k + 1));
    h.prev = h.cur;
    h.cur = next;
    if (std::abs(h.cur) > 1e150) {
      h.prev *= 1e-150;
      h.cur *= 1e-150;
      h.log_scale += 150.0 * std::numbers::ln10;
    }
  }
  return h;
}

GaussHermiteRule build_rule(int n) {
  GaussHermiteRule rule;
  rule.nodes.resize(static_cast<std::size_t>(n));
  rule.log_weights.resize(static_cast<std::size_t>(n));
  if (n == 1) {
    rule.nodes[0] = 0.0;
    rule.log_weights[0] = 0.0;
    return rule;
  }
  // Golub-Welsch: nodes are the eigenvalues of the Jacobi matrix.
  Eigen::VectorXd diag = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd sub(n - 1);
  for (int k = 1; k < n; ++k) sub(k - 1) = std::sqrt(static_cast<double>(k));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver;
  solver.computeFromTridiagonal(diag, sub, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) throw std::runtime_error("Gauss-Hermite eigensolve failed");
  const double sqrt_n = std::sqrt(static_cast<double>(n));
  for (int i = 0; i < n; ++i) {
    double x = solver.eigenvalues()(i);
    // Newton polish on p_n, with p_n' = sqrt(n) p_{n-1}.
    for (int it = 0; it < 4; ++it) {
      const HermitePair h = hermite_pair(n, x);
      const double dx = h.cur / (sqrt_n * h.prev);
      x -= dx;
      if (std::abs(dx) <= 1e-16 * std::max(1.0, std::abs(x))) break;
    }
    const HermitePair h = hermite_pair(n, x);
    // w_i = 1 / (n p_{n-1}(x_i)^2)
    rule.nodes[static_cast<std::size_t>(i)] = x;
    rule.log_weights[static_cast<std::size_t>(i)] =
        -std::log(static_cast<double>(n)) - 2.0 * (std::log(std::abs(h.prev)) + h.log_scale);
  }
  // Exact symmetry of the rule.
  for (int i = 0; i < n / 2; ++i) {
    const auto a = static_cast<std::size_t>(i);
    const auto b = static_cast<std::size_t>(n - 1 - i);
    const double node = 0.5 * (rule.nodes[b] - rule.nodes[a]);
    const double lw = 0.5 * (rule.log_weights[a] + rule.log_weights[b]);
    rule.nodes[a] = -node;
    rule.nodes[b] = node;
    rule.log_weights[a] = rule.log_weights[b] = lw;
  }
  if (n % 2 == 1) rule.nodes[static_cast<std::size_t>(n / 2)] = 0.0;
  return rule;
}

}  // namespace

const GaussHermiteRule& gauss_hermite(int n) {
  if (n < 1) throw std::invalid_argument("gauss_hermite: n must be >= 1");
  static std::mutex mutex;
  static std::map<int, std::unique_ptr<GaussHermiteRule>> cache;
  std::lock_guard lock(mutex);
  auto& slot = cache[n];
  if (!slot) slot = std::make_unique<GaussHermiteRule>(build_rule(n));
  return *slot;
}

// ---------------------------------------------------------------------------

double neville_at_zero(std::span<const double> h, std::span<const double> y) {
  if (h.size() != y.size() || h.empty()) {
    throw std::invalid_argument("neville_at_zero: need matching, non-empty inputs");
  }
  std::vector<double> p(y.begin(), y.end());
  const std::size_t n = p.size();
  for (std::size_t level = 1; level < n; ++level) {
    for (std::size_t i = 0; i + level < n; ++i) {
      const double hi = h[i];
      const double hj = h[i + level];
      if (hi == hj) throw std::invalid_argument("neville_at_zero: repeated abscissa");
      p[i] = (hj * p[i] - hi * p[i + 1]) / (hj - hi);
    }
  }
  return p[0];
}

LineFit fit_line(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) {
    throw std::invalid_argument("fit_line: need at least two points");
  }
  const auto n = static_cast<Eigen::Index>(x.size());
  Eigen::MatrixXd design(n, 2);
  Eigen::VectorXd rhs(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    design(i, 0) = 1.0;
    design(i, 1) = x[static_cast<std::size_t>(i)];
    rhs(i) = y[static_cast<std::size_t>(i)];
  }
  const Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
  if (qr.rank() < 2) throw std::invalid_argument("fit_line: x values are all equal");
  const Eigen::Vector2d coef = qr.solve(rhs);
  const Eigen::VectorXd resid = rhs - design * coef;
  const double ss_tot = (rhs.array() - rhs.mean()).square().sum();
  LineFit fit;
  fit.intercept = coef(0);
  fit.slope = coef(1);
  fit.r_squared = ss_tot > 0.0 ? 1.0 - resid.squaredNorm() / ss_tot : 1.0;
  return fit;
}

GoldenResult golden_section_minimize(const std::function<double(double)>& f, double lo,
                                     double hi, double tol) {
  if (!(hi >= lo)) throw std::invalid_argument("golden_section_minimize: empty interval");
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  GoldenResult out;
  double a = lo, b = hi;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = f(c), fd = f(d);
  out.evaluations = 2;
  while (b - a > tol) {
    if (fc <= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = f(d);
    }
    ++out.evaluations;
  }
  if (fc <= fd) {
    out.x = c;
    out.value = fc;
  } else {
    out.x = d;
    out.value = fd;
  }
  return out;
}

double sorted_quantile(std::span<const double> sorted, double u) {
  if (sorted.empty()) throw std::invalid_argument("sorted_quantile: empty data");
  const double pos = std::clamp(u, 0.0, 1.0) * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

int freedman_diaconis_bins(std::span<const double> values) {
  if (values.empty()) return 1;
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  const double iqr = sorted_quantile(sorted, 0.75) - sorted_quantile(sorted, 0.25);
  const double span = sorted.back() - sorted.front();
  const double width = 2.0 * iqr * std::cbrt(1.0 / static_cast<double>(sorted.size()));
  if (!(width > 0.0) || !(span > 0.0)) return 1;
  return std::max(1, static_cast<int>(std::ceil(span / width)));
}

}  // namespace assocmem
