#include "assocmem/theory.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "assocmem/errors.hpp"
#include "assocmem/numerics.hpp"
#include "assocmem/rng.hpp"
#include "assocmem/spectral.hpp"

namespace assocmem {

double alpha_c(double kappa) {
  if (!(kappa > 0.0 && kappa <= 1.0)) throw std::invalid_argument("alpha_c: kappa must lie in (0, 1]");
  // s = 2 sin(theta) turns rho_qc(s) s^2 ds into (16/pi) sin^2 cos^2 dtheta,
  // smooth on the whole interval.
  const double theta0 = std::asin(0.5 * quarter_circle_quantile(1.0 - kappa));
  auto integrand = [](double theta) {
    const double sc = std::sin(theta) * std::cos(theta);
    return 16.0 / std::numbers::pi * sc * sc;
  };
  double error = 0.0;
  const double integral = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(
      integrand, theta0, 0.5 * std::numbers::pi, 15, 1e-14, &error);
  return 0.5 * integral;
}

double beta_of(double t) {
  if (!(t >= 0.0 && t <= 1.0 - kTFloor * (1.0 - 1e-12))) {
    throw std::domain_error("t must lie in [0, 1 - t_floor]");
  }
  return std::sqrt(t / (1.0 - t));
}

// ---------------------------------------------------------------------------
// Kernel

namespace {

// Arguments above this contribute below 1e-19 per factor to log Phi.
constexpr double kSkipArgument = 9.0;

// Offsets c_j (ascending) with multiplicities: the integrand is
//   L(xi) = log phi(xi) + sum_j mult_j log Phi(xi + c_j).
struct Terms {
  std::vector<double> c;
  std::vector<double> mult;

  // Number of leading terms with xi + c_j <= kSkipArgument.
  std::size_t active(double xi) const {
    return static_cast<std::size_t>(
        std::upper_bound(c.begin(), c.end(), kSkipArgument - xi) - c.begin());
  }

  double log_integrand(double xi) const {
    double sum = log_normal_pdf(xi);
    const std::size_t n = active(xi);
    for (std::size_t j = 0; j < n; ++j) sum += mult[j] * log_normal_cdf(xi + c[j]);
    return sum;
  }

  // First and second derivative of L.
  void derivatives(double xi, double& first, double& second) const {
    first = -xi;
    second = -1.0;
    const std::size_t n = active(xi);
    for (std::size_t j = 0; j < n; ++j) {
      const double x = xi + c[j];
      const double lam = inverse_mills(x);
      first += mult[j] * lam;
      second -= mult[j] * lam * (x + lam);
    }
  }
};

Terms build_terms(double beta, double lambda, std::span<const double> competitors_desc) {
  Terms terms;
  terms.c.reserve(competitors_desc.size());
  terms.mult.reserve(competitors_desc.size());
  for (double eta : competitors_desc) {
    const double c = -beta * (eta + lambda);
    if (!terms.c.empty() && terms.c.back() == c) {
      terms.mult.back() += 1.0;
    } else {
      terms.c.push_back(c);
      terms.mult.push_back(1.0);
    }
  }
  return terms;
}

// Maximizer of the strictly concave L (L'' <= -1) by bracketed Newton.
double find_mode(const Terms& terms) {
  double g = 0.0, h = 0.0;
  double lo = 0.0, hi = 0.0;
  terms.derivatives(0.0, g, h);
  if (g > 0.0) {
    double step = 1.0;
    hi = step;
    for (terms.derivatives(hi, g, h); g > 0.0; terms.derivatives(hi, g, h)) {
      lo = hi;
      step *= 2.0;
      hi += step;
    }
  } else {
    double step = 1.0;
    lo = -step;
    for (terms.derivatives(lo, g, h); g < 0.0; terms.derivatives(lo, g, h)) {
      hi = lo;
      step *= 2.0;
      lo -= step;
    }
  }
  double xi = 0.5 * (lo + hi);
  for (int it = 0; it < 200; ++it) {
    terms.derivatives(xi, g, h);
    if (g > 0.0) lo = xi; else hi = xi;
    if (g == 0.0 || hi - lo <= 1e-13 * std::max(1.0, std::abs(xi))) break;
    double next = xi - g / h;
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (std::abs(next - xi) <= 1e-14 * std::max(1.0, std::abs(xi))) {
      xi = next;
      break;
    }
    xi = next;
  }
  return xi;
}

double quadrature(const Terms& terms, double mode, double scale, int n) {
  const GaussHermiteRule& rule = gauss_hermite(n);
  std::vector<double> logs(static_cast<std::size_t>(n));
  for (std::size_t i = 0; i < logs.size(); ++i) {
    const double x = rule.nodes[i];
    logs[i] = rule.log_weights[i] + 0.5 * x * x + terms.log_integrand(mode + scale * x);
  }
  constexpr double kLogSqrt2Pi = 0.91893853320467274178;
  return std::log(scale) + kLogSqrt2Pi + log_sum_exp(logs);
}

double kernel(double t, double lambda, std::span<const double> competitors_desc,
              KernelDiagnostics* diagnostics) {
  if (competitors_desc.empty()) throw std::invalid_argument("log_f_p: p must be >= 2");
  const double beta = beta_of(t);
  const Terms terms = build_terms(beta, lambda, competitors_desc);
  const double mode = find_mode(terms);
  double g = 0.0, h = 0.0;
  terms.derivatives(mode, g, h);
  const double scale = 1.0 / std::sqrt(-h);

  double previous = quadrature(terms, mode, scale, 64);
  double change = std::numeric_limits<double>::infinity();
  int nodes = 64;
  for (int n = 128; n <= 512; n *= 2) {
    const double current = quadrature(terms, mode, scale, n);
    change = std::abs(current - previous);
    previous = current;
    nodes = n;
    if (change <= 1e-11) break;
  }
  if (!std::isfinite(previous)) throw NumericError("log f_p is not finite");
  if (diagnostics != nullptr) *diagnostics = {nodes, mode, scale, change};
  // f_p is a probability; clip quadrature round-off above 0.
  return std::min(previous, 0.0);
}

}  // namespace

double log_f_p_sorted(double t, double lambda, std::span<const double> competitors_desc,
                      KernelDiagnostics* diagnostics) {
  return kernel(t, lambda, competitors_desc, diagnostics);
}

double log_f_p_sorted(double t, double lambda, std::span<const double> competitors_desc) {
  return kernel(t, lambda, competitors_desc, nullptr);
}

double log_f_p(double t, std::span<const double> eta_row) {
  if (eta_row.size() < 2) throw std::invalid_argument("log_f_p: p must be >= 2");
  std::vector<double> competitors(eta_row.begin() + 1, eta_row.end());
  std::sort(competitors.begin(), competitors.end(), std::greater<>());
  return kernel(t, -eta_row[0], competitors, nullptr);
}

// ---------------------------------------------------------------------------
// Energetic term

EnergeticSampler::EnergeticSampler(int p, int n_mc, std::uint64_t seed)
    : p_(p), n_mc_(n_mc), seed_(seed) {
  if (p < 2) throw std::invalid_argument("EnergeticSampler: p must be >= 2");
  if (n_mc < 1) throw std::invalid_argument("EnergeticSampler: n_mc must be >= 1");
  lambda_.resize(static_cast<std::size_t>(n_mc));
  competitors_.resize(static_cast<std::size_t>(n_mc) * (p - 1));
  std::vector<double> row(static_cast<std::size_t>(p));
  for (int k = 0; k < n_mc; ++k) {
    fill_normals(seed, StreamRole::MonteCarlo, static_cast<std::uint32_t>(k), 0, row);
    lambda_[static_cast<std::size_t>(k)] = -row[0];
    auto dst = competitors_.begin() + static_cast<std::ptrdiff_t>(k) * (p - 1);
    std::copy(row.begin() + 1, row.end(), dst);
    std::sort(dst, dst + (p - 1), std::greater<>());
  }
}

McEstimate EnergeticSampler::G(double t) const {
  {
    std::lock_guard lock(memo_mutex_);
    if (auto it = memo_.find(t); it != memo_.end()) return it->second;
  }
  McEstimate out;
  if (t == 0.0) {
    out.estimate = -1.0;  // f_p(0) = 1/p exactly by exchangeability
  } else {
    const double log_p = std::log(static_cast<double>(p_));
    double sum = 0.0, sq = 0.0;
    for (int k = 0; k < n_mc_; ++k) {
      const std::span<const double> row(
          competitors_.data() + static_cast<std::size_t>(k) * (p_ - 1),
          static_cast<std::size_t>(p_ - 1));
      const double v = kernel(t, lambda_[static_cast<std::size_t>(k)], row, nullptr) / log_p;
      sum += v;
      sq += v * v;
    }
    const double n = static_cast<double>(n_mc_);
    out.estimate = sum / n;
    const double var = n_mc_ > 1 ? std::max(0.0, (sq - n * out.estimate * out.estimate) / (n - 1)) : 0.0;
    out.std_error = std::sqrt(var / n);
  }
  std::lock_guard lock(memo_mutex_);
  memo_.emplace(t, out);
  return out;
}

McEstimate energetic_G(double t, int p, int n_mc, std::uint64_t seed) {
  return EnergeticSampler(p, n_mc, seed).G(t);
}

GBounds g_bounds(double t, int k) {
  if (k < 1) throw std::invalid_argument("g_bounds: k must be >= 1");
  if (!(t >= 0.0 && t < 1.0)) throw std::domain_error("g_bounds: t must lie in [0, 1)");
  const double beta2 = t / (1.0 - t);
  const double beta = std::sqrt(beta2);
  // At t = 0 the competitors are exchangeable with the target: G(0) = -1.
  if (t == 0.0) return {-1.0, 0.0};
  return {-(1.0 + beta) * (1.0 + beta), -static_cast<double>(k) / (k + 1) * beta2};
}

// ---------------------------------------------------------------------------
// Free entropy

double entropic_term(double q) {
  if (!(q >= 0.0 && q < 1.0)) throw std::domain_error("entropic_term: q must lie in [0, 1)");
  return 0.5 * std::log1p(-q) + q / (2.0 * (1.0 - q));
}

double free_entropy(double alpha, double q, const EnergeticSampler& sampler) {
  const double entropic = entropic_term(q);
  if (alpha == 0.0) return entropic;
  return entropic + alpha * sampler.G(q).estimate;
}

double free_entropy(double alpha, double q, int p, int n_mc, std::uint64_t seed) {
  if (alpha == 0.0) return entropic_term(q);
  return free_entropy(alpha, q, EnergeticSampler(p, n_mc, seed));
}

nlohmann::json FreeEntropyEval::to_json() const {
  return {{"alpha", alpha},           {"p_surrogate", p_surrogate},
          {"q_star", q_star},         {"phi", phi_value},
          {"energetic", energetic_term}, {"mc_samples", mc_samples},
          {"stderr", mc_stderr},      {"at_boundary", at_boundary},
          {"q_floor", q_floor}};
}

FreeEntropyEval minimize_q(double alpha, const EnergeticSampler& sampler,
                           const MinimizeOptions& options) {
  if (!(alpha >= 0.0)) throw std::invalid_argument("minimize_q: alpha must be >= 0");
  if (options.prescan_points < 3) throw std::invalid_argument("minimize_q: prescan_points must be >= 3");
  FreeEntropyEval out;
  out.alpha = alpha;
  out.p_surrogate = sampler.p();
  out.mc_samples = sampler.n_mc();
  if (alpha == 0.0) {
    // Entropic term alone is minimized at q = 0 with value 0.
    out.energetic_term = -1.0;
    return out;
  }
  // Search in s = -log(1 - q), which resolves the approach to q = 1.
  const double s_max = -std::log(kTFloor);
  auto q_of = [](double s) { return -std::expm1(-s); };
  auto phi_of_s = [&](double s) { return free_entropy(alpha, std::min(q_of(s), 1.0 - kTFloor), sampler); };

  const int n = options.prescan_points;
  std::vector<double> grid(static_cast<std::size_t>(n));
  std::vector<double> values(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    grid[static_cast<std::size_t>(i)] = s_max * i / (n - 1);
    values[static_cast<std::size_t>(i)] = phi_of_s(grid[static_cast<std::size_t>(i)]);
  }
  const auto best = static_cast<int>(std::min_element(values.begin(), values.end()) - values.begin());
  double s_star = grid[static_cast<std::size_t>(best)];
  double phi_star = values[static_cast<std::size_t>(best)];
  if (best == n - 1) {
    out.at_boundary = true;
  } else {
    const double lo = grid[static_cast<std::size_t>(std::max(best - 1, 0))];
    const double hi = grid[static_cast<std::size_t>(best + 1)];
    const GoldenResult g = golden_section_minimize(phi_of_s, lo, hi, options.tolerance);
    if (g.value < phi_star) {
      s_star = g.x;
      phi_star = g.value;
    }
  }
  out.q_star = out.at_boundary ? 1.0 - kTFloor : q_of(s_star);
  out.phi_value = phi_star;
  const McEstimate g = sampler.G(out.q_star);
  out.energetic_term = g.estimate;
  out.mc_stderr = g.std_error;
  return out;
}

FreeEntropyEval minimize_q(double alpha, int p, int n_mc, std::uint64_t seed,
                           const MinimizeOptions& options) {
  if (alpha == 0.0) {
    FreeEntropyEval out;
    out.p_surrogate = p;
    out.mc_samples = n_mc;
    out.energetic_term = -1.0;
    return out;
  }
  return minimize_q(alpha, EnergeticSampler(p, n_mc, seed), options);
}

// ---------------------------------------------------------------------------
// Capacity extrapolation

nlohmann::json CapacityEstimate::to_json() const {
  return {{"q", q}, {"values", values}, {"limit", limit},
          {"alpha_c_hat", alpha_c_hat}, {"monotone", monotone}};
}

CapacityEstimate capacity_extrapolation(const std::function<double(double)>& g) {
  CapacityEstimate out;
  std::vector<double> h;
  for (double q : kExtrapolationQ) {
    out.q.push_back(q);
    h.push_back(1.0 - q);
    out.values.push_back(-2.0 * (1.0 - q) * g(q));
  }
  out.limit = neville_at_zero(h, out.values);
  out.alpha_c_hat = 1.0 / out.limit;
  int sign = 0;
  for (std::size_t i = 1; i < out.values.size(); ++i) {
    const double diff = out.values[i] - out.values[i - 1];
    const int s = diff > 0.0 ? 1 : (diff < 0.0 ? -1 : 0);
    if (s == 0) continue;
    if (sign != 0 && s != sign) out.monotone = false;
    sign = s;
  }
  if (!std::isfinite(out.alpha_c_hat) || out.limit <= 0.0) out.monotone = false;
  return out;
}

CapacityEstimate capacity_extrapolation(const EnergeticSampler& sampler) {
  if (sampler.p() < 100) throw std::invalid_argument("capacity_extrapolation: p must be >= 100");
  return capacity_extrapolation([&sampler](double q) { return sampler.G(q).estimate; });
}

CapacityEstimate capacity_extrapolation(int p, int n_mc, std::uint64_t seed) {
  return capacity_extrapolation(EnergeticSampler(p, n_mc, seed));
}

}  // namespace assocmem
