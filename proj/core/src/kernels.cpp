#include "tiltlab/kernels.hpp"

#include "tiltlab/chamber.hpp"
#include "kernel_detail.hpp"
#include "tiltlab/rng.hpp"

#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace tiltlab {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

void require_positive(double v, const char* what) {
  if (!(v > 0.0) || !std::isfinite(v)) throw std::domain_error(what);
}

// log sinh(z) for z > 0 without overflow or cancellation.
double log_sinh(double z) { return z - std::numbers::ln2 + std::log(-std::expm1(-2.0 * z)); }

}  // namespace

double gaussian_density(std::span<const double> x, double v) {
  require_positive(v, "gaussian_density: variance must be positive");
  double sq = 0.0;
  for (double c : x) sq += c * c;
  const double k = static_cast<double>(x.size());
  return std::exp(-0.5 * k * std::log(2.0 * std::numbers::pi * v) - sq / (2.0 * v));
}

double gaussian_density(double x, double v) {
  return gaussian_density(std::span<const double>(&x, 1), v);
}

double standard_normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

AbsorbedKernelForms absorbed_kernel_forms(double t, double x, double y) {
  require_positive(t, "absorbed_kernel_q: t must be positive");
  const double diff = gaussian_density(y - x, t) - gaussian_density(y + x, t);
  const double sinh_form =
      2.0 * gaussian_density(y, t) * std::exp(-x * x / (2.0 * t)) * std::sinh(x * y / t);
  return {diff, sinh_form};
}

double absorbed_kernel_q(double t, double x, double y) {
  require_positive(t, "absorbed_kernel_q: t must be positive");
  if (!(x > 0.0) || !(y > 0.0)) return 0.0;
  return gaussian_density(y - x, t) * -std::expm1(-2.0 * x * y / t);
}

double log_absorbed_kernel_q(double t, double x, double y) {
  require_positive(t, "absorbed_kernel_q: t must be positive");
  if (!(x > 0.0) || !(y > 0.0)) return kNegInf;
  return detail::log_q(t, x, y);
}

namespace detail {

double log_q(double t, double x, double y) {
  const double d = y - x;
  return -d * d / (2.0 * t) - 0.5 * std::log(2.0 * std::numbers::pi * t) +
         std::log(-std::expm1(-2.0 * x * y / t));
}

long double log_det_positive(long double* m, std::size_t n) {
  // LU with partial pivoting on a row-major n x n block.
  long double log_abs = 0.0L;
  int sign = 1;
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t piv = c;
    long double best = std::fabs(m[c * n + c]);
    for (std::size_t r = c + 1; r < n; ++r) {
      const long double v = std::fabs(m[r * n + c]);
      if (v > best) {
        best = v;
        piv = r;
      }
    }
    if (best == 0.0L) return -std::numeric_limits<long double>::infinity();
    if (piv != c) {
      for (std::size_t k = 0; k < n; ++k) std::swap(m[c * n + k], m[piv * n + k]);
      sign = -sign;
    }
    const long double p = m[c * n + c];
    if (p < 0.0L) sign = -sign;
    log_abs += std::log(std::fabs(p));
    for (std::size_t r = c + 1; r < n; ++r) {
      const long double f = m[r * n + c] / p;
      if (f == 0.0L) continue;
      for (std::size_t k = c + 1; k < n; ++k) m[r * n + k] -= f * m[c * n + k];
    }
  }
  if (sign < 0) return -std::numeric_limits<long double>::infinity();
  return log_abs;
}

double log_km(double t, std::span<const double> x, std::span<const double> y) {
  const std::size_t n = x.size();
  if (n == 1) return detail::log_q(t, x[0], y[0]);
  constexpr std::size_t kStack = 8;
  std::array<long double, kStack * kStack> stack{};
  std::vector<long double> heap;
  long double* m = stack.data();
  if (n > kStack) {
    heap.resize(n * n);
    m = heap.data();
  }
  const long double lt = t;
  const long double log_norm = 0.5L * std::log(2.0L * std::numbers::pi_v<long double> * lt);
  long double row_scale_sum = 0.0L;
  for (std::size_t i = 0; i < n; ++i) {
    long double row_max = -std::numeric_limits<long double>::infinity();
    for (std::size_t j = 0; j < n; ++j) {
      const long double xi = x[i], yj = y[j];
      const long double d = yj - xi;
      const long double lv =
          -d * d / (2.0L * lt) - log_norm + std::log(-std::expm1(-2.0L * xi * yj / lt));
      m[i * n + j] = lv;
      if (lv > row_max) row_max = lv;
    }
    for (std::size_t j = 0; j < n; ++j) m[i * n + j] = std::exp(m[i * n + j] - row_max);
    row_scale_sum += row_max;
  }
  const long double ld = log_det_positive(m, n);
  if (!std::isfinite(ld)) return kNegInf;
  return static_cast<double>(ld + row_scale_sum);
}

}  // namespace detail

KernelEval km_kernel_eval(double t, std::span<const double> x, std::span<const double> y) {
  require_positive(t, "km_kernel: t must be positive");
  if (x.size() != y.size() || x.empty()) throw std::invalid_argument("km_kernel: size mismatch");
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!std::isfinite(x[i]) || !std::isfinite(y[i])) {
      throw std::invalid_argument("km_kernel: non-finite argument");
    }
  }
  KernelEval out;
  out.t = t;
  out.x.assign(x.begin(), x.end());
  out.y.assign(y.begin(), y.end());
  if (!is_in_chamber(x, Closure::kStrict) || !is_in_chamber(y, Closure::kStrict)) {
    out.degenerate = true;
    out.value = 0.0;
    out.log_value = kNegInf;
    return out;
  }
  out.log_value = detail::log_km(t, x, y);
  out.value = std::exp(out.log_value);
  return out;
}

double km_kernel(double t, std::span<const double> x, std::span<const double> y) {
  require_positive(t, "km_kernel: t must be positive");
  if (x.size() != y.size() || x.empty()) throw std::invalid_argument("km_kernel: size mismatch");
  if (!is_in_chamber(x, Closure::kStrict) || !is_in_chamber(y, Closure::kStrict)) return 0.0;
  return std::exp(detail::log_km(t, x, y));
}

double log_grabiner_corner(double t, double eps, std::span<const double> y) {
  require_positive(t, "grabiner_corner: t must be positive");
  require_positive(eps, "grabiner_corner: eps must be positive");
  if (!is_in_chamber(y, Closure::kStrict)) {
    throw std::domain_error("grabiner_corner: y must lie in the open chamber");
  }
  const std::size_t n = y.size();
  const double nn = static_cast<double>(n);
  const auto dir = corner_direction(n);
  double dir_sq = 0.0;
  for (double d : dir) dir_sq += d * d;
  double y_sq = 0.0;
  for (double v : y) y_sq += v * v;

  double log_val = nn * nn * std::numbers::ln2 - 0.5 * nn * std::log(2.0 * std::numbers::pi * t) -
                   y_sq / (2.0 * t) - eps * eps * dir_sq / (2.0 * t);
  const double s = eps / t;
  for (std::size_t i = 0; i < n; ++i) log_val += log_sinh(s * y[i]);
  // sinh^2(u) - sinh^2(v) = sinh(u - v) sinh(u + v)
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t k = j + 1; k < n; ++k) {
      log_val += log_sinh(s * (y[j] - y[k])) + log_sinh(s * (y[j] + y[k]));
    }
  }
  return log_val;
}

double grabiner_corner(double t, double eps, std::span<const double> y) {
  return std::exp(log_grabiner_corner(t, eps, y));
}

double hitting_density(double b, double t) {
  require_positive(b, "hitting_density: level must be positive");
  require_positive(t, "hitting_density: time must be positive");
  // Log form: t^3 under- and overflows long before the density does.
  return std::exp(std::log(b) - b * b / (2.0 * t) - 0.5 * std::log(2.0 * std::numbers::pi) -
                  1.5 * std::log(t));
}

double bridge_bound_constant(double r, double a) {
  require_positive(r, "bridge_bound_constant: r must be positive");
  if (!(a >= 0.0)) throw std::domain_error("bridge_bound_constant: a must be >= 0");
  return a * a * r * r * r / 24.0;
}

double bridge_survival(double u, double v, double dt, double var_rate) {
  if (!(u > 0.0) || !(v > 0.0)) return 0.0;
  return -std::expm1(-2.0 * u * v / (var_rate * dt));
}

ReflectionCheck reflection_identity_check(double eta, double delta, std::size_t mc_samples,
                                          std::uint64_t seed, std::size_t steps) {
  require_positive(eta, "reflection_identity_check: eta must be positive");
  require_positive(delta, "reflection_identity_check: delta must be positive");
  if (mc_samples < 2 || steps == 0) {
    throw std::invalid_argument("reflection_identity_check: need >= 2 samples and >= 1 step");
  }
  ReflectionCheck out;
  out.exact = 2.0 * standard_normal_cdf(delta / std::sqrt(eta)) - 1.0;

  Rng rng(seed, 0x5EF1EC7ull);
  const double dt = eta / static_cast<double>(steps);
  const double sd = std::sqrt(dt);
  double sum = 0.0, sum_sq = 0.0;
  for (std::size_t s = 0; s < mc_samples; ++s) {
    double gap = delta;  // distance of the path above the barrier -delta
    double weight = 1.0;
    for (std::size_t k = 0; k < steps && weight > 0.0; ++k) {
      const double next = gap + sd * rng.normal();
      weight *= bridge_survival(gap, next, dt);
      gap = next;
    }
    sum += weight;
    sum_sq += weight * weight;
  }
  const double n = static_cast<double>(mc_samples);
  out.monte_carlo = sum / n;
  const double var = std::max(0.0, (sum_sq / n - out.monte_carlo * out.monte_carlo)) * n / (n - 1.0);
  out.std_error = std::sqrt(var / n);
  return out;
}

}  // namespace tiltlab
