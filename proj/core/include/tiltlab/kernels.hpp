#pragma once

// Closed-form kernels for killed Brownian motion in the Weyl chamber and a
// few related one-dimensional identities used as oracles.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace tiltlab {

/// (2 pi v)^{-k/2} exp(-|x|^2 / (2v)). Throws std::domain_error for v <= 0.
double gaussian_density(std::span<const double> x, double v);
double gaussian_density(double x, double v);

double standard_normal_cdf(double z);

/// Two algebraically equal forms of the kernel of Brownian motion absorbed
/// at zero:  phi_t(y-x) - phi_t(y+x)  and  2 phi_t(y) e^{-x^2/2t} sinh(xy/t).
struct AbsorbedKernelForms {
  double difference;
  double sinh_form;
};
AbsorbedKernelForms absorbed_kernel_forms(double t, double x, double y);

/// Absorbed kernel q_t(x, y), evaluated as phi_t(y-x) * (1 - e^{-2xy/t}),
/// which has neither cancellation nor overflow.
double absorbed_kernel_q(double t, double x, double y);
/// log q_t(x, y); -inf when x or y is zero.
double log_absorbed_kernel_q(double t, double x, double y);

/// Karlin-McGregor kernel of n Brownian motions killed at the wall or on
/// collision: det[q_t(x_i, y_j)].
struct KernelEval {
  double value = 0.0;
  double log_value = 0.0;  // -inf when value == 0
  double t = 0.0;
  std::vector<double> x;
  std::vector<double> y;
  bool degenerate = false;  // an endpoint sits on the chamber boundary
};
KernelEval km_kernel_eval(double t, std::span<const double> x, std::span<const double> y);
double km_kernel(double t, std::span<const double> x, std::span<const double> y);

/// Closed form of the untilted kernel started from the corner eps*(2n-1,...,1):
/// 2^{n^2} phi_t(y) e^{-eps^2 |nbar|^2 / 2t} prod_i sinh(eps y_i/t)
///   * prod_{j<k} [sinh^2(eps y_j/t) - sinh^2(eps y_k/t)].
double grabiner_corner(double t, double eps, std::span<const double> y);
double log_grabiner_corner(double t, double eps, std::span<const double> y);

/// Density of the first hitting time of -b by standard Brownian motion.
double hitting_density(double b, double t);

/// C_r = a^2/2 * Var(int_0^r B_s ds) = a^2 r^3 / 24 for the standard bridge on [0, r].
double bridge_bound_constant(double r, double a);

/// Probability that a Brownian bridge of variance rate `var_rate` from
/// height u > 0 to height v > 0 over time dt stays positive.
double bridge_survival(double u, double v, double dt, double var_rate = 1.0);

struct ReflectionCheck {
  double monte_carlo = 0.0;  // estimate of P(inf_{s<=eta} B_s > -delta)
  double std_error = 0.0;
  double exact = 0.0;        // P(|B_eta| < delta)
};

/// Monte Carlo estimate of P(inf_{s<=eta} B_s > -delta) on a fine grid of
/// `steps` increments, Rao-Blackwellized over each sub-interval with the
/// bridge survival probability so the estimator is unbiased for the
/// continuous-time event. Compared against the reflection-principle value.
ReflectionCheck reflection_identity_check(double eta, double delta, std::size_t mc_samples,
                                          std::uint64_t seed = 1, std::size_t steps = 256);

}  // namespace tiltlab
