#pragma once

#include <cstddef>
#include <span>

namespace tiltlab::detail {

// log q_t(x, y) for x, y > 0.
double log_q(double t, double x, double y);

// log det for a matrix whose determinant is known to be positive; returns
// -inf if the computed determinant is not positive. Overwrites `m`.
long double log_det_positive(long double* m, std::size_t n);

// log det[q_t(x_i, y_j)] for strictly ordered x, y (no validation).
double log_km(double t, std::span<const double> x, std::span<const double> y);

}  // namespace tiltlab::detail
