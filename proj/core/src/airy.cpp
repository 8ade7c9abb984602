#include "tiltlab/spectral.hpp"

#include <boost/math/special_functions/airy.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include <cmath>
#include <stdexcept>

namespace tiltlab {

double airy_ai(double x) { return boost::math::airy_ai(x); }

double first_airy_zero(double tol) {
  double lo = -3.0, hi = -2.0;  // Ai(-3) < 0 < Ai(-2)
  if (!(airy_ai(lo) < 0.0 && airy_ai(hi) > 0.0)) {
    throw std::logic_error("first_airy_zero: bracket lost its sign change");
  }
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    (airy_ai(mid) < 0.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

double first_airy_zero_ode(double step) {
  if (!(step > 0.0) || step > 0.1) throw std::invalid_argument("first_airy_zero_ode: bad step");
  // Ai(0) = 3^{-2/3} / Gamma(2/3), Ai'(0) = -3^{-1/3} / Gamma(1/3).
  double y = 1.0 / (std::cbrt(9.0) * boost::math::tgamma(2.0 / 3.0));
  double dy = -1.0 / (std::cbrt(3.0) * boost::math::tgamma(1.0 / 3.0));
  double x = 0.0;
  const double h = -step;
  auto f = [](double xx, double yy) { return xx * yy; };
  while (x > -4.0) {
    // RK4 on (y, y') with y'' = x y.
    const double k1y = dy, k1v = f(x, y);
    const double k2y = dy + 0.5 * h * k1v, k2v = f(x + 0.5 * h, y + 0.5 * h * k1y);
    const double k3y = dy + 0.5 * h * k2v, k3v = f(x + 0.5 * h, y + 0.5 * h * k2y);
    const double k4y = dy + h * k3v, k4v = f(x + h, y + h * k3y);
    const double y_next = y + h / 6.0 * (k1y + 2.0 * k2y + 2.0 * k3y + k4y);
    const double dy_next = dy + h / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
    if (y > 0.0 && y_next <= 0.0) {
      // Secant step inside the last interval.
      return x + h * y / (y - y_next);
    }
    y = y_next;
    dy = dy_next;
    x += h;
  }
  throw std::logic_error("first_airy_zero_ode: no sign change above -4");
}

AiryOracle ferrari_spohn_oracle(const TiltParams& tilt, const ChamberGrid& grid) {
  if (tilt.n() != 1 || grid.n != 1) {
    throw std::invalid_argument("ferrari_spohn_oracle: closed form only for n = 1");
  }
  if (!(tilt.a() > 0.0)) throw std::invalid_argument("ferrari_spohn_oracle: needs a > 0");
  AiryOracle out;
  out.alpha = std::cbrt(2.0 * tilt.a());
  out.a1 = first_airy_zero();
  out.lambda1 = std::exp(0.5 * out.alpha * out.alpha * out.a1);
  out.phi1.resize(static_cast<Eigen::Index>(grid.size()));
  for (std::size_t k = 0; k < grid.size(); ++k) {
    out.phi1(static_cast<Eigen::Index>(k)) = airy_ai(out.alpha * grid.point(k)[0] + out.a1);
  }
  out.phi1.normalize();
  return out;
}

}  // namespace tiltlab
