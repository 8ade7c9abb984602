#include "tiltlab/chamber.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <sstream>

namespace tiltlab {

bool is_in_chamber(std::span<const double> x, Closure closure) {
  if (x.empty()) return false;
  const bool strict = closure == Closure::kStrict;
  for (std::size_t i = 0; i + 1 < x.size(); ++i) {
    if (strict ? !(x[i] > x[i + 1]) : !(x[i] >= x[i + 1])) return false;
  }
  return strict ? x.back() > 0.0 : x.back() >= 0.0;
}

ChamberPoint::ChamberPoint(std::vector<double> coords) : coords_(std::move(coords)) {
  if (coords_.empty()) throw std::invalid_argument("ChamberPoint: n must be >= 1");
  for (double c : coords_) {
    if (!std::isfinite(c)) throw std::invalid_argument("ChamberPoint: non-finite coordinate");
  }
  if (!is_in_chamber(coords_, Closure::kStrict)) {
    throw std::invalid_argument("ChamberPoint: coordinates must satisfy x_1 > ... > x_n > 0");
  }
}

std::vector<double> corner_direction(std::size_t n) {
  std::vector<double> dir(n);
  for (std::size_t i = 0; i < n; ++i) dir[i] = static_cast<double>(2 * (n - i) - 1);
  return dir;
}

ChamberPoint ChamberPoint::corner(std::size_t n, double eps) {
  if (!(eps > 0.0)) throw std::invalid_argument("ChamberPoint::corner: eps must be positive");
  auto dir = corner_direction(n);
  for (double& d : dir) d *= eps;
  return ChamberPoint(std::move(dir));
}

TiltParams::TiltParams(double a, double b, std::size_t n) : a_(a), b_(b), weights_(n) {
  if (!(a >= 0.0) || !std::isfinite(a)) throw std::invalid_argument("TiltParams: a must be >= 0");
  if (!(b > 1.0) || !std::isfinite(b)) throw std::invalid_argument("TiltParams: b must be > 1");
  if (n == 0) throw std::invalid_argument("TiltParams: n must be >= 1");
  double w = 1.0;
  for (std::size_t i = 0; i < n; ++i) {
    weights_[i] = w;
    w *= b;
  }
}

double TiltParams::linear_rate(std::span<const double> x) const {
  double s = 0.0;
  for (std::size_t i = 0; i < x.size() && i < weights_.size(); ++i) s += weights_[i] * x[i];
  return a_ * s;
}

DiscretePath::DiscretePath(std::size_t n, double left, double right, std::size_t steps)
    : n_(n), left_(left), right_(right), steps_(steps), heights_(n * (steps + 1), 0.0) {
  if (n == 0) throw std::invalid_argument("DiscretePath: n must be >= 1");
  if (!(right > left)) throw std::invalid_argument("DiscretePath: need left < right");
  if (steps == 0) throw std::invalid_argument("DiscretePath: need at least one step");
}

std::vector<double> DiscretePath::slice(std::size_t k) const {
  std::vector<double> s(n_);
  for (std::size_t i = 0; i < n_; ++i) s[i] = at(i, k);
  return s;
}

bool DiscretePath::admissible(Closure closure) const {
  const bool strict = closure == Closure::kStrict;
  for (std::size_t k = 0; k < points(); ++k) {
    for (std::size_t i = 0; i + 1 < n_; ++i) {
      const double hi = at(i, k), lo = at(i + 1, k);
      if (strict ? !(hi > lo) : !(hi >= lo)) return false;
    }
    const double bottom = at(n_ - 1, k);
    if (strict ? !(bottom > 0.0) : !(bottom >= 0.0)) return false;
  }
  return true;
}

std::size_t DiscretePath::index_of_time(double t) const {
  const double pos = (t - left_) / dt();
  const double k = std::round(pos);
  if (k < 0.0 || k > static_cast<double>(steps_) || std::abs(pos - k) > 1e-9) {
    std::ostringstream msg;
    msg << "DiscretePath: time " << t << " is not a grid time of [" << left_ << ", " << right_
        << "] with " << steps_ << " steps";
    throw std::out_of_range(msg.str());
  }
  return static_cast<std::size_t>(k);
}

DiscretePath DiscretePath::restrict(double t0, double t1) const {
  const std::size_t k0 = index_of_time(t0), k1 = index_of_time(t1);
  if (k1 <= k0) throw std::invalid_argument("DiscretePath::restrict: empty window");
  DiscretePath out(n_, time(k0), time(k1), k1 - k0);
  for (std::size_t i = 0; i < n_; ++i) {
    for (std::size_t k = k0; k <= k1; ++k) out.at(i, k - k0) = at(i, k);
  }
  return out;
}

double area_functional(const DiscretePath& path, const TiltParams& tilt) {
  if (tilt.n() != path.n()) throw std::invalid_argument("area_functional: n mismatch");
  const double dt = path.dt();
  const auto w = tilt.weights();
  double total = 0.0;
  for (std::size_t i = 0; i < path.n(); ++i) {
    const auto row = path.row(i);
    double s = 0.5 * (row.front() + row.back());
    for (std::size_t k = 1; k + 1 < row.size(); ++k) s += row[k];
    total += w[i] * s * dt;
  }
  return tilt.a() * total;
}

double tilt_weight(const DiscretePath& path, const TiltParams& tilt) {
  return std::exp(-area_functional(path, tilt));
}

ThetaMeasure ThetaMeasure::lebesgue() { return ThetaMeasure(Kind::kLebesgueChamber, 0.0); }

ThetaMeasure ThetaMeasure::product_exponential(double rho) {
  if (!(rho > 0.0) || !std::isfinite(rho)) {
    throw std::invalid_argument("ThetaMeasure: product-exponential rate must be positive");
  }
  return ThetaMeasure(Kind::kProductExponential, rho);
}

ThetaMeasure ThetaMeasure::exponential_growth(double gamma) {
  if (!(gamma >= 0.0) || !std::isfinite(gamma)) {
    throw std::invalid_argument("ThetaMeasure: growth rate must be >= 0");
  }
  return ThetaMeasure(Kind::kExponentialGrowth, gamma);
}

double ThetaMeasure::growth_exponent() const {
  return kind_ == Kind::kExponentialGrowth ? rate_ : 0.0;
}

double ThetaMeasure::log_density(std::span<const double> x) const {
  switch (kind_) {
    case Kind::kLebesgueChamber:
      return 0.0;
    case Kind::kProductExponential: {
      double s = 0.0;
      for (double v : x) s += v;
      return -rate_ * s;
    }
    case Kind::kExponentialGrowth:
      return rate_ * x[0];
  }
  return 0.0;
}

void ThetaMeasure::require_integrable(double a, double s) const {
  if (!(a * s > growth_exponent())) {
    std::ostringstream msg;
    msg << "endpoint measure " << name() << " is not integrable: a*s = " << a * s
        << " must exceed the growth exponent c_n = " << growth_exponent();
    throw IntegrabilityError(msg.str());
  }
}

double ThetaMeasure::log_mass_below(std::size_t n, double r) const {
  if (n == 0 || !(r > 0.0)) throw std::invalid_argument("log_mass_below: need n >= 1, r > 0");
  using boost::math::quadrature::gauss_kronrod;
  const double log_nfact = std::lgamma(static_cast<double>(n) + 1.0);
  switch (kind_) {
    case Kind::kLebesgueChamber:
    case Kind::kProductExponential: {
      // Symmetric product density: the chamber is 1/n! of the cube [0, r]^n.
      const double rho = rate_;
      const double one_dim = gauss_kronrod<double, 61>::integrate(
          [rho](double x) { return std::exp(-rho * x); }, 0.0, r, 15, 1e-14);
      return static_cast<double>(n) * std::log(one_dim) - log_nfact;
    }
    case Kind::kExponentialGrowth: {
      // Density e^{gamma x_1}; the slice {x_2 > ... > x_n > 0, x_2 < x_1}
      // has volume x_1^{n-1}/(n-1)!. Factor e^{gamma r} out for stability.
      const double gamma = rate_;
      const double nm1 = static_cast<double>(n - 1);
      const double scaled = gauss_kronrod<double, 61>::integrate(
          [=](double x) { return std::exp(gamma * (x - r)) * std::pow(x, nm1); }, 0.0, r, 15,
          1e-14);
      return gamma * r + std::log(scaled) - std::lgamma(nm1 + 1.0);
    }
  }
  return 0.0;
}

std::string ThetaMeasure::name() const {
  std::ostringstream s;
  switch (kind_) {
    case Kind::kLebesgueChamber:
      return "lebesgue";
    case Kind::kProductExponential:
      s << "product-exp(" << rate_ << ")";
      return s.str();
    case Kind::kExponentialGrowth:
      s << "exp-growth(" << rate_ << ")";
      return s.str();
  }
  return "?";
}

double theta_log_density(const ThetaMeasure& theta, const ChamberPoint& x) {
  return theta.log_density(x.coords());
}

PathEvent PathEvent::full_space() { return PathEvent(Kind::kFullSpace, 0, 0.0, "full-space"); }

PathEvent PathEvent::endpoint_box(std::size_t coord, double bound) {
  std::ostringstream s;
  s << "X" << coord + 1 << "(1)<=" << bound;
  return PathEvent(Kind::kEndpointBox, coord, bound, s.str());
}

PathEvent PathEvent::max_bound(double bound) {
  std::ostringstream s;
  s << "max X1<=" << bound;
  return PathEvent(Kind::kMaxBound, 0, bound, s.str());
}

PathEvent PathEvent::predicate(Predicate decide, std::string name) {
  if (!decide) throw std::invalid_argument("PathEvent::predicate: empty decision function");
  PathEvent e(Kind::kPredicate, 0, 0.0, std::move(name));
  e.decide_ = std::make_shared<const Predicate>(std::move(decide));
  return e;
}

PathEvent PathEvent::complement() const {
  PathEvent e = *this;
  e.negated_ = !negated_;
  e.name_ = "not(" + name_ + ")";
  return e;
}

bool PathEvent::contains(const DiscretePath& path) const {
  bool inside = true;
  switch (kind_) {
    case Kind::kFullSpace:
      inside = true;
      break;
    case Kind::kEndpointBox: {
      if (coord_ >= path.n()) throw std::out_of_range("PathEvent: coordinate out of range");
      inside = path.at(coord_, path.index_of_time(1.0)) <= bound_;
      break;
    }
    case Kind::kMaxBound: {
      const std::size_t k0 = path.index_of_time(0.0), k1 = path.index_of_time(1.0);
      double m = path.at(0, k0);
      for (std::size_t k = k0 + 1; k <= k1; ++k) m = std::max(m, path.at(0, k));
      inside = m <= bound_;
      break;
    }
    case Kind::kPredicate:
      inside = (*decide_)(path.restrict(0.0, 1.0));
      break;
  }
  return inside != negated_;
}

bool PathEvent::contains_endpoint(std::span<const double> y) const {
  bool inside = true;
  switch (kind_) {
    case Kind::kFullSpace:
      inside = true;
      break;
    case Kind::kEndpointBox:
      if (coord_ >= y.size()) throw std::out_of_range("PathEvent: coordinate out of range");
      inside = y[coord_] <= bound_;
      break;
    default:
      throw std::logic_error("PathEvent: event is not decidable from the endpoint alone");
  }
  return inside != negated_;
}

}  // namespace tiltlab
