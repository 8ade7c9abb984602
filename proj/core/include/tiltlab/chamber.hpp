#pragma once

// Core domain types for area-tilted non-crossing bridge ensembles above a
// hard wall: Weyl chamber points, tilt parameters, discretized paths,
// endpoint measures and path events.

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace tiltlab {

/// Raised when an endpoint measure cannot be integrated against the tilted
/// kernel, i.e. a*s <= c_n.
class IntegrabilityError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

enum class Closure { kStrict, kWeak };

/// x_1 > x_2 > ... > x_n > 0 (kStrict) or x_1 >= ... >= x_n >= 0 (kWeak).
bool is_in_chamber(std::span<const double> x, Closure closure = Closure::kStrict);

/// A point of the open chamber A_n.
class ChamberPoint {
 public:
  explicit ChamberPoint(std::vector<double> coords);

  /// eps * (2n-1, 2n-3, ..., 1).
  static ChamberPoint corner(std::size_t n, double eps);

  std::size_t size() const { return coords_.size(); }
  double operator[](std::size_t i) const { return coords_[i]; }
  std::span<const double> coords() const { return coords_; }

 private:
  std::vector<double> coords_;
};

/// The odd sequence (2n-1, 2n-3, ..., 1).
std::vector<double> corner_direction(std::size_t n);

/// Area-tilt prefactors a * b^(i-1), i = 1..n.
///
/// a = 0 is accepted and denotes the untilted reference kernel; every
/// free-boundary consumer separately requires a*s > c_n.
class TiltParams {
 public:
  TiltParams(double a, double b, std::size_t n);

  double a() const { return a_; }
  double b() const { return b_; }
  std::size_t n() const { return weights_.size(); }

  /// (1, b, b^2, ..., b^(n-1)), built by repeated multiplication from 1.
  std::span<const double> weights() const { return weights_; }

  /// a * <weights, x>: the area rate of the constant configuration x.
  double linear_rate(std::span<const double> x) const;

  TiltParams untilted() const { return TiltParams(0.0, b_, n()); }

 private:
  double a_;
  double b_;
  std::vector<double> weights_;
};

/// n coordinate paths on a uniform grid over [left, right] with `steps`
/// sub-intervals. Stores absolute heights row-major: heights[i][k].
class DiscretePath {
 public:
  DiscretePath(std::size_t n, double left, double right, std::size_t steps);

  std::size_t n() const { return n_; }
  std::size_t steps() const { return steps_; }
  std::size_t points() const { return steps_ + 1; }
  double left() const { return left_; }
  double right() const { return right_; }
  double dt() const { return (right_ - left_) / static_cast<double>(steps_); }
  double time(std::size_t k) const { return left_ + static_cast<double>(k) * dt(); }

  double& at(std::size_t i, std::size_t k) { return heights_[i * points() + k]; }
  double at(std::size_t i, std::size_t k) const { return heights_[i * points() + k]; }

  std::span<double> row(std::size_t i) { return {heights_.data() + i * points(), points()}; }
  std::span<const double> row(std::size_t i) const {
    return {heights_.data() + i * points(), points()};
  }
  std::span<const double> data() const { return heights_; }

  /// Heights of all coordinates at grid index k.
  std::vector<double> slice(std::size_t k) const;

  /// Every grid slice lies in the (closed or open) chamber.
  bool admissible(Closure closure = Closure::kStrict) const;

  /// Grid index of time t; throws if t is not a grid time.
  std::size_t index_of_time(double t) const;

  /// Copy of the path restricted to [t0, t1] (both must be grid times).
  DiscretePath restrict(double t0, double t1) const;

  bool operator==(const DiscretePath&) const = default;

 private:
  std::size_t n_;
  double left_;
  double right_;
  std::size_t steps_;
  std::vector<double> heights_;
};

/// a * sum_i b^(i-1) * trapezoid(X_i).
double area_functional(const DiscretePath& path, const TiltParams& tilt);

/// exp(-area_functional).
double tilt_weight(const DiscretePath& path, const TiltParams& tilt);

/// Endpoint measure Theta_n on the chamber.
class ThetaMeasure {
 public:
  enum class Kind { kLebesgueChamber, kProductExponential, kExponentialGrowth };

  static ThetaMeasure lebesgue();
  static ThetaMeasure product_exponential(double rho);
  static ThetaMeasure exponential_growth(double gamma);

  Kind kind() const { return kind_; }
  double rate() const { return rate_; }

  /// c_n = limsup r^{-1} log Theta(A_n, x_1 <= r).
  double growth_exponent() const;

  /// Log-density with respect to Lebesgue measure on the chamber.
  double log_density(std::span<const double> x) const;

  /// Throws IntegrabilityError unless a * s > c_n.
  void require_integrable(double a, double s) const;

  /// log Theta(A_n and {x_1 <= r}), evaluated by one-dimensional quadrature.
  double log_mass_below(std::size_t n, double r) const;

  std::string name() const;

 private:
  ThetaMeasure(Kind kind, double rate) : kind_(kind), rate_(rate) {}

  Kind kind_;
  double rate_;
};

double theta_log_density(const ThetaMeasure& theta, const ChamberPoint& x);

/// Event on the restriction of a path to the unit window [0, 1].
class PathEvent {
 public:
  enum class Kind { kFullSpace, kEndpointBox, kMaxBound, kPredicate };
  using Predicate = std::function<bool(const DiscretePath&)>;

  static PathEvent full_space();
  /// {X_coord(1) <= bound}; coord is zero-based.
  static PathEvent endpoint_box(std::size_t coord, double bound);
  /// {max_{t in [0,1]} X_1(t) <= bound}.
  static PathEvent max_bound(double bound);
  /// `decide` receives the path restricted to [0, 1].
  static PathEvent predicate(Predicate decide, std::string name = "predicate");

  Kind kind() const { return kind_; }
  std::size_t coord() const { return coord_; }
  double bound() const { return bound_; }
  bool negated() const { return negated_; }
  const std::string& name() const { return name_; }

  PathEvent complement() const;

  /// Decision on the restriction of `path` to [0, 1]; the unit window must
  /// consist of grid times of the path.
  bool contains(const DiscretePath& path) const;

  /// Endpoint-box style decision on a single chamber configuration at the
  /// right end of the window. Only valid for kFullSpace / kEndpointBox.
  bool contains_endpoint(std::span<const double> y) const;

  bool is_endpoint_evaluable() const {
    return kind_ == Kind::kFullSpace || kind_ == Kind::kEndpointBox;
  }

 private:
  PathEvent(Kind kind, std::size_t coord, double bound, std::string name)
      : kind_(kind), coord_(coord), bound_(bound), name_(std::move(name)) {}

  Kind kind_;
  std::size_t coord_ = 0;
  double bound_ = 0.0;
  bool negated_ = false;
  std::string name_;
  std::shared_ptr<const Predicate> decide_;
};

}  // namespace tiltlab
