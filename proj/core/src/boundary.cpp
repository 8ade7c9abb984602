#include "tiltlab/kernels.hpp"
#include "tiltlab/samplers.hpp"
#include "tiltlab/spectral.hpp"

#include "parallel.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace tiltlab {
namespace {

constexpr double kSaturation = 1e-13;

std::size_t snap_steps(double s, std::size_t m_tau) {
  return static_cast<std::size_t>(std::llround(s * static_cast<double>(m_tau)));
}

Eigen::VectorXd apply_steps(const Eigen::MatrixXd& step, Eigen::VectorXd v, std::size_t count) {
  for (std::size_t k = 0; k < count; ++k) {
    v = step * v;
    // Keep the vector at unit scale; every consumer takes a ratio.
    const double norm = v.norm();
    if (norm > 0.0) v /= norm;
  }
  return v;
}

Eigen::VectorXd hat_powers(const SpectralData& spec, double power) {
  const double l1 = spec.lambda1();
  Eigen::VectorXd out(spec.lambdas.size());
  for (Eigen::Index i = 0; i < out.size(); ++i) {
    const double r = std::max(spec.lambdas(i), 0.0) / l1;
    out(i) = power == 0.0 ? 1.0 : std::pow(r, power);
  }
  return out;
}

FiniteTValue spectral_ratio(const GammaOperator& gamma, const Eigen::VectorXd& alpha,
                            double first, double second, const SpectralData& spec) {
  const Eigen::VectorXd p1 = hat_powers(spec, first);
  const Eigen::VectorXd p2 = hat_powers(spec, second);
  const Eigen::VectorXd u = spec.basis * alpha.cwiseProduct(p1);
  const Eigen::VectorXd w = spec.basis * alpha.cwiseProduct(p2);
  FiniteTValue out;
  out.xi1 = gamma.bilinear(u, w);
  out.xi2 = spec.lambda1() * alpha.cwiseProduct(p1).squaredNorm();
  out.value = out.xi1 / out.xi2;
  out.limit = limit_value(gamma, spec);
  return out;
}

std::size_t require_integer_T(double T, const char* who) {
  const double r = std::round(T);
  if (std::abs(T - r) > 1e-9 || r < 2.0) {
    std::ostringstream msg;
    msg << who << ": T must be an integer >= 2 (got " << T << ")";
    throw std::domain_error(msg.str());
  }
  return static_cast<std::size_t>(r);
}

}  // namespace

Eigen::VectorXd theta_on_grid(const ThetaMeasure& theta, const ChamberGrid& grid) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(grid.size()));
  for (std::size_t k = 0; k < grid.size(); ++k) {
    out(static_cast<Eigen::Index>(k)) = std::exp(theta.log_density(grid.point(k)));
  }
  return out;
}

BoundaryCoefficients boundary_coefficients(const Eigen::VectorXd& psi, const SpectralData& spec) {
  const double vol = spec.grid.cell_volume();
  BoundaryCoefficients out;
  out.alpha = std::sqrt(vol) * (spec.basis.transpose() * psi);
  out.psi_norm_sq = vol * psi.squaredNorm();
  const double a1 = std::sqrt(vol) * spec.phi1.dot(psi);
  out.kappa = out.psi_norm_sq / (a1 * a1);
  return out;
}

PsiResult psi_s(const ThetaMeasure& theta, double s, const SpectralData& spec) {
  theta.require_integrable(spec.tilt.a(), s);
  PsiResult out;
  out.steps = snap_steps(s, spec.m_tau);
  if (out.steps == 0) throw std::domain_error("psi_s: s is below one tau step");
  out.s = static_cast<double>(out.steps) * spec.tau();
  theta.require_integrable(spec.tilt.a(), out.s);
  Eigen::VectorXd v = theta_on_grid(theta, spec.grid);
  for (std::size_t k = 0; k < out.steps; ++k) v = spec.step * v;
  if (!v.allFinite()) throw std::runtime_error("psi_s: non-finite values; is Theta integrable?");
  out.psi = std::move(v);
  out.coeffs = boundary_coefficients(out.psi, spec);
  return out;
}

Eigen::VectorXd corner_row(double eps, const SpectralData& spec) {
  if (!(eps > 0.0)) throw std::domain_error("corner_row: eps must be positive");
  const std::size_t n = spec.grid.n;
  auto x = corner_direction(n);
  for (double& v : x) v *= eps;
  if (x[0] > spec.grid.R) {
    std::ostringstream msg;
    msg << "corner_row: eps * nbar = " << x[0] << " lies outside the grid (R = " << spec.grid.R
        << ")";
    throw std::domain_error(msg.str());
  }
  const double tau = spec.tau();
  const double half_x = -0.5 * tau * spec.tilt.linear_rate(x);
  Eigen::VectorXd k(static_cast<Eigen::Index>(spec.cells()));
  for (std::size_t c = 0; c < spec.cells(); ++c) {
    const auto u = spec.grid.point(c);
    k(static_cast<Eigen::Index>(c)) =
        std::exp(log_grabiner_corner(tau, eps, u) + half_x - 0.5 * tau * spec.tilt.linear_rate(u));
  }
  for (std::size_t s = 1; s < spec.m_tau; ++s) k = spec.step * k;
  return k;
}

FreeSplit free_split(const ThetaMeasure& theta, double a, double T, std::size_t m_tau) {
  theta.require_integrable(a, T);
  FreeSplit out;
  out.ell = static_cast<std::size_t>(std::floor(theta.growth_exponent() / a)) + 1;
  const double frac = T - std::floor(T + 1e-12);
  out.s_steps = snap_steps(static_cast<double>(out.ell) + std::max(frac, 0.0), m_tau);
  out.s = static_cast<double>(out.s_steps) / static_cast<double>(m_tau);
  const double t = T - out.s;
  if (t < 1.0 - 1e-9) {
    std::ostringstream msg;
    msg << "free boundary: T = " << T << " leaves t = " << t << " < 1 after s = " << out.s
        << "; need T >= " << out.ell + 1;
    throw std::domain_error(msg.str());
  }
  out.t = static_cast<std::size_t>(std::llround(t));
  return out;
}

GammaOperator GammaOperator::masked(const SpectralData& spec, Eigen::VectorXd mask) {
  if (mask.size() != spec.K1mat.rows()) throw std::invalid_argument("GammaOperator: mask size");
  GammaOperator g;
  g.K1_ = &spec.K1mat;
  g.mask_ = std::move(mask);
  return g;
}

GammaOperator GammaOperator::dense(Eigen::MatrixXd matrix) {
  GammaOperator g;
  g.dense_ = std::move(matrix);
  return g;
}

double GammaOperator::bilinear(const Eigen::VectorXd& u, const Eigen::VectorXd& w) const {
  if (is_masked()) return u.dot(*K1_ * w.cwiseProduct(mask_));
  return u.dot(dense_ * w);
}

Eigen::MatrixXd GammaOperator::matrix() const {
  if (is_masked()) return *K1_ * mask_.asDiagonal();
  return dense_;
}

GammaOperator gamma_operator(const PathEvent& event, const SpectralData& spec,
                             const PathEventMcOptions& mc) {
  const std::size_t N = spec.cells();
  if (event.is_endpoint_evaluable()) {
    Eigen::VectorXd mask(static_cast<Eigen::Index>(N));
    for (std::size_t k = 0; k < N; ++k) {
      mask(static_cast<Eigen::Index>(k)) = event.contains_endpoint(spec.grid.point(k)) ? 1.0 : 0.0;
    }
    return GammaOperator::masked(spec, std::move(mask));
  }
  const std::size_t n = spec.grid.n;
  if (n > 2) throw std::invalid_argument("gamma_operator: path events need n <= 2");
  if (mc.samples == 0 || mc.steps == 0) throw std::invalid_argument("gamma_operator: empty MC");
  const double work = static_cast<double>(N) * static_cast<double>(N) *
                      static_cast<double>(mc.samples) * static_cast<double>(mc.steps);
  if (work > mc.max_work) {
    std::ostringstream msg;
    msg << "gamma_operator: Monte Carlo work " << work << " exceeds the cap " << mc.max_work
        << "; use a coarser grid or fewer samples";
    throw std::length_error(msg.str());
  }
  // Shared standard bridge shapes: shapes[s][i] on [0, 1].
  Rng rng(mc.seed, 0xB81D6Eull);
  const double dt = 1.0 / static_cast<double>(mc.steps);
  std::vector<DiscretePath> shapes;
  shapes.reserve(mc.samples);
  for (std::size_t s = 0; s < mc.samples; ++s) {
    DiscretePath shape(n, 0.0, 1.0, mc.steps);
    for (std::size_t i = 0; i < n; ++i) {
      const auto b = sample_bridge(0.0, 0.0, 0.0, 1.0, dt, rng);
      for (std::size_t k = 0; k <= mc.steps; ++k) shape.at(i, k) = b.at(0, k);
    }
    shapes.push_back(std::move(shape));
  }
  Eigen::MatrixXd out(static_cast<Eigen::Index>(N), static_cast<Eigen::Index>(N));
  detail::parallel_for(N, mc.threads, [&](std::size_t r) {
    DiscretePath path(n, 0.0, 1.0, mc.steps);
    const auto u = spec.grid.point(r);
    for (std::size_t c = 0; c < N; ++c) {
      const auto v = spec.grid.point(c);
      double total = 0.0, hit = 0.0;
      for (const auto& shape : shapes) {
        for (std::size_t i = 0; i < n; ++i) {
          for (std::size_t k = 0; k <= mc.steps; ++k) {
            const double frac = static_cast<double>(k) * dt;
            path.at(i, k) = u[i] + (v[i] - u[i]) * frac + shape.at(i, k);
          }
        }
        const double lw = log_crossing_weight(path, CrossingWeight::kBridgeCorrected);
        if (!std::isfinite(lw)) continue;
        const double w = std::exp(lw - area_functional(path, spec.tilt));
        total += w;
        if (event.contains(path)) hit += w;
      }
      const auto ri = static_cast<Eigen::Index>(r), ci = static_cast<Eigen::Index>(c);
      out(ri, ci) = total > 0.0 ? spec.K1mat(ri, ci) * (hit / total) : 0.0;
    }
  });
  return GammaOperator::dense(std::move(out));
}

double limit_value(const GammaOperator& gamma, const SpectralData& spec) {
  return gamma.bilinear(spec.phi1, spec.phi1) / spec.lambda1();
}

FiniteTValue mu_free_T(const GammaOperator& gamma, const ThetaMeasure& theta, double T,
                       const SpectralData& spec) {
  const FreeSplit split = free_split(theta, spec.tilt.a(), T, spec.m_tau);
  const PsiResult psi = psi_s(theta, split.s, spec);
  const auto t = static_cast<double>(split.t);
  FiniteTValue out = spectral_ratio(gamma, psi.coeffs.alpha, t, t - 1.0, spec);
  out.T = T;
  out.t = split.t;
  out.s = split.s;
  return out;
}

FiniteTValue mu_zero_T(const GammaOperator& gamma, double T, double eps,
                       const SpectralData& spec) {
  const std::size_t Ti = require_integer_T(T, "mu_zero_T");
  const Eigen::VectorXd r = corner_row(eps, spec);
  const BoundaryCoefficients c = boundary_coefficients(r, spec);
  const auto t = static_cast<double>(Ti);
  FiniteTValue out = spectral_ratio(gamma, c.alpha, t - 1.0, t - 2.0, spec);
  out.T = T;
  out.t = Ti - 1;
  out.s = 1.0;
  return out;
}

double mu_free_T_direct(const GammaOperator& gamma, const ThetaMeasure& theta, double T,
                        const SpectralData& spec) {
  const FreeSplit split = free_split(theta, spec.tilt.a(), T, spec.m_tau);
  Eigen::VectorXd v = theta_on_grid(theta, spec.grid);
  const Eigen::VectorXd later =
      apply_steps(spec.step, std::move(v), split.s_steps + (split.t - 1) * spec.m_tau);
  Eigen::VectorXd psi_T = later;
  for (std::size_t k = 0; k < spec.m_tau; ++k) psi_T = spec.step * psi_T;
  return gamma.bilinear(psi_T, later) / psi_T.squaredNorm();
}

double mu_zero_T_direct(const GammaOperator& gamma, double T, double eps,
                        const SpectralData& spec) {
  const std::size_t Ti = require_integer_T(T, "mu_zero_T");
  Eigen::VectorXd later = apply_steps(spec.step, corner_row(eps, spec), (Ti - 2) * spec.m_tau);
  Eigen::VectorXd psi_T = later;
  for (std::size_t k = 0; k < spec.m_tau; ++k) psi_T = spec.step * psi_T;
  return gamma.bilinear(psi_T, later) / psi_T.squaredNorm();
}

std::vector<KappaPoint> kappa_eps_curve(std::span<const double> eps, const SpectralData& spec) {
  const std::size_t n = spec.grid.n;
  const double half_vol = std::sqrt(spec.grid.cell_volume());
  std::vector<KappaPoint> out;
  out.reserve(eps.size());
  for (double e : eps) {
    if (!(e > 0.0) || e > 1.0) throw std::domain_error("kappa_eps_curve: eps must be in (0, 1]");
    KappaPoint p;
    p.eps = e;
    const Eigen::VectorXd r = corner_row(e, spec);
    const double proj = r.dot(spec.phi1);
    p.kappa = r.squaredNorm() / (proj * proj);

    auto x = corner_direction(n);
    for (double& v : x) v *= e;
    const double log_num = log_grabiner_corner(2.0, e, x);
    double den = 0.0;
    for (std::size_t c = 0; c < spec.cells(); ++c) {
      den += std::exp(log_grabiner_corner(1.0, e, spec.grid.point(c)) - 0.5 * log_num) *
             spec.phi1(static_cast<Eigen::Index>(c));
    }
    den *= half_vol;
    p.kappa_untilted = 1.0 / (den * den);
    out.push_back(p);
  }
  return out;
}

DecayFit decay_rate_fit(std::span<const double> t, std::span<const double> values, double limit,
                        double delta) {
  if (t.size() != values.size()) throw std::invalid_argument("decay_rate_fit: size mismatch");
  if (t.size() < 4) throw std::invalid_argument("decay_rate_fit: need at least 4 values of T");
  DecayFit fit;
  fit.delta = delta;
  fit.log_bound = std::log1p(-delta);
  for (std::size_t i = 0; i < t.size(); ++i) {
    const double err = std::abs(values[i] - limit);
    if (err < kSaturation) continue;
    fit.t.push_back(t[i]);
    fit.error.push_back(err);
  }
  if (fit.t.size() < 2) {
    fit.saturated = true;
    fit.within_bound = true;
    return fit;
  }
  const double m = static_cast<double>(fit.t.size());
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < fit.t.size(); ++i) {
    const double y = std::log(fit.error[i]);
    sx += fit.t[i];
    sy += y;
    sxx += fit.t[i] * fit.t[i];
    sxy += fit.t[i] * y;
  }
  fit.slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
  fit.intercept = (sy - fit.slope * sx) / m;
  fit.within_bound = fit.slope <= fit.log_bound + 0.05;
  return fit;
}

}  // namespace tiltlab
