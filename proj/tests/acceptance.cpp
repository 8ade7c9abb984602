// Acceptance suite: one PASS/FAIL line per criterion.
//   tiltlab_acceptance [all | <criterion>]

#include "tiltlab/chamber.hpp"
#include "tiltlab/kernels.hpp"
#include "tiltlab/rng.hpp"
#include "tiltlab/samplers.hpp"
#include "tiltlab/spectral.hpp"

#include <boost/math/quadrature/exp_sinh.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

using namespace tiltlab;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

const SpectralData& default_spectrum(std::size_t n) {
  static std::map<std::size_t, SpectralData> cache;
  auto it = cache.find(n);
  if (it == cache.end()) it = cache.emplace(n, compute_spectral(TiltParams(1.0, 2.0, n))).first;
  return it->second;
}

// ---------------------------------------------------------------------------

Outcome grabiner_km() {
  constexpr double kTol = 1e-10;
  constexpr double kMaxSeconds = 1.0;
  const auto t0 = std::chrono::steady_clock::now();
  Rng rng(20240, 0);
  double worst = 0.0;
  std::size_t count = 0;
  for (std::size_t n = 1; n <= 4; ++n) {
    for (double t : {0.5, 1.0, 2.0}) {
      for (double eps : {1.0, 0.5, 0.25}) {
        const auto x = ChamberPoint::corner(n, eps);
        for (int k = 0; k < 20; ++k) {
          std::vector<double> y(n);
          for (auto& v : y) v = 0.02 + 3.0 * rng.uniform();
          std::sort(y.begin(), y.end(), std::greater<>());
          const double g = grabiner_corner(t, eps, y), d = km_kernel(t, x.coords(), y);
          worst = std::max(worst, std::abs(g - d) / std::abs(d));
          ++count;
        }
      }
    }
  }
  const double secs = seconds_since(t0);
  return {worst <= kTol && secs < kMaxSeconds,
          std::to_string(count) + " points, max rel " + fmt("%.3g", worst) + " (tol 1e-10), " +
              fmt("%.3f", secs) + " s"};
}

Outcome airy_ground_state() {
  constexpr double kTol = 1e-3;
  constexpr double kMaxSeconds = 60.0;
  const auto t0 = std::chrono::steady_clock::now();
  SpectralOptions o;
  o.R = 8.0;
  o.h = 0.01;
  o.m_tau = 32;
  const TiltParams tilt(1.0, 2.0, 1);
  const SpectralData s = compute_spectral(tilt, o);
  const AiryOracle airy = ferrari_spohn_oracle(tilt, s.grid);
  // Closed form, independent of the oracle struct: lambda_1 = exp(2^{2/3} a_1 / 2).
  const double a1 = first_airy_zero_ode();
  const double lambda_exact = std::exp(std::cbrt(4.0) * a1 / 2.0);
  const double rel = std::abs(s.lambda1() - lambda_exact) / lambda_exact;
  const double l2 = (s.phi1 - airy.phi1).norm();
  const double secs = seconds_since(t0);
  return {rel <= kTol && l2 <= kTol && secs < kMaxSeconds,
          "lambda1 " + fmt("%.10f", s.lambda1()) + " vs " + fmt("%.10f", lambda_exact) +
              " (rel " + fmt("%.3g", rel) + "), phi1 L2 " + fmt("%.3g", l2) + ", " +
              fmt("%.1f", secs) + " s"};
}

struct Series {
  std::vector<double> T, free, zero;
  double limit = 0.0;
  double gap = 0.0;
};

Series theorem_series(std::size_t n, double T_first, double T_last) {
  const SpectralData& s = default_spectrum(n);
  const auto gamma = gamma_operator(PathEvent::endpoint_box(0, 1.0), s);
  Series out;
  out.limit = limit_value(gamma, s);
  out.gap = s.gap;
  for (double T = T_first; T <= T_last; T += 1.0) {
    out.T.push_back(T);
    out.free.push_back(mu_free_T(gamma, ThetaMeasure::lebesgue(), T, s).value);
    out.zero.push_back(mu_zero_T(gamma, T, 1e-3, s).value);
  }
  return out;
}

Outcome finite_T_limit() {
  constexpr double kTol = 1e-6;
  constexpr double kMaxSeconds = 300.0;
  const auto t0 = std::chrono::steady_clock::now();
  bool pass = true;
  std::string detail;
  for (std::size_t n : {1, 2}) {
    const Series sr = theorem_series(n, 3.0, 16.0);
    double worst = 0.0;
    double first_ok = -1.0;
    bool monotone = true;
    for (std::size_t i = 0; i < sr.T.size(); ++i) {
      const double e = std::max(std::abs(sr.free[i] - sr.limit), std::abs(sr.zero[i] - sr.limit));
      if (sr.T[i] >= 8.0 && sr.T[i] <= 12.0) worst = std::max(worst, e);
      if (e <= kTol && first_ok < 0.0) first_ok = sr.T[i];
      if (e > kTol) first_ok = -1.0;
      if (i > 0 && sr.T[i] <= 12.0 &&
          std::abs(sr.free[i] - sr.zero[i]) >= std::abs(sr.free[i - 1] - sr.zero[i - 1])) {
        monotone = false;
      }
    }
    pass = pass && worst <= kTol && monotone;
    detail += "n=" + std::to_string(n) + ": max err T=8..12 " + fmt("%.3g", worst) +
              ", within 1e-6 from T=" + (first_ok > 0 ? fmt("%.0f", first_ok) : "never") +
              ", |free-zero| decreasing " + (monotone ? "yes" : "no") + "; ";
  }
  const double secs = seconds_since(t0);
  pass = pass && secs < kMaxSeconds;
  return {pass, detail + fmt("%.1f", secs) + " s"};
}

Outcome gap_rate() {
  constexpr double kSlack = 0.05;
  bool pass = true;
  std::string detail;
  for (std::size_t n : {1, 2}) {
    const Series sr = theorem_series(n, 4.0, 12.0);
    const DecayFit ff = decay_rate_fit(sr.T, sr.free, sr.limit, sr.gap);
    const DecayFit fz = decay_rate_fit(sr.T, sr.zero, sr.limit, sr.gap);
    const double bound = std::log1p(-sr.gap) + kSlack;
    const bool ok = !ff.saturated && !fz.saturated && ff.slope <= bound && fz.slope <= bound;
    pass = pass && ok;
    detail += "n=" + std::to_string(n) + ": slopes free " + fmt("%.3f", ff.slope) + " zero " +
              fmt("%.3f", fz.slope) + " vs log(1-delta)+0.05 = " + fmt("%.3f", bound) + "; ";
  }
  return {pass, detail};
}

Outcome sampler_cross_check() {
  constexpr double kMinEss = 1e4;
  constexpr double kMaxKs = 0.05;
  // Event probability under the free-boundary measure at T = 3.
  SamplerConfig mc;
  mc.n = 1;
  mc.T = 3.0;
  mc.dt = 1.0 / 64.0;
  mc.tilt = TiltParams(1.0, 2.0, 1);
  mc.boundary = FreeBoundary{ThetaMeasure::lebesgue()};
  mc.seed = 7;
  mc.chains = 4;
  mc.sweeps = 60000;
  mc.burn_in = 1000;
  const PathEvent event = PathEvent::endpoint_box(0, 1.0);
  const std::vector<Observable> obs = {indicator(event)};
  const MCEstimate est = batch_means(mcmc_sample(mc, obs).series[0]);
  const SpectralData& s = default_spectrum(1);
  const double ref = mu_free_T(gamma_operator(event, s), ThetaMeasure::lebesgue(), 3.0, s).value;
  const double tol = 3.0 * est.std_error + 2.0 * s.grid.h;
  const bool ok_event = est.ess >= kMinEss && std::abs(est.mean - ref) <= tol;

  // X_1(0) under the zero-boundary measure at T = 1: MCMC against exact draws.
  SamplerConfig zc;
  zc.n = 1;
  zc.T = 1.0;
  zc.dt = 1.0 / 64.0;
  zc.tilt = TiltParams(1.0, 2.0, 1);
  zc.boundary = ZeroBoundary{1e-3};
  zc.crossing = CrossingWeight::kGridOnly;
  zc.seed = 11;
  zc.chains = 4;
  zc.sweeps = 10000;
  zc.burn_in = 500;
  const std::vector<Observable> x0 = {height_at(0, 0.0)};
  std::vector<double> mcmc_x0;
  const McmcResult zres = mcmc_sample(zc, x0);
  for (const auto& chain : zres.series[0]) {
    mcmc_x0.insert(mcmc_x0.end(), chain.begin(), chain.end());
  }
  std::vector<double> exact_x0;
  for (const auto& p : rejection_sample_many(zc, 20000)) {
    exact_x0.push_back(p.at(0, p.index_of_time(0.0)));
  }
  const double ks = ks_distance(mcmc_x0, exact_x0);
  const bool ok_ks = ks < kMaxKs;
  return {ok_event && ok_ks,
          "MCMC " + fmt("%.5f", est.mean) + " +- " + fmt("%.5f", est.std_error) + " (ess " +
              fmt("%.0f", est.ess) + ") vs spectral " + fmt("%.5f", ref) + ", tol " +
              fmt("%.4f", tol) + "; KS " + fmt("%.4f", ks) + " (< 0.05)"};
}

Outcome kappa_flatness() {
  constexpr double kMaxVariation = 0.2;
  constexpr double kMaxOverPlateau = 10.0;
  std::vector<double> eps;
  for (int k = 0; k <= 6; ++k) eps.push_back(std::ldexp(1.0, -k));
  bool pass = true;
  std::string detail;
  for (std::size_t n : {1, 2}) {
    const auto pts = kappa_eps_curve(eps, default_spectrum(n));
    // eps is descending, so the plateau sits at the back.
    const double plateau = pts.back().kappa;
    double lo = plateau, hi = plateau, peak = 0.0;
    for (std::size_t i = pts.size() - 3; i < pts.size(); ++i) {
      lo = std::min(lo, pts[i].kappa);
      hi = std::max(hi, pts[i].kappa);
    }
    for (const auto& p : pts) peak = std::max(peak, p.kappa);
    const double variation = (hi - lo) / lo;
    const bool ok = variation < kMaxVariation && peak <= kMaxOverPlateau * plateau;
    pass = pass && ok;
    detail += "n=" + std::to_string(n) + ": plateau " + fmt("%.4f", plateau) + ", variation " +
              fmt("%.3g", variation) + ", max/plateau " + fmt("%.3f", peak / plateau) + "; ";
  }
  return {pass, detail};
}

Outcome bounds() {
  constexpr double kRelSlack = 1e-12;
  bool pass = true;
  std::string detail;
  for (std::size_t n : {1, 2}) {
    const SpectralData& s = default_spectrum(n);
    const double a = s.tilt.a();
    const double vol = s.grid.cell_volume();
    const double c1 = a * a / 24.0;
    double worst_decay = 0.0, worst_hat = 0.0;
    for (std::size_t r = 0; r < s.cells(); ++r) {
      const auto x = s.grid.point(r);
      for (std::size_t c = r; c < s.cells(); ++c) {
        const auto y = s.grid.point(c);
        const double k = s.K1mat(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) / vol;
        worst_decay = std::max(worst_decay, k / (std::exp(c1 - a * (x[0] + y[0]) / 2.0)));
        const double khat = km_kernel(1.0, x, y);
        if (khat > 0.0) worst_hat = std::max(worst_hat, k / khat);
        else if (k > 0.0) worst_hat = INFINITY;
      }
    }
    pass = pass && worst_decay <= 1.0 + kRelSlack && worst_hat <= 1.0 + kRelSlack;
    detail += "n=" + std::to_string(n) + ": max K/bound " + fmt("%.3g", worst_decay) +
              ", max K/Khat " + fmt("%.3g", worst_hat) + "; ";
  }
  SamplerConfig lo;
  lo.n = 1;
  lo.T = 1.0;
  lo.dt = 1.0 / 16.0;
  lo.tilt = TiltParams(0.0, 2.0, 1);
  lo.boundary = ZeroBoundary{0.05};
  lo.sweeps = 3000;
  SamplerConfig hi = lo;
  hi.boundary = ZeroBoundary{0.8};
  const CouplingReport cr = monotone_coupling_check(lo, hi, 1.0);
  pass = pass && cr.passed;
  detail += "coupling P(max<=1) " + fmt("%.4f", cr.low.mean) + " >= " + fmt("%.4f", cr.high.mean) +
            (cr.passed ? " ok" : " violated");
  return {pass, detail};
}

Outcome identities() {
  double dual = 0.0;
  for (double t : {0.1, 0.5, 1.0, 3.0}) {
    for (double x : {0.05, 0.3, 1.0, 2.5}) {
      for (double y : {0.05, 0.7, 1.0, 3.0}) {
        const auto f = absorbed_kernel_forms(t, x, y);
        dual = std::max(dual, std::abs(f.difference - f.sinh_form) / f.sinh_form);
      }
    }
  }
  double hit = 0.0;
  boost::math::quadrature::exp_sinh<double> integrator;
  for (double b : {0.3, 1.0, 2.5}) {
    const double mass = integrator.integrate([b](double t) { return hitting_density(b, t); }, 0.0,
                                             INFINITY);
    hit = std::max(hit, std::abs(mass - 1.0));
  }
  double refl_z = 0.0;
  for (double eta : {0.5, 1.0}) {
    for (double delta : {0.3, 1.0}) {
      const auto r = reflection_identity_check(eta, delta, 20000, 3);
      refl_z = std::max(refl_z, std::abs(r.monte_carlo - r.exact) / r.std_error);
    }
  }
  double parseval = 0.0, semigroup = 0.0;
  for (std::size_t n : {1, 2}) {
    SpectralOptions o;
    o.R = n == 1 ? 8.0 : 9.0;
    o.h = n == 1 ? 0.05 : 0.3;
    o.m_tau = 32;
    const SpectralData s = compute_spectral(TiltParams(1.0, 2.0, n), o);
    const auto p = psi_s(ThetaMeasure::lebesgue(), 1.0, s);
    parseval = std::max(parseval, std::abs(p.coeffs.alpha.squaredNorm() - p.coeffs.psi_norm_sq) /
                                      p.coeffs.psi_norm_sq);
    Eigen::MatrixXd prod = Eigen::MatrixXd::Identity(s.step.rows(), s.step.cols());
    for (std::size_t k = 0; k < 2 * s.m_tau; ++k) prod = prod * s.step;
    const Eigen::MatrixXd sq = s.K1mat * s.K1mat;
    semigroup = std::max(semigroup, (prod - sq).norm() / sq.norm());
  }
  const bool pass = dual <= 1e-12 && hit <= 1e-6 && refl_z <= 3.0 && parseval <= 1e-10 &&
                    semigroup <= 1e-10;
  return {pass, "dual forms " + fmt("%.2g", dual) + ", hitting |mass-1| " + fmt("%.2g", hit) +
                    ", reflection max |z| " + fmt("%.2f", refl_z) + ", Parseval " +
                    fmt("%.2g", parseval) + ", semigroup " + fmt("%.2g", semigroup)};
}

std::map<std::string, std::string> artifacts(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    const auto ext = e.path().extension();
    if (ext != ".csv" && ext != ".json") continue;
    std::ifstream in(e.path(), std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    out[fs::relative(e.path(), dir).string()] = s.str();
  }
  return out;
}

Outcome determinism() {
  const fs::path root = fs::temp_directory_path() / "tiltlab_acceptance_determinism";
  fs::remove_all(root);
  const std::string grid = " -n 1 --truncation 8 --spacing 0.05";
  const std::vector<std::pair<std::string, std::string>> runs = {
      {"oracle", "oracle-suite"},
      {"spectral", "spectral" + grid + " --with-basis"},
      {"converge", "converge" + grid + " --half-lengths 2,3,4,5,6,7"},
      {"converge_max", "converge -n 1 --truncation 6 --spacing 0.2 --event max-bound "
                       "--event-bound 1.5 --half-lengths 2,3,4,5 --mc-samples 32 --threads 2"},
      {"sample_zero", "sample -T 1 --boundary zero --eps 0.01 --sweeps 2000 --chains 3 "
                      "--threads 2 --seed 9"},
      {"sample_free", "sample -T 2 --boundary free --sweeps 1000 --chains 2 --threads 2"},
      {"kappa", "kappa" + grid + " --eps-list 1,0.5,0.25,0.125"},
  };
  std::size_t files = 0;
  std::string mismatched;
  for (const auto& [name, args] : runs) {
    std::map<std::string, std::string> got[2];
    for (int rep = 0; rep < 2; ++rep) {
      const fs::path dir = root / (name + "_" + std::to_string(rep));
      const std::string cmd =
          std::string(TILTLAB_EXE) + " " + args + " --out " + dir.string() + " >/dev/null 2>&1";
      const int rc = std::system(cmd.c_str());
      if (rc != 0) {
        return {false, name + " exited with status " + std::to_string(rc)};
      }
      got[rep] = artifacts(dir);
    }
    if (got[0].empty()) mismatched += name + "(no artifacts) ";
    if (got[0] != got[1]) mismatched += name + " ";
    files += got[0].size();
  }
  fs::remove_all(root);
  return {mismatched.empty(), std::to_string(runs.size()) + " runs, " + std::to_string(files) +
                                  " CSV/JSON files compared" +
                                  (mismatched.empty() ? "" : ", differing: " + mismatched)};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"grabiner_km", grabiner_km},
      {"airy_ground_state", airy_ground_state},
      {"finite_T_limit", finite_T_limit},
      {"gap_rate", gap_rate},
      {"sampler_cross_check", sampler_cross_check},
      {"kappa_flatness", kappa_flatness},
      {"bounds", bounds},
      {"identities", identities},
      {"determinism", determinism},
  };
  const std::string which = argc > 1 ? argv[1] : "all";
  bool any = false, all_pass = true;
  for (const auto& [name, run] : criteria) {
    if (which != "all" && which != name) continue;
    any = true;
    Outcome o;
    try {
      o = run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    all_pass = all_pass && o.pass;
    std::cout << (o.pass ? "PASS" : "FAIL") << "  " << name << "  " << o.detail << std::endl;
  }
  if (!any) {
    std::cerr << "unknown criterion '" << which << "'\n";
    return 2;
  }
  return all_pass ? 0 : 1;
}
