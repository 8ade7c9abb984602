#include "tiltlab/samplers.hpp"

#include "parallel.hpp"
#include "tiltlab/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>

namespace tiltlab {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double log_survival(double u, double v, double dt, double var_rate) {
  if (!(u > 0.0) || !(v > 0.0)) return kNegInf;
  return std::log(-std::expm1(-2.0 * u * v / (var_rate * dt)));
}

std::vector<double> boundary_heights(const SamplerConfig& config) {
  if (const auto* zero = std::get_if<ZeroBoundary>(&config.boundary)) {
    auto e = corner_direction(config.n);
    for (double& v : e) v *= zero->epsilon;
    return e;
  }
  auto e = corner_direction(config.n);
  for (double& v : e) v *= 0.5;
  return e;
}

}  // namespace

std::size_t SamplerConfig::steps() const {
  return static_cast<std::size_t>(std::llround(2.0 * T / dt));
}

void SamplerConfig::validate() const {
  if (n == 0) throw std::invalid_argument("SamplerConfig: n must be >= 1");
  if (tilt.n() != n) throw std::invalid_argument("SamplerConfig: tilt dimension differs from n");
  if (!(T > 0.0) || !(dt > 0.0)) throw std::invalid_argument("SamplerConfig: need T > 0, dt > 0");
  const double half = T / dt;
  if (std::abs(half - std::round(half)) > 1e-9 * std::max(1.0, half)) {
    throw std::invalid_argument("SamplerConfig: dt must divide T so that t = 0 is a grid time");
  }
  if (steps() < 2) throw std::invalid_argument("SamplerConfig: need at least two steps");
  if (chains == 0) throw std::invalid_argument("SamplerConfig: need at least one chain");
  if (const auto* zero = std::get_if<ZeroBoundary>(&boundary)) {
    if (!(zero->epsilon > 0.0)) {
      throw std::invalid_argument("SamplerConfig: zero boundary needs epsilon > 0 on a grid");
    }
  } else {
    std::get<FreeBoundary>(boundary).theta.require_integrable(tilt.a(), T);
  }
}

DiscretePath sample_bridge(double x, double y, double left, double right, double dt, Rng& rng) {
  if (!(right > left) || !(dt > 0.0)) throw std::invalid_argument("sample_bridge: bad interval");
  const double ratio = (right - left) / dt;
  const auto steps = static_cast<std::size_t>(std::llround(ratio));
  if (steps == 0 || std::abs(ratio - static_cast<double>(steps)) > 1e-9 * ratio) {
    throw std::invalid_argument("sample_bridge: dt must divide the interval length");
  }
  DiscretePath path(1, left, right, steps);
  const double h = path.dt();
  path.at(0, 0) = x;
  path.at(0, steps) = y;
  double prev = x;
  for (std::size_t k = 1; k < steps; ++k) {
    const double remaining = static_cast<double>(steps - k + 1);
    const double mean = prev + (y - prev) / remaining;
    const double var = h * (remaining - 1.0) / remaining;
    prev = mean + std::sqrt(var) * rng.normal();
    path.at(0, k) = prev;
  }
  return path;
}

double log_crossing_weight(const DiscretePath& path, CrossingWeight crossing) {
  if (!path.admissible(Closure::kStrict)) return kNegInf;
  if (crossing == CrossingWeight::kGridOnly) return 0.0;
  const double dt = path.dt();
  const std::size_t n = path.n();
  double total = 0.0;
  for (std::size_t k = 0; k < path.steps(); ++k) {
    for (std::size_t i = 0; i + 1 < n; ++i) {
      total += log_survival(path.at(i, k) - path.at(i + 1, k),
                            path.at(i, k + 1) - path.at(i + 1, k + 1), dt, 2.0);
    }
    total += log_survival(path.at(n - 1, k), path.at(n - 1, k + 1), dt, 1.0);
  }
  return total;
}

RejectionSampler::RejectionSampler(const SamplerConfig& config) : config_(config) {
  config_.validate();
  const auto* zero = std::get_if<ZeroBoundary>(&config_.boundary);
  if (zero == nullptr) {
    throw std::invalid_argument("RejectionSampler: only zero boundary conditions are supported");
  }
  if (config_.n > 2 || config_.T > 2.0) {
    throw std::invalid_argument(
        "RejectionSampler: restricted to n <= 2 and T <= 2; use the MCMC sampler");
  }
  endpoints_ = boundary_heights(config_);
}

double RejectionSampler::acceptance_rate() const {
  return proposals_ == 0 ? 0.0 : static_cast<double>(accepted_) / static_cast<double>(proposals_);
}

DiscretePath RejectionSampler::draw(Rng& rng) {
  const std::size_t steps = config_.steps();
  DiscretePath path(config_.n, -config_.T, config_.T, steps);
  const double dt = path.dt();
  for (;;) {
    // Bridges are drawn coordinate by coordinate with sequential
    // conditioning; a grid violation against the coordinate above (or the
    // wall) ends the proposal early, which only skips work on paths that
    // would be rejected anyway.
    bool admissible = true;
    for (std::size_t i = 0; i < config_.n && admissible; ++i) {
      const double y = endpoints_[i];
      double prev = y;
      path.at(i, 0) = y;
      path.at(i, steps) = y;
      for (std::size_t k = 1; k < steps; ++k) {
        const double remaining = static_cast<double>(steps - k + 1);
        const double mean = prev + (y - prev) / remaining;
        prev = mean + std::sqrt(dt * (remaining - 1.0) / remaining) * rng.normal();
        path.at(i, k) = prev;
        const bool below_upper = i == 0 || prev < path.at(i - 1, k);
        const bool above_wall = i + 1 < config_.n || prev > 0.0;
        if (!below_upper || !above_wall) {
          admissible = false;
          break;
        }
      }
    }
    ++proposals_;
    const double log_accept =
        admissible ? log_crossing_weight(path, config_.crossing) : kNegInf;
    bool accept = false;
    if (log_accept > kNegInf) {
      const double log_p = log_accept - area_functional(path, config_.tilt);
      accept = std::log(rng.uniform()) < log_p;
    }
    if (accept) {
      ++accepted_;
      return path;
    }
    if (proposals_ >= kGuardWindow && acceptance_rate() < kMinAcceptance) {
      std::ostringstream msg;
      msg << "rejection sampler starved: acceptance rate " << acceptance_rate() << " after "
          << proposals_ << " proposals (< " << kMinAcceptance
          << "); use the MCMC sampler for this configuration";
      throw AcceptanceStarvation(msg.str());
    }
  }
}

DiscretePath rejection_sample_zero(const SamplerConfig& config, Rng& rng) {
  RejectionSampler sampler(config);
  return sampler.draw(rng);
}

std::vector<DiscretePath> rejection_sample_many(const SamplerConfig& config, std::size_t count) {
  constexpr std::size_t kBlock = 64;
  RejectionSampler probe(config);  // validates once up front
  const std::size_t blocks = (count + kBlock - 1) / kBlock;
  std::vector<std::vector<DiscretePath>> out(blocks);
  detail::parallel_for(blocks, config.threads, [&](std::size_t b) {
    RejectionSampler sampler(config);
    Rng rng(config.seed, derive_stream(0xA11CE, b));
    const std::size_t todo = std::min(kBlock, count - b * kBlock);
    out[b].reserve(todo);
    for (std::size_t j = 0; j < todo; ++j) out[b].push_back(sampler.draw(rng));
  });
  std::vector<DiscretePath> all;
  all.reserve(count);
  for (auto& block : out) {
    for (auto& p : block) all.push_back(std::move(p));
  }
  return all;
}

double ChainDiagnostics::segment_rate() const {
  return segment_proposed == 0 ? 0.0
                               : static_cast<double>(segment_accepted) /
                                     static_cast<double>(segment_proposed);
}

double ChainDiagnostics::endpoint_rate() const {
  return endpoint_proposed == 0 ? 0.0
                                : static_cast<double>(endpoint_accepted) /
                                      static_cast<double>(endpoint_proposed);
}

DiscretePath initial_state(const SamplerConfig& config) {
  const std::size_t steps = config.steps();
  DiscretePath path(config.n, -config.T, config.T, steps);
  const auto ends = boundary_heights(config);
  for (std::size_t i = 0; i < config.n; ++i) {
    const double lift = static_cast<double>(config.n - i);
    for (std::size_t k = 0; k <= steps; ++k) {
      const double tent = std::min(static_cast<double>(std::min(k, steps - k)) * path.dt(), 1.0);
      path.at(i, k) = ends[i] + lift * tent;
    }
  }
  return path;
}

McmcChain::McmcChain(const SamplerConfig& config, Rng rng)
    : McmcChain(config, std::move(rng), initial_state(config)) {}

McmcChain::McmcChain(const SamplerConfig& config, Rng rng, DiscretePath initial)
    : config_(config), rng_(std::move(rng)), path_(std::move(initial)) {
  config_.validate();
  if (path_.n() != config_.n || path_.steps() != config_.steps()) {
    throw std::invalid_argument("McmcChain: initial state does not match the configuration");
  }
  if (!path_.admissible(Closure::kStrict)) {
    throw std::invalid_argument("McmcChain: initial state is not admissible");
  }
  if (const auto* zero = std::get_if<ZeroBoundary>(&config_.boundary)) {
    const auto ends = boundary_heights(config_);
    for (std::size_t i = 0; i < config_.n; ++i) {
      if (path_.at(i, 0) != ends[i] || path_.at(i, path_.steps()) != ends[i]) {
        throw std::invalid_argument("McmcChain: initial state violates the zero boundary");
      }
    }
    (void)zero;
  }
  const std::size_t pts = path_.points();
  trap_weights_.assign(pts, path_.dt());
  trap_weights_.front() = trap_weights_.back() = 0.5 * path_.dt();
  coef_.resize(config_.n);
  for (std::size_t i = 0; i < config_.n; ++i) coef_[i] = config_.tilt.a() * config_.tilt.weights()[i];
  scratch_.resize(pts);
}

double McmcChain::log_step_weight(std::size_t coord, std::size_t k, double lo_val,
                                  double hi_val) const {
  if (config_.crossing == CrossingWeight::kGridOnly) return 0.0;
  const double dt = path_.dt();
  double w = 0.0;
  if (coord > 0) {
    w += log_survival(path_.at(coord - 1, k) - lo_val, path_.at(coord - 1, k + 1) - hi_val, dt,
                      2.0);
  }
  if (coord + 1 < config_.n) {
    w += log_survival(lo_val - path_.at(coord + 1, k), hi_val - path_.at(coord + 1, k + 1), dt,
                      2.0);
  } else {
    w += log_survival(lo_val, hi_val, dt, 1.0);
  }
  return w;
}

double McmcChain::log_ratio(std::size_t coord, std::size_t k_first,
                            std::span<const double> values, bool* admissible) const {
  const std::size_t k_last = k_first + values.size() - 1;
  const std::size_t m = path_.steps();
  *admissible = true;
  double delta_area = 0.0;
  for (std::size_t j = 0; j < values.size(); ++j) {
    const std::size_t k = k_first + j;
    const double v = values[j];
    if (coord > 0 && !(path_.at(coord - 1, k) > v)) *admissible = false;
    if (coord + 1 < config_.n ? !(v > path_.at(coord + 1, k)) : !(v > 0.0)) *admissible = false;
    if (!*admissible) return kNegInf;
    delta_area += trap_weights_[k] * (v - path_.at(coord, k));
  }
  double log_r = -coef_[coord] * delta_area;

  if (config_.crossing == CrossingWeight::kBridgeCorrected) {
    auto proposed = [&](std::size_t k) {
      return (k >= k_first && k <= k_last) ? values[k - k_first] : path_.at(coord, k);
    };
    const std::size_t s_begin = k_first == 0 ? 0 : k_first - 1;
    const std::size_t s_end = std::min(k_last, m - 1);
    for (std::size_t k = s_begin; k <= s_end; ++k) {
      log_r += log_step_weight(coord, k, proposed(k), proposed(k + 1)) -
               log_step_weight(coord, k, path_.at(coord, k), path_.at(coord, k + 1));
    }
  }

  if (const auto* free = std::get_if<FreeBoundary>(&config_.boundary)) {
    for (std::size_t k : {std::size_t{0}, m}) {
      if (k < k_first || k > k_last) continue;
      auto slice = path_.slice(k);
      const double before = free->theta.log_density(slice);
      slice[coord] = values[k - k_first];
      log_r += free->theta.log_density(slice) - before;
    }
  }
  return log_r;
}

double McmcChain::acceptance_probability(std::size_t coord, std::size_t k_first,
                                         std::span<const double> values) const {
  bool ok = false;
  const double lr = log_ratio(coord, k_first, values, &ok);
  if (!ok) return 0.0;
  return lr >= 0.0 ? 1.0 : std::exp(lr);
}

void McmcChain::apply(std::size_t coord, std::size_t k_first, std::span<const double> values) {
  for (std::size_t j = 0; j < values.size(); ++j) path_.at(coord, k_first + j) = values[j];
}

void McmcChain::segment_move(std::size_t coord) {
  const std::size_t m = path_.steps();
  const double dt = path_.dt();
  const double min_len = std::min<double>(4.0, static_cast<double>(m));
  const double max_len =
      std::clamp(std::round(config_.T / dt), min_len, static_cast<double>(m));
  const double u = rng_.uniform();
  const auto len = static_cast<std::size_t>(std::clamp(
      std::round(std::exp(std::log(min_len) + u * (std::log(max_len) - std::log(min_len)))),
      min_len, max_len));

  std::size_t k_first = 0;
  std::span<double> values;
  const double sd = std::sqrt(dt);
  const bool anchored = config_.is_free() && rng_.uniform() < 0.25;
  if (anchored) {
    values = std::span<double>(scratch_.data(), len);
    if (rng_.uniform() < 0.5) {
      // Redraw [0, len-1] as Brownian motion run backwards from X(len).
      k_first = 0;
      double cur = path_.at(coord, len);
      for (std::size_t j = len; j-- > 0;) {
        cur += sd * rng_.normal();
        values[j] = cur;
      }
    } else {
      k_first = m - len + 1;
      double cur = path_.at(coord, m - len);
      for (std::size_t j = 0; j < len; ++j) {
        cur += sd * rng_.normal();
        values[j] = cur;
      }
    }
  } else {
    if (len < 2) return;
    const std::size_t k0 = rng_.below(m - len + 1);
    const std::size_t k1 = k0 + len;
    k_first = k0 + 1;
    values = std::span<double>(scratch_.data(), len - 1);
    const double target = path_.at(coord, k1);
    double prev = path_.at(coord, k0);
    for (std::size_t k = k0 + 1; k < k1; ++k) {
      const double remaining = static_cast<double>(k1 - k + 1);
      const double mean = prev + (target - prev) / remaining;
      const double var = dt * (remaining - 1.0) / remaining;
      prev = mean + std::sqrt(var) * rng_.normal();
      values[k - k_first] = prev;
    }
  }
  ++diag_.segment_proposed;
  bool ok = false;
  const double lr = log_ratio(coord, k_first, values, &ok);
  if (ok && (lr >= 0.0 || std::log(rng_.uniform()) < lr)) {
    apply(coord, k_first, values);
    ++diag_.segment_accepted;
  }
}

void McmcChain::endpoint_move(std::size_t coord, bool left) {
  const std::size_t m = path_.steps();
  const double dt = path_.dt();
  const std::size_t k = left ? 0 : m;
  const std::size_t nb = left ? 1 : m - 1;
  const double old_v = path_.at(coord, k);
  const double new_v = old_v + std::sqrt(dt) * rng_.normal();
  ++diag_.endpoint_proposed;
  bool ok = false;
  double lr = log_ratio(coord, k, std::span<const double>(&new_v, 1), &ok);
  if (!ok) return;
  const double nbv = path_.at(coord, nb);
  lr += ((nbv - old_v) * (nbv - old_v) - (nbv - new_v) * (nbv - new_v)) / (2.0 * dt);
  if (lr >= 0.0 || std::log(rng_.uniform()) < lr) {
    path_.at(coord, k) = new_v;
    ++diag_.endpoint_accepted;
  }
}

void McmcChain::sweep() {
  for (std::size_t i = 0; i < config_.n; ++i) {
    for (std::size_t s = 0; s < config_.segment_moves; ++s) segment_move(i);
  }
  if (config_.is_free()) {
    for (std::size_t i = 0; i < config_.n; ++i) {
      for (std::size_t e = 0; e < config_.endpoint_moves; ++e) {
        endpoint_move(i, true);
        endpoint_move(i, false);
      }
    }
  }
}

double McmcChain::log_target() const {
  const double crossing = log_crossing_weight(path_, config_.crossing);
  if (crossing == kNegInf) return kNegInf;
  const double dt = path_.dt();
  double log_p = crossing - area_functional(path_, config_.tilt);
  for (std::size_t i = 0; i < config_.n; ++i) {
    for (std::size_t k = 0; k < path_.steps(); ++k) {
      const double d = path_.at(i, k + 1) - path_.at(i, k);
      log_p -= d * d / (2.0 * dt);
    }
  }
  if (const auto* free = std::get_if<FreeBoundary>(&config_.boundary)) {
    log_p += free->theta.log_density(path_.slice(0));
    log_p += free->theta.log_density(path_.slice(path_.steps()));
  }
  return log_p;
}

McmcResult mcmc_sample(const SamplerConfig& config, std::span<const Observable> observables) {
  config.validate();
  McmcResult result;
  result.series.assign(observables.size(), std::vector<std::vector<double>>(config.chains));
  result.diagnostics.resize(config.chains);
  detail::parallel_for(config.chains, config.threads, [&](std::size_t c) {
    McmcChain chain(config, Rng(config.seed, derive_stream(0, c)));
    for (auto& per_obs : result.series) per_obs[c].reserve(config.sweeps);
    for (std::size_t s = 0; s < config.burn_in + config.sweeps; ++s) {
      chain.sweep();
      if (s < config.burn_in) continue;
      for (std::size_t o = 0; o < observables.size(); ++o) {
        result.series[o][c].push_back(observables[o](chain.state()));
      }
    }
    result.diagnostics[c] = chain.diagnostics();
  });
  return result;
}

std::vector<DiscretePath> mcmc_sample_paths(const SamplerConfig& config, std::size_t thin) {
  config.validate();
  thin = std::max<std::size_t>(thin, 1);
  std::vector<std::vector<DiscretePath>> per_chain(config.chains);
  detail::parallel_for(config.chains, config.threads, [&](std::size_t c) {
    McmcChain chain(config, Rng(config.seed, derive_stream(0, c)));
    for (std::size_t s = 0; s < config.burn_in + config.sweeps; ++s) {
      chain.sweep();
      if (s >= config.burn_in && (s - config.burn_in) % thin == 0) {
        per_chain[c].push_back(chain.state());
      }
    }
  });
  std::vector<DiscretePath> all;
  for (auto& chain : per_chain) {
    for (auto& p : chain) all.push_back(std::move(p));
  }
  return all;
}

Observable indicator(const PathEvent& event) {
  return [event](const DiscretePath& p) { return event.contains(p) ? 1.0 : 0.0; };
}

Observable height_at(std::size_t coord, double time) {
  return [coord, time](const DiscretePath& p) { return p.at(coord, p.index_of_time(time)); };
}

MCEstimate batch_means(const std::vector<std::vector<double>>& chains,
                       std::size_t batches_per_chain) {
  MCEstimate est;
  double sum = 0.0, sum_sq = 0.0;
  for (const auto& c : chains) {
    for (double v : c) {
      sum += v;
      sum_sq += v * v;
    }
    est.count += c.size();
  }
  if (est.count < 2) throw std::invalid_argument("batch_means: need at least 2 samples");
  const double n = static_cast<double>(est.count);
  est.mean = sum / n;
  const double var = std::max(0.0, sum_sq / n - est.mean * est.mean) * n / (n - 1.0);

  std::vector<double> means;
  double batch_len_total = 0.0;
  for (const auto& c : chains) {
    if (c.empty()) continue;
    const std::size_t nb = std::min(batches_per_chain, c.size());
    const std::size_t len = c.size() / nb;
    for (std::size_t b = 0; b < nb; ++b) {
      const auto first = c.begin() + static_cast<std::ptrdiff_t>(b * len);
      means.push_back(std::accumulate(first, first + static_cast<std::ptrdiff_t>(len), 0.0) /
                      static_cast<double>(len));
      batch_len_total += static_cast<double>(len);
    }
  }
  const double nbatch = static_cast<double>(means.size());
  if (var == 0.0 || means.size() < 2) {
    est.std_error = 0.0;
    est.ess = n;
    return est;
  }
  const double mbar = std::accumulate(means.begin(), means.end(), 0.0) / nbatch;
  double ss = 0.0;
  for (double m : means) ss += (m - mbar) * (m - mbar);
  const double var_means = ss / (nbatch - 1.0);
  const double batch_len = batch_len_total / nbatch;
  // Batch-means variance of the overall mean, floored at the iid value.
  const double var_mean = std::max(var_means * batch_len, var) / n;
  est.std_error = std::sqrt(var_mean);
  est.ess = std::min(n, var / var_mean);
  return est;
}

MCEstimate estimate_event(std::span<const DiscretePath> samples, const PathEvent& event) {
  if (samples.size() < 2) throw std::invalid_argument("estimate_event: need at least 2 samples");
  std::vector<std::vector<double>> series(1);
  series[0].reserve(samples.size());
  for (const auto& p : samples) series[0].push_back(event.contains(p) ? 1.0 : 0.0);
  return batch_means(series);
}

CouplingReport monotone_coupling_check(const SamplerConfig& config_low,
                                       const SamplerConfig& config_high, double max_level) {
  config_low.validate();
  config_high.validate();
  if (config_low.n != config_high.n || config_low.steps() != config_high.steps() ||
      config_low.T != config_high.T || config_low.dt != config_high.dt) {
    throw std::invalid_argument("monotone_coupling_check: mismatched grids");
  }
  if (config_low.tilt.a() != 0.0 || config_high.tilt.a() != 0.0) {
    throw std::invalid_argument("monotone_coupling_check: both configurations must be untilted");
  }
  const auto* low = std::get_if<ZeroBoundary>(&config_low.boundary);
  const auto* high = std::get_if<ZeroBoundary>(&config_high.boundary);
  if (low == nullptr || high == nullptr || high->epsilon < low->epsilon) {
    throw std::invalid_argument(
        "monotone_coupling_check: need zero boundaries with the high corner above the low one");
  }
  const Observable obs[] = {indicator(PathEvent::max_bound(max_level))};
  CouplingReport report;
  report.max_level = max_level;
  report.low = batch_means(mcmc_sample(config_low, obs).series[0]);
  report.high = batch_means(mcmc_sample(config_high, obs).series[0]);
  report.combined_std_error = std::hypot(report.low.std_error, report.high.std_error);
  report.passed = report.high.mean <= report.low.mean + 3.0 * report.combined_std_error;
  return report;
}

double ks_distance(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) throw std::invalid_argument("ks_distance: empty sample");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= x) ++i;
    while (j < b.size() && b[j] <= x) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  return d;
}

}  // namespace tiltlab
