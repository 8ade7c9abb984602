#pragma once

// Monte Carlo samplers for the discretized tilted line ensemble on
// I_T = [-T, T]: an exact rejection sampler for tiny instances, a
// local-move Metropolis chain, and batch-means estimators.

#include "tiltlab/chamber.hpp"
#include "tiltlab/rng.hpp"

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace tiltlab {

/// How the non-crossing constraint is enforced between grid times.
///  - kGridOnly: only the grid slices must lie in the chamber.
///  - kBridgeCorrected: additionally weight every grid step by the
///    probability that the interpolating Brownian bridges of the wall gap
///    and of each neighbouring gap stay positive.
enum class CrossingWeight { kGridOnly, kBridgeCorrected };

/// Endpoints pinned at eps * (2n-1, ..., 1) at both ends.
struct ZeroBoundary {
  double epsilon = 1e-3;
};

/// Endpoints integrated against theta at both ends.
struct FreeBoundary {
  ThetaMeasure theta = ThetaMeasure::lebesgue();
};

using Boundary = std::variant<ZeroBoundary, FreeBoundary>;

struct SamplerConfig {
  std::size_t n = 1;
  double T = 1.0;
  double dt = 1.0 / 64.0;
  TiltParams tilt{1.0, 2.0, 1};
  Boundary boundary = ZeroBoundary{};
  std::uint64_t seed = 1;
  std::size_t chains = 4;
  std::size_t sweeps = 1000;
  std::size_t burn_in = 100;
  std::size_t threads = 1;
  CrossingWeight crossing = CrossingWeight::kBridgeCorrected;
  /// Segment proposals per coordinate per sweep.
  std::size_t segment_moves = 4;
  /// Endpoint proposals per coordinate and side per sweep (free boundary).
  std::size_t endpoint_moves = 2;

  std::size_t steps() const;
  bool is_free() const { return std::holds_alternative<FreeBoundary>(boundary); }

  /// Throws std::invalid_argument (or IntegrabilityError) when invalid.
  void validate() const;
};

struct MCEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  double ess = 0.0;
  std::size_t count = 0;
};

class AcceptanceStarvation : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Gaussian bridge from x at `left` to y at `right` on a grid of step dt,
/// built by sequential conditioning left to right; endpoints are exact.
DiscretePath sample_bridge(double x, double y, double left, double right, double dt, Rng& rng);

/// Log of the crossing weight of a path (0 for kGridOnly, -inf if a grid
/// slice leaves the closed chamber).
double log_crossing_weight(const DiscretePath& path, CrossingWeight crossing);

/// Exact sampler for the zero-boundary measure via rejection from
/// independent bridges. Restricted to n <= 2 and T <= 2; throws
/// AcceptanceStarvation when the observed acceptance rate drops below 1e-4.
class RejectionSampler {
 public:
  explicit RejectionSampler(const SamplerConfig& config);

  DiscretePath draw(Rng& rng);

  std::size_t proposals() const { return proposals_; }
  std::size_t accepted() const { return accepted_; }
  double acceptance_rate() const;

  static constexpr double kMinAcceptance = 1e-4;
  static constexpr std::size_t kGuardWindow = 100000;

 private:
  SamplerConfig config_;
  std::vector<double> endpoints_;
  std::size_t proposals_ = 0;
  std::size_t accepted_ = 0;
};

DiscretePath rejection_sample_zero(const SamplerConfig& config, Rng& rng);

/// `count` independent exact draws, split across config.threads workers
/// with one child stream per draw block.
std::vector<DiscretePath> rejection_sample_many(const SamplerConfig& config, std::size_t count);

struct ChainDiagnostics {
  std::size_t segment_proposed = 0;
  std::size_t segment_accepted = 0;
  std::size_t endpoint_proposed = 0;
  std::size_t endpoint_accepted = 0;

  double segment_rate() const;
  double endpoint_rate() const;
};

/// One Metropolis chain. Moves:
///  (i) redraw a window of one coordinate as a bridge between its fixed
///      ends (window length log-uniform in [4 dt, T]); under free
///      boundary the window may instead be anchored at an end and redrawn
///      as free Brownian motion;
///  (ii) under free boundary, Gaussian steps of a single endpoint height.
/// Each move is accepted with the Metropolis ratio of tilt weight, crossing
/// weight and endpoint density; inadmissible proposals are rejected.
class McmcChain {
 public:
  McmcChain(const SamplerConfig& config, Rng rng);

  /// Starts from a given admissible state (throws otherwise).
  McmcChain(const SamplerConfig& config, Rng rng, DiscretePath initial);

  void sweep();

  const DiscretePath& state() const { return path_; }
  const ChainDiagnostics& diagnostics() const { return diag_; }

  /// Log of the unnormalized target density of the current state.
  double log_target() const;

  /// Metropolis acceptance probability of replacing coordinate `coord` on
  /// grid indices [k_first, k_last] by `values`.
  double acceptance_probability(std::size_t coord, std::size_t k_first,
                                std::span<const double> values) const;

 private:
  void segment_move(std::size_t coord);
  void endpoint_move(std::size_t coord, bool left);
  double log_ratio(std::size_t coord, std::size_t k_first, std::span<const double> values,
                   bool* admissible) const;
  double log_step_weight(std::size_t coord, std::size_t k, double lo_val, double hi_val) const;
  void apply(std::size_t coord, std::size_t k_first, std::span<const double> values);

  SamplerConfig config_;
  Rng rng_;
  DiscretePath path_;
  std::vector<double> trap_weights_;
  std::vector<double> coef_;
  std::vector<double> scratch_;
  ChainDiagnostics diag_;
};

/// Initial admissible state for a configuration.
DiscretePath initial_state(const SamplerConfig& config);

using Observable = std::function<double(const DiscretePath&)>;

struct McmcResult {
  /// series[o][c][s]: observable o on chain c after retained sweep s.
  std::vector<std::vector<std::vector<double>>> series;
  std::vector<ChainDiagnostics> diagnostics;
};

/// Runs config.chains chains in parallel (config.threads workers); chain c
/// uses stream derive_stream(seed, c). Output is independent of threads.
McmcResult mcmc_sample(const SamplerConfig& config, std::span<const Observable> observables);

/// Retained states of every chain, concatenated in chain order, keeping
/// one state every `thin` sweeps.
std::vector<DiscretePath> mcmc_sample_paths(const SamplerConfig& config, std::size_t thin = 1);

Observable indicator(const PathEvent& event);
Observable height_at(std::size_t coord, double time);

/// Batch-means estimate over one or more chains of the same observable.
MCEstimate batch_means(const std::vector<std::vector<double>>& chains,
                       std::size_t batches_per_chain = 20);

/// Probability estimate of `event` over a sample sequence (treated as one
/// chain in order). Throws std::invalid_argument for fewer than 2 samples.
MCEstimate estimate_event(std::span<const DiscretePath> samples, const PathEvent& event);

struct CouplingReport {
  double max_level = 0.0;
  MCEstimate low;
  MCEstimate high;
  double combined_std_error = 0.0;
  bool passed = false;
};

/// Estimates P(max_{[0,1]} X_1 <= M) under two untilted zero-boundary
/// configurations on the same grid, `high` having the larger corner scale,
/// and checks P_high <= P_low + 3 sigma.
CouplingReport monotone_coupling_check(const SamplerConfig& config_low,
                                       const SamplerConfig& config_high, double max_level);

/// Two-sample Kolmogorov-Smirnov distance.
double ks_distance(std::vector<double> a, std::vector<double> b);

// Flat binary layout: magic "TLPATHS\0", u32 version, u32 n, u64 steps,
// f64 left, f64 right, f64 dt, u64 count, then count * n * (steps+1) f64 heights,
// row-major per path. Little-endian host order.
void write_paths_binary(std::ostream& out, std::span<const DiscretePath> paths);
std::vector<DiscretePath> read_paths_binary(std::istream& in);
/// CSV columns: sample,coord,k,t,height.
void write_paths_csv(std::ostream& out, std::span<const DiscretePath> paths);

}  // namespace tiltlab
