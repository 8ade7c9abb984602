#pragma once

// Experiment configuration for the tiltlab driver: a flat key/value file
// with [sections], parsed with CLI11's INI reader and written back with
// shortest round-trip formatting so that save/load is bit-exact.

#include "tiltlab/chamber.hpp"
#include "tiltlab/samplers.hpp"

#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

namespace tiltlab::cli {

/// Invalid configuration (maps to exit code 2).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ExperimentConfig {
  // [experiment]
  std::string name = "experiment";
  std::uint64_t seed = 1;
  std::string out = "tiltlab_out";
  std::size_t threads = 1;

  // [model]
  std::size_t n = 1;
  double a = 1.0;
  double b = 2.0;
  std::string boundary = "free";  // free | zero
  double eps = 1e-3;
  std::string theta = "lebesgue";  // lebesgue | product-exp | exp-growth
  double theta_rate = 0.0;

  // [sampler]
  double T = 3.0;
  double dt = 1.0 / 64.0;
  std::size_t chains = 4;
  std::size_t sweeps = 1000;
  std::size_t burn_in = 100;
  std::string crossing = "bridge";  // bridge | grid
  bool rejection = true;

  // [grid]; zero selects the per-dimension default
  double R = 0.0;
  double h = 0.0;
  std::size_t m_tau = 0;

  // [event]
  std::string event = "endpoint-box";  // endpoint-box | max-bound | full
  std::size_t event_coord = 1;          // 1-based
  double event_bound = 1.0;

  // [converge] / [kappa]
  std::vector<double> T_list = {2, 3, 4, 5, 6, 7, 8};
  std::vector<double> eps_list = {1, 0.5, 0.25, 0.125, 0.0625, 0.03125, 0.015625};

  bool operator==(const ExperimentConfig&) const = default;
};

/// Sets `section.key` from its textual value; throws ConfigError on an
/// unknown key or a malformed value.
void set_value(ExperimentConfig& config, const std::string& section, const std::string& key,
               const std::string& value);

/// Values absent from the file keep their value in `base`.
ExperimentConfig parse_config(std::istream& in, ExperimentConfig base = {});
ExperimentConfig load_config(const std::string& path, ExperimentConfig base = {});
std::string to_ini(const ExperimentConfig& config);

/// Semantic checks shared by all subcommands; throws ConfigError.
void validate(const ExperimentConfig& config);

TiltParams tilt_of(const ExperimentConfig& config);
ThetaMeasure theta_of(const ExperimentConfig& config);
PathEvent event_of(const ExperimentConfig& config);
SamplerConfig sampler_of(const ExperimentConfig& config);

std::string format_real(double v);
std::string format_list(const std::vector<double>& values);

}  // namespace tiltlab::cli
