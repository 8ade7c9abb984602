#pragma once

#include "config.hpp"

#include <iosfwd>
#include <string>

namespace tiltlab::cli {

enum ExitCode : int { kExitOk = 0, kExitCheckFailed = 1, kExitConfigError = 2 };

struct CommandContext {
  ExperimentConfig config;
  bool json = false;
  /// oracle-suite: perturb one check so that it fails.
  bool inject_failure = false;
  /// sample: spectral file to compare the Monte Carlo estimate against.
  std::string spectral_file;
  /// spectral: also store the eigenvector basis in spectral.bin.
  bool with_basis = false;
  /// Bridge samples for Monte Carlo path-event operators.
  std::size_t mc_samples = 256;
};

// Each command writes its artifacts under config.out and a report to `out`,
// and returns an ExitCode. Configuration problems surface as exceptions
// (ConfigError, IntegrabilityError, std::invalid_argument,
// std::domain_error) for main() to map to kExitConfigError.
int cmd_oracle_suite(const CommandContext& ctx, std::ostream& out);
int cmd_spectral(const CommandContext& ctx, std::ostream& out);
int cmd_converge(const CommandContext& ctx, std::ostream& out);
int cmd_sample(const CommandContext& ctx, std::ostream& out);
int cmd_kappa(const CommandContext& ctx, std::ostream& out);

}  // namespace tiltlab::cli
