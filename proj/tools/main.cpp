#include "commands.hpp"
#include "config.hpp"

#include "tiltlab/chamber.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <functional>
#include <iostream>
#include <map>
#include <stdexcept>

namespace {

using namespace tiltlab::cli;

// Flags that map one-to-one onto config keys. Values are kept as text and
// applied through the config parser so both routes share validation.
struct FlagSpec {
  const char* names;
  const char* section;
  const char* key;
  const char* help;
};

constexpr FlagSpec kFlags[] = {
    {"-n,--lines", "model", "n", "number of lines (1..4)"},
    {"-a,--tilt", "model", "a", "area tilt a >= 0"},
    {"-b,--growth", "model", "b", "tilt growth b > 1"},
    {"--boundary", "model", "boundary", "free | zero"},
    {"--eps", "model", "eps", "corner scale of the zero boundary"},
    {"--theta", "model", "theta", "lebesgue | product-exp | exp-growth"},
    {"--theta-rate", "model", "theta_rate", "rate of the endpoint measure"},
    {"-T,--half-length", "sampler", "T", "half-length T of [-T, T]"},
    {"--dt", "sampler", "dt", "time step of the path grid"},
    {"--chains", "sampler", "chains", "independent MCMC chains"},
    {"--sweeps", "sampler", "sweeps", "retained sweeps per chain (also rejection draws)"},
    {"--burn-in", "sampler", "burn_in", "discarded sweeps per chain"},
    {"--crossing", "sampler", "crossing", "bridge | grid"},
    {"--rejection", "sampler", "rejection", "run the rejection sampler when eligible"},
    {"--truncation", "grid", "R", "chamber truncation R (0 = default)"},
    {"--spacing", "grid", "h", "cell side h (0 = default)"},
    {"--substeps", "grid", "m_tau", "Strang substeps per unit time (0 = default)"},
    {"--event", "event", "kind", "endpoint-box | max-bound | full"},
    {"--event-coord", "event", "coord", "1-based coordinate of the endpoint box"},
    {"--event-bound", "event", "bound", "level of the event"},
    {"--half-lengths", "converge", "T_list", "comma-separated T values"},
    {"--eps-list", "kappa", "eps_list", "comma-separated eps values in (0, 1]"},
    {"--seed", "experiment", "seed", "master seed"},
    {"--out", "experiment", "out", "output directory"},
    {"--threads", "experiment", "threads", "worker threads (default from TILTLAB_THREADS)"},
};

struct Invocation {
  std::string config_path;
  std::map<std::string, std::string> values;  // flag names -> text
  CommandContext ctx;
};

void add_common(CLI::App* sub, Invocation& inv) {
  sub->add_option("--config", inv.config_path, "INI experiment file")->check(CLI::ExistingFile);
  for (const auto& f : kFlags) {
    sub->add_option(f.names, inv.values[f.names], f.help);
  }
  sub->add_flag("--json", inv.ctx.json, "print a JSON report on stdout");
}

ExperimentConfig merged_config(const Invocation& inv, const CLI::App* sub) {
  ExperimentConfig base;
  if (const char* env = std::getenv("TILTLAB_THREADS"); env && *env) {
    set_value(base, "experiment", "threads", env);
  }
  ExperimentConfig config = inv.config_path.empty() ? base : load_config(inv.config_path, base);
  for (const auto& f : kFlags) {
    const auto* opt = sub->get_option_no_throw(std::string(f.names).substr(std::string(f.names).rfind(',') + 1));
    if (opt && opt->count() > 0) set_value(config, f.section, f.key, inv.values.at(f.names));
  }
  return config;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"tiltlab: area-tilted line ensemble experiments"};
  app.require_subcommand(1);

  Invocation inv;
  using Runner = std::function<int(const CommandContext&, std::ostream&)>;
  std::vector<std::pair<CLI::App*, Runner>> commands;

  auto* oracle = app.add_subcommand("oracle-suite", "closed-form kernel identities");
  add_common(oracle, inv);
  oracle->add_flag("--inject-failure", inv.ctx.inject_failure, "perturb one check (test mode)");
  commands.emplace_back(oracle, cmd_oracle_suite);

  auto* spectral = app.add_subcommand("spectral", "discretize K1 and write its spectrum");
  add_common(spectral, inv);
  spectral->add_flag("--with-basis", inv.ctx.with_basis, "store all eigenvectors");
  commands.emplace_back(spectral, cmd_spectral);

  auto* converge = app.add_subcommand("converge", "finite-T probabilities against the limit");
  add_common(converge, inv);
  converge->add_option("--mc-samples", inv.ctx.mc_samples, "bridge samples for path events");
  commands.emplace_back(converge, cmd_converge);

  auto* sample = app.add_subcommand("sample", "MCMC and rejection sampling");
  add_common(sample, inv);
  sample->add_option("--spectral-file", inv.ctx.spectral_file, "spectral.bin to compare against");
  sample->add_option("--mc-samples", inv.ctx.mc_samples, "bridge samples for path events");
  commands.emplace_back(sample, cmd_sample);

  auto* kappa = app.add_subcommand("kappa", "boundary constant kappa over eps");
  add_common(kappa, inv);
  commands.emplace_back(kappa, cmd_kappa);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfigError;
  }

  for (auto& [sub, run] : commands) {
    if (!sub->parsed()) continue;
    try {
      inv.ctx.config = merged_config(inv, sub);
      return run(inv.ctx, std::cout);
    } catch (const ConfigError& e) {
      std::cerr << "error: " << e.what() << "\n";
      return kExitConfigError;
    } catch (const tiltlab::IntegrabilityError& e) {
      std::cerr << "integrability error: " << e.what() << "\n";
      return kExitConfigError;
    } catch (const std::invalid_argument& e) {
      std::cerr << "invalid configuration: " << e.what() << "\n";
      return kExitConfigError;
    } catch (const std::domain_error& e) {
      std::cerr << "invalid configuration: " << e.what() << "\n";
      return kExitConfigError;
    } catch (const std::length_error& e) {
      std::cerr << "problem too large: " << e.what() << "\n";
      return kExitConfigError;
    } catch (const std::exception& e) {
      std::cerr << "error: " << e.what() << "\n";
      return kExitCheckFailed;
    }
  }
  return kExitConfigError;
}
