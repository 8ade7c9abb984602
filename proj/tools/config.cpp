#include "config.hpp"

#include <CLI11.hpp>

#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace tiltlab::cli {
namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return "";
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

double to_real(const std::string& key, const std::string& text) {
  const std::string t = trim(text);
  double v = 0.0;
  const auto res = std::from_chars(t.data(), t.data() + t.size(), v);
  if (res.ec != std::errc() || res.ptr != t.data() + t.size() || !std::isfinite(v)) {
    throw ConfigError("config: '" + key + "' expects a real number, got '" + text + "'");
  }
  return v;
}

std::uint64_t to_unsigned(const std::string& key, const std::string& text) {
  const std::string t = trim(text);
  std::uint64_t v = 0;
  const auto res = std::from_chars(t.data(), t.data() + t.size(), v);
  if (res.ec != std::errc() || res.ptr != t.data() + t.size()) {
    throw ConfigError("config: '" + key + "' expects a non-negative integer, got '" + text + "'");
  }
  return v;
}

bool to_bool(const std::string& key, const std::string& text) {
  const std::string t = trim(text);
  if (t == "true" || t == "1" || t == "on") return true;
  if (t == "false" || t == "0" || t == "off") return false;
  throw ConfigError("config: '" + key + "' expects true or false, got '" + text + "'");
}

std::vector<double> to_list(const std::string& key, const std::string& text) {
  std::vector<double> out;
  std::string item;
  std::istringstream in(text);
  while (std::getline(in, item, ',')) {
    if (trim(item).empty()) continue;
    out.push_back(to_real(key, item));
  }
  if (out.empty()) throw ConfigError("config: '" + key + "' expects a non-empty list");
  return out;
}

std::string one_of(const std::string& key, const std::string& text,
                   std::initializer_list<const char*> allowed) {
  const std::string t = trim(text);
  for (const char* a : allowed) {
    if (t == a) return t;
  }
  std::string msg = "config: '" + key + "' must be one of";
  for (const char* a : allowed) msg += std::string(" ") + a;
  throw ConfigError(msg + ", got '" + text + "'");
}

}  // namespace

std::string format_real(double v) {
  std::array<char, 40> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), res.ptr);
}

std::string format_list(const std::vector<double>& values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out += ',';
    out += format_real(values[i]);
  }
  return out;
}

void set_value(ExperimentConfig& c, const std::string& section, const std::string& key,
               const std::string& value) {
  const std::string full = section + "." + key;
  if (section == "experiment") {
    if (key == "name") return void(c.name = trim(value));
    if (key == "seed") return void(c.seed = to_unsigned(full, value));
    if (key == "out") return void(c.out = trim(value));
    if (key == "threads") return void(c.threads = to_unsigned(full, value));
  } else if (section == "model") {
    if (key == "n") return void(c.n = to_unsigned(full, value));
    if (key == "a") return void(c.a = to_real(full, value));
    if (key == "b") return void(c.b = to_real(full, value));
    if (key == "boundary") return void(c.boundary = one_of(full, value, {"free", "zero"}));
    if (key == "eps") return void(c.eps = to_real(full, value));
    if (key == "theta") {
      return void(c.theta = one_of(full, value, {"lebesgue", "product-exp", "exp-growth"}));
    }
    if (key == "theta_rate") return void(c.theta_rate = to_real(full, value));
  } else if (section == "sampler") {
    if (key == "T") return void(c.T = to_real(full, value));
    if (key == "dt") return void(c.dt = to_real(full, value));
    if (key == "chains") return void(c.chains = to_unsigned(full, value));
    if (key == "sweeps") return void(c.sweeps = to_unsigned(full, value));
    if (key == "burn_in") return void(c.burn_in = to_unsigned(full, value));
    if (key == "crossing") return void(c.crossing = one_of(full, value, {"bridge", "grid"}));
    if (key == "rejection") return void(c.rejection = to_bool(full, value));
  } else if (section == "grid") {
    if (key == "R") return void(c.R = to_real(full, value));
    if (key == "h") return void(c.h = to_real(full, value));
    if (key == "m_tau") return void(c.m_tau = to_unsigned(full, value));
  } else if (section == "event") {
    if (key == "kind") {
      return void(c.event = one_of(full, value, {"endpoint-box", "max-bound", "full"}));
    }
    if (key == "coord") return void(c.event_coord = to_unsigned(full, value));
    if (key == "bound") return void(c.event_bound = to_real(full, value));
  } else if (section == "converge") {
    if (key == "T_list") return void(c.T_list = to_list(full, value));
  } else if (section == "kappa") {
    if (key == "eps_list") return void(c.eps_list = to_list(full, value));
  }
  throw ConfigError("config: unknown key '" + full + "'");
}

ExperimentConfig parse_config(std::istream& in, ExperimentConfig base) {
  ExperimentConfig config = std::move(base);
  std::vector<CLI::ConfigItem> items;
  try {
    items = CLI::ConfigINI().from_config(in);
  } catch (const CLI::Error& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  for (const auto& item : items) {
    if (item.name == "++" || item.name == "--") continue;  // section markers
    if (item.parents.size() != 1) {
      throw ConfigError("config: key '" + item.name + "' must sit inside one [section]");
    }
    std::string value;
    for (std::size_t i = 0; i < item.inputs.size(); ++i) {
      if (i) value += ',';
      value += item.inputs[i];
    }
    set_value(config, item.parents[0], item.name, value);
  }
  return config;
}

ExperimentConfig load_config(const std::string& path, ExperimentConfig base) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open '" + path + "'");
  return parse_config(in, std::move(base));
}

std::string to_ini(const ExperimentConfig& c) {
  std::ostringstream o;
  o << "[experiment]\n"
    << "name = " << c.name << "\n"
    << "seed = " << c.seed << "\n"
    << "out = " << c.out << "\n"
    << "threads = " << c.threads << "\n\n"
    << "[model]\n"
    << "n = " << c.n << "\n"
    << "a = " << format_real(c.a) << "\n"
    << "b = " << format_real(c.b) << "\n"
    << "boundary = " << c.boundary << "\n"
    << "eps = " << format_real(c.eps) << "\n"
    << "theta = " << c.theta << "\n"
    << "theta_rate = " << format_real(c.theta_rate) << "\n\n"
    << "[sampler]\n"
    << "T = " << format_real(c.T) << "\n"
    << "dt = " << format_real(c.dt) << "\n"
    << "chains = " << c.chains << "\n"
    << "sweeps = " << c.sweeps << "\n"
    << "burn_in = " << c.burn_in << "\n"
    << "crossing = " << c.crossing << "\n"
    << "rejection = " << (c.rejection ? "true" : "false") << "\n\n"
    << "[grid]\n"
    << "R = " << format_real(c.R) << "\n"
    << "h = " << format_real(c.h) << "\n"
    << "m_tau = " << c.m_tau << "\n\n"
    << "[event]\n"
    << "kind = " << c.event << "\n"
    << "coord = " << c.event_coord << "\n"
    << "bound = " << format_real(c.event_bound) << "\n\n"
    << "[converge]\n"
    << "T_list = \"" << format_list(c.T_list) << "\"\n\n"
    << "[kappa]\n"
    << "eps_list = \"" << format_list(c.eps_list) << "\"\n";
  return o.str();
}

void validate(const ExperimentConfig& c) {
  if (c.n < 1 || c.n > 4) throw ConfigError("config: model.n must be in 1..4");
  if (!(c.a >= 0.0)) throw ConfigError("config: model.a must be >= 0");
  if (!(c.b > 1.0)) throw ConfigError("config: model.b must be > 1");
  if (!(c.eps > 0.0)) throw ConfigError("config: model.eps must be > 0");
  if (c.theta != "lebesgue" && !(c.theta_rate > 0.0)) {
    throw ConfigError("config: model.theta_rate must be > 0 for " + c.theta);
  }
  if (!(c.T > 0.0) || !(c.dt > 0.0)) throw ConfigError("config: sampler.T and dt must be > 0");
  if (c.chains == 0) throw ConfigError("config: sampler.chains must be >= 1");
  if (c.threads == 0) throw ConfigError("config: experiment.threads must be >= 1");
  if (c.R < 0.0 || c.h < 0.0) throw ConfigError("config: grid.R and grid.h must be >= 0");
  if (c.event_coord < 1 || c.event_coord > c.n) {
    throw ConfigError("config: event.coord must be in 1..n");
  }
  if (c.out.empty()) throw ConfigError("config: experiment.out must not be empty");
}

TiltParams tilt_of(const ExperimentConfig& c) { return TiltParams(c.a, c.b, c.n); }

ThetaMeasure theta_of(const ExperimentConfig& c) {
  if (c.theta == "product-exp") return ThetaMeasure::product_exponential(c.theta_rate);
  if (c.theta == "exp-growth") return ThetaMeasure::exponential_growth(c.theta_rate);
  return ThetaMeasure::lebesgue();
}

PathEvent event_of(const ExperimentConfig& c) {
  if (c.event == "full") return PathEvent::full_space();
  if (c.event == "max-bound") return PathEvent::max_bound(c.event_bound);
  return PathEvent::endpoint_box(c.event_coord - 1, c.event_bound);
}

SamplerConfig sampler_of(const ExperimentConfig& c) {
  SamplerConfig s;
  s.n = c.n;
  s.T = c.T;
  s.dt = c.dt;
  s.tilt = tilt_of(c);
  if (c.boundary == "zero") {
    s.boundary = ZeroBoundary{c.eps};
  } else {
    s.boundary = FreeBoundary{theta_of(c)};
  }
  s.seed = c.seed;
  s.chains = c.chains;
  s.sweeps = c.sweeps;
  s.burn_in = c.burn_in;
  s.threads = c.threads;
  s.crossing = c.crossing == "grid" ? CrossingWeight::kGridOnly : CrossingWeight::kBridgeCorrected;
  return s;
}

}  // namespace tiltlab::cli
