#include "tiltlab/spectral.hpp"

#include <nlohmann/json.hpp>

#include <array>
#include <istream>
#include <ostream>

namespace tiltlab {
namespace {

constexpr std::array<char, 8> kMagic = {'T', 'L', 'S', 'P', 'E', 'C', '\0', '\0'};
constexpr std::uint32_t kVersion = 1;

template <class T>
void put(std::ostream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T get(std::istream& in) {
  T v{};
  if (!in.read(reinterpret_cast<char*>(&v), sizeof(T))) {
    throw std::runtime_error("read_spectral_binary: truncated stream");
  }
  return v;
}

void put_doubles(std::ostream& out, const double* p, std::size_t count) {
  out.write(reinterpret_cast<const char*>(p), static_cast<std::streamsize>(count * sizeof(double)));
}

void get_doubles(std::istream& in, double* p, std::size_t count) {
  if (!in.read(reinterpret_cast<char*>(p), static_cast<std::streamsize>(count * sizeof(double)))) {
    throw std::runtime_error("read_spectral_binary: truncated payload");
  }
}

}  // namespace

void write_spectral_binary(std::ostream& out, const SpectralData& spec, bool with_basis) {
  out.write(kMagic.data(), kMagic.size());
  put(out, kVersion);
  put(out, static_cast<std::uint32_t>(with_basis ? 1U : 0U));
  put(out, static_cast<std::uint64_t>(spec.grid.n));
  put(out, spec.grid.R);
  put(out, spec.grid.h);
  put(out, spec.tau());
  put(out, spec.tilt.a());
  put(out, spec.tilt.b());
  put(out, static_cast<std::uint64_t>(spec.cells()));
  put(out, static_cast<std::uint64_t>(spec.lambdas.size()));
  put_doubles(out, spec.lambdas.data(), static_cast<std::size_t>(spec.lambdas.size()));
  put_doubles(out, spec.phi1.data(), static_cast<std::size_t>(spec.phi1.size()));
  if (with_basis) {
    put_doubles(out, spec.basis.data(), static_cast<std::size_t>(spec.basis.size()));
  }
  if (!out) throw std::runtime_error("write_spectral_binary: write failed");
}

SpectralFile read_spectral_binary(std::istream& in) {
  std::array<char, 8> magic{};
  if (!in.read(magic.data(), magic.size()) || magic != kMagic) {
    throw std::runtime_error("read_spectral_binary: bad magic");
  }
  if (get<std::uint32_t>(in) != kVersion) {
    throw std::runtime_error("read_spectral_binary: unsupported version");
  }
  const auto flags = get<std::uint32_t>(in);
  SpectralFile f;
  f.n = get<std::uint64_t>(in);
  f.R = get<double>(in);
  f.h = get<double>(in);
  f.tau = get<double>(in);
  f.a = get<double>(in);
  f.b = get<double>(in);
  f.cells = get<std::uint64_t>(in);
  const auto count = get<std::uint64_t>(in);
  if (f.n == 0 || f.cells == 0 || count == 0 || count > f.cells) {
    throw std::runtime_error("read_spectral_binary: bad header");
  }
  f.lambdas.resize(static_cast<Eigen::Index>(count));
  get_doubles(in, f.lambdas.data(), count);
  f.phi1.resize(static_cast<Eigen::Index>(f.cells));
  get_doubles(in, f.phi1.data(), f.cells);
  if (flags & 1U) {
    Eigen::MatrixXd basis(static_cast<Eigen::Index>(f.cells), static_cast<Eigen::Index>(count));
    get_doubles(in, basis.data(), f.cells * count);
    f.basis = std::move(basis);
  }
  return f;
}

std::string spectral_summary_json(const SpectralData& spec) {
  nlohmann::ordered_json j;
  j["schema"] = "tiltlab.spectral/1";
  j["n"] = spec.grid.n;
  j["a"] = spec.tilt.a();
  j["b"] = spec.tilt.b();
  j["R"] = spec.grid.R;
  j["h"] = spec.grid.h;
  j["m_tau"] = spec.m_tau;
  j["cells"] = spec.cells();
  j["solver"] = spec.full_basis ? "dense" : "lanczos";
  j["lambda1"] = spec.lambda1();
  j["lambda2"] = spec.lambda2();
  j["gap"] = spec.gap;
  return j.dump(2);
}

}  // namespace tiltlab
