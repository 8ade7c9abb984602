#include "tiltlab/samplers.hpp"

#include <array>
#include <charconv>
#include <cstring>
#include <istream>
#include <ostream>

namespace tiltlab {
namespace {

constexpr std::array<char, 8> kMagic = {'T', 'L', 'P', 'A', 'T', 'H', 'S', '\0'};
constexpr std::uint32_t kVersion = 1;

template <class T>
void put(std::ostream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T get(std::istream& in) {
  T v{};
  if (!in.read(reinterpret_cast<char*>(&v), sizeof(T))) {
    throw std::runtime_error("read_paths_binary: truncated stream");
  }
  return v;
}

void put_real(std::ostream& out, double v) {
  std::array<char, 32> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v,
                                 std::chars_format::general, 17);
  out.write(buf.data(), res.ptr - buf.data());
}

}  // namespace

void write_paths_binary(std::ostream& out, std::span<const DiscretePath> paths) {
  std::uint32_t n = 0;
  std::uint64_t steps = 0;
  double left = 0.0, right = 0.0, dt = 0.0;
  if (!paths.empty()) {
    n = static_cast<std::uint32_t>(paths[0].n());
    steps = paths[0].steps();
    left = paths[0].left();
    right = paths[0].right();
    dt = paths[0].dt();
    for (const auto& p : paths) {
      if (p.n() != n || p.steps() != steps || p.left() != left || p.right() != right) {
        throw std::invalid_argument("write_paths_binary: paths must share one grid");
      }
    }
  }
  out.write(kMagic.data(), kMagic.size());
  put(out, kVersion);
  put(out, n);
  put(out, steps);
  put(out, left);
  put(out, right);
  put(out, dt);
  put(out, static_cast<std::uint64_t>(paths.size()));
  for (const auto& p : paths) {
    const auto d = p.data();
    out.write(reinterpret_cast<const char*>(d.data()),
              static_cast<std::streamsize>(d.size() * sizeof(double)));
  }
  if (!out) throw std::runtime_error("write_paths_binary: write failed");
}

std::vector<DiscretePath> read_paths_binary(std::istream& in) {
  std::array<char, 8> magic{};
  if (!in.read(magic.data(), magic.size()) || magic != kMagic) {
    throw std::runtime_error("read_paths_binary: bad magic");
  }
  const auto version = get<std::uint32_t>(in);
  if (version != kVersion) throw std::runtime_error("read_paths_binary: unsupported version");
  const auto n = get<std::uint32_t>(in);
  const auto steps = get<std::uint64_t>(in);
  const auto left = get<double>(in);
  const auto right = get<double>(in);
  const auto dt = get<double>(in);
  const auto count = get<std::uint64_t>(in);
  std::vector<DiscretePath> paths;
  if (count == 0) return paths;
  if (n == 0 || steps == 0 || !(dt > 0.0) || !(right > left)) {
    throw std::runtime_error("read_paths_binary: bad header");
  }
  paths.reserve(count);
  for (std::uint64_t c = 0; c < count; ++c) {
    DiscretePath p(n, left, right, steps);
    for (std::size_t i = 0; i < n; ++i) {
      auto row = p.row(i);
      if (!in.read(reinterpret_cast<char*>(row.data()),
                   static_cast<std::streamsize>(row.size() * sizeof(double)))) {
        throw std::runtime_error("read_paths_binary: truncated payload");
      }
    }
    paths.push_back(std::move(p));
  }
  return paths;
}

void write_paths_csv(std::ostream& out, std::span<const DiscretePath> paths) {
  out << "sample,coord,k,t,height\r\n";
  for (std::size_t s = 0; s < paths.size(); ++s) {
    const auto& p = paths[s];
    for (std::size_t i = 0; i < p.n(); ++i) {
      for (std::size_t k = 0; k < p.points(); ++k) {
        out << s << ',' << i << ',' << k << ',';
        put_real(out, p.time(k));
        out << ',';
        put_real(out, p.at(i, k));
        out << "\r\n";
      }
    }
  }
}

}  // namespace tiltlab
