#include "tiltlab/spectral.hpp"

#include "kernel_detail.hpp"
#include "parallel.hpp"
#include "tiltlab/kernels.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace tiltlab {
namespace {

void enumerate(std::size_t n, std::int32_t top, std::vector<std::int32_t>& prefix,
               ChamberGrid& grid) {
  // Lexicographic order: the first index varies slowest.
  const std::size_t depth = prefix.size();
  if (depth == n) {
    for (std::size_t i = 0; i < n; ++i) {
      grid.index.push_back(prefix[i]);
      grid.centers.push_back((prefix[i] + 0.5) * grid.h);
    }
    return;
  }
  const auto lowest = static_cast<std::int32_t>(n - depth - 1);
  for (std::int32_t i = lowest; i <= top; ++i) {
    prefix.push_back(i);
    enumerate(n, i - 1, prefix, grid);
    prefix.pop_back();
  }
}

Eigen::MatrixXd matrix_power(const Eigen::MatrixXd& base, std::size_t power) {
  Eigen::MatrixXd result;
  Eigen::MatrixXd square = base;
  bool have = false;
  while (power > 0) {
    if (power & 1U) {
      if (!have) {
        result = square;
        have = true;
      } else {
        Eigen::MatrixXd next = result * square;
        result = 0.5 * (next + next.transpose());
      }
    }
    power >>= 1U;
    if (power > 0) {
      Eigen::MatrixXd next = square * square;
      square = 0.5 * (next + next.transpose());
    }
  }
  return result;
}

}  // namespace

double ChamberGrid::cell_volume() const { return std::pow(h, static_cast<double>(n)); }

ChamberGrid build_grid(std::size_t n, double R, double h) {
  if (n == 0) throw std::invalid_argument("build_grid: n must be >= 1");
  if (!(h > 0.0) || !std::isfinite(h) || !std::isfinite(R)) {
    throw std::invalid_argument("build_grid: need finite h > 0 and finite R");
  }
  ChamberGrid grid;
  grid.n = n;
  grid.R = R;
  grid.h = h;
  // Largest i with (i + 1/2) h <= R.
  const double top_real = std::floor(R / h - 0.5 + 1e-12);
  if (top_real >= 1e6) throw std::invalid_argument("build_grid: too many cells per axis");
  const auto top = static_cast<std::int32_t>(top_real);
  std::vector<std::int32_t> prefix;
  if (top >= static_cast<std::int32_t>(n) - 1) enumerate(n, top, prefix, grid);
  if (grid.size() == 0) {
    std::ostringstream msg;
    msg << "build_grid: no cell centers of spacing " << h << " inside the chamber below R = " << R;
    throw std::invalid_argument(msg.str());
  }
  return grid;
}

double default_truncation(std::size_t n, double a) {
  if (!(a > 0.0)) throw std::invalid_argument("default_truncation: needs a > 0");
  return 8.0 / a + 2.0 * static_cast<double>(n);
}

double default_spacing(std::size_t n) {
  static constexpr double kSpacing[] = {0.01, 0.2, 0.5, 0.8};
  if (n == 0 || n > 4) throw std::invalid_argument("default_spacing: n must be in 1..4");
  return kSpacing[n - 1];
}

std::size_t default_substeps(std::size_t n) {
  static constexpr std::size_t kSubsteps[] = {32, 32, 8, 4};
  if (n == 0 || n > 4) throw std::invalid_argument("default_substeps: n must be in 1..4");
  return kSubsteps[n - 1];
}

double strang_step_kernel(double tau, const TiltParams& tilt, std::span<const double> x,
                          std::span<const double> u) {
  if (!is_in_chamber(x) || !is_in_chamber(u)) return 0.0;
  const double log_d = -0.5 * tau * (tilt.linear_rate(x) + tilt.linear_rate(u));
  return std::exp(detail::log_km(tau, x, u) + log_d);
}

TransferMatrices discretize_K1(const ChamberGrid& grid, const TiltParams& tilt,
                               const DiscretizeOptions& options) {
  if (options.m_tau == 0) throw std::invalid_argument("discretize_K1: m_tau must be >= 1");
  if (tilt.n() != grid.n) throw std::invalid_argument("discretize_K1: tilt and grid differ in n");
  const std::size_t N = grid.size();
  if (static_cast<double>(N) * static_cast<double>(N) >
      static_cast<double>(options.max_matrix_entries)) {
    std::ostringstream msg;
    msg << "discretize_K1: " << N << " cells exceed the dense-matrix cap of "
        << options.max_matrix_entries << " entries; coarsen h or lower R";
    throw std::length_error(msg.str());
  }
  const double tau = 1.0 / static_cast<double>(options.m_tau);
  const double log_vol = std::log(grid.cell_volume());
  std::vector<double> half_log_d(N);
  for (std::size_t k = 0; k < N; ++k) half_log_d[k] = -0.5 * tau * tilt.linear_rate(grid.point(k));

  TransferMatrices out;
  out.m_tau = options.m_tau;
  out.step.resize(static_cast<Eigen::Index>(N), static_cast<Eigen::Index>(N));
  constexpr std::size_t kBlock = 32;
  const std::size_t blocks = (N + kBlock - 1) / kBlock;
  detail::parallel_for(blocks, options.threads, [&](std::size_t b) {
    const std::size_t r0 = b * kBlock, r1 = std::min(N, r0 + kBlock);
    for (std::size_t r = r0; r < r1; ++r) {
      const auto x = grid.point(r);
      for (std::size_t c = r; c < N; ++c) {
        const double v =
            std::exp(detail::log_km(tau, x, grid.point(c)) + half_log_d[r] + half_log_d[c] + log_vol);
        out.step(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(r)) = v;
        out.step(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = v;
      }
    }
  });
  out.K1 = matrix_power(out.step, options.m_tau);
  out.K1 = out.K1.cwiseMax(0.0);
  return out;
}

}  // namespace tiltlab
