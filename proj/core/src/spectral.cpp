#include "tiltlab/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace tiltlab {
namespace {

// All eigenpairs of a dense symmetric matrix, descending.
void dense_eigen(const Eigen::MatrixXd& m, Eigen::VectorXd& values, Eigen::MatrixXd& vectors) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(m);
  if (solver.info() != Eigen::Success) {
    throw std::runtime_error("eigendecompose: dense symmetric eigensolver did not converge");
  }
  values = solver.eigenvalues().reverse();
  vectors = solver.eigenvectors().rowwise().reverse();
}

// Leading `pairs` eigenpairs by Lanczos with full reorthogonalization.
void lanczos_eigen(const Eigen::MatrixXd& m, std::size_t pairs, Eigen::VectorXd& values,
                   Eigen::MatrixXd& vectors) {
  const Eigen::Index N = m.rows();
  const Eigen::Index k_max = std::min<Eigen::Index>(N, std::max<Eigen::Index>(
                                                           4 * static_cast<Eigen::Index>(pairs), 80));
  const auto want = std::min<Eigen::Index>(static_cast<Eigen::Index>(pairs), k_max);
  Eigen::MatrixXd Q(N, k_max);
  Eigen::VectorXd alpha(k_max), beta(k_max);
  // Deterministic positive start vector; the ground state is positive.
  Eigen::VectorXd q = Eigen::VectorXd::Ones(N) / std::sqrt(static_cast<double>(N));
  Eigen::Index k = 0;
  for (; k < k_max; ++k) {
    Q.col(k) = q;
    Eigen::VectorXd z = m * q;
    alpha(k) = q.dot(z);
    for (int pass = 0; pass < 2; ++pass) {
      z -= Q.leftCols(k + 1) * (Q.leftCols(k + 1).transpose() * z);
    }
    beta(k) = z.norm();
    if (beta(k) < 1e-14 * std::abs(alpha(0))) {
      ++k;
      break;
    }
    q = z / beta(k);
  }
  Eigen::MatrixXd tri = Eigen::MatrixXd::Zero(k, k);
  for (Eigen::Index i = 0; i < k; ++i) {
    tri(i, i) = alpha(i);
    if (i + 1 < k) tri(i, i + 1) = tri(i + 1, i) = beta(i);
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(tri);
  const auto take = std::min(want, k);
  values = solver.eigenvalues().tail(take).reverse();
  vectors = Q.leftCols(k) * solver.eigenvectors().rightCols(take).rowwise().reverse();
  for (Eigen::Index j = 0; j < take; ++j) vectors.col(j).normalize();
}

}  // namespace

SpectralData eigendecompose(ChamberGrid grid, const TiltParams& tilt, TransferMatrices matrices,
                            const EigenOptions& options) {
  const auto N = static_cast<std::size_t>(matrices.K1.rows());
  if (N != grid.size() || matrices.K1.cols() != matrices.K1.rows()) {
    throw std::invalid_argument("eigendecompose: matrix does not match the grid");
  }
  if (N < 2) throw std::invalid_argument("eigendecompose: need at least two cells");
  SpectralData out;
  out.grid = std::move(grid);
  out.tilt = tilt;
  out.m_tau = matrices.m_tau;
  out.step = std::move(matrices.step);
  out.K1mat = std::move(matrices.K1);

  if (N <= options.max_dense_cells) {
    dense_eigen(out.K1mat, out.lambdas, out.basis);
    out.full_basis = true;
  } else {
    lanczos_eigen(out.K1mat, std::max<std::size_t>(options.lanczos_pairs, 2), out.lambdas,
                  out.basis);
    out.full_basis = false;
  }
  const double l1 = out.lambdas(0);
  if (!(l1 > 0.0)) throw std::runtime_error("eigendecompose: top eigenvalue is not positive");
  if (out.lambdas(1) / l1 >= 1.0 - 1e-6) {
    std::ostringstream msg;
    msg << "eigendecompose: top eigenvalue is not simple (lambda2/lambda1 = "
        << out.lambdas(1) / l1 << ")";
    throw std::runtime_error(msg.str());
  }
  if (out.lambdas.minCoeff() < -1e-12 * l1) {
    std::ostringstream msg;
    msg << "eigendecompose: eigenvalue " << out.lambdas.minCoeff()
        << " below roundoff level; the discretized operator is not positive semidefinite";
    throw std::runtime_error(msg.str());
  }
  if (out.basis.col(0).sum() < 0.0) out.basis.col(0) = -out.basis.col(0);
  out.phi1 = out.basis.col(0).cwiseAbs();
  if (out.phi1.minCoeff() <= 0.0) {
    // Roundoff in the far tail; one application of the nonnegative K1mat
    // restores strict positivity without moving the eigenvector.
    out.phi1 = out.K1mat * out.phi1;
    out.phi1.normalize();
  }
  out.gap = (l1 - out.lambdas(1)) / l1;
  return out;
}

SpectralData compute_spectral(const TiltParams& tilt, const SpectralOptions& options) {
  const std::size_t n = tilt.n();
  const double R = options.R ? *options.R : default_truncation(n, tilt.a());
  const double h = options.h ? *options.h : default_spacing(n);
  DiscretizeOptions d;
  d.m_tau = options.m_tau ? *options.m_tau : default_substeps(n);
  d.threads = options.threads;
  d.max_matrix_entries = options.max_matrix_entries;
  ChamberGrid grid = build_grid(n, R, h);
  TransferMatrices mats = discretize_K1(grid, tilt, d);
  return eigendecompose(std::move(grid), tilt, std::move(mats), options.eigen);
}

}  // namespace tiltlab
