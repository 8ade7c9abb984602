#pragma once

// Transfer-operator numerics: Nystrom discretization of the tilted kernel
// K_1 on a truncated chamber grid, its eigendecomposition, and the
// finite-T spectral formulas for free and zero boundary conditions.

#include "tiltlab/chamber.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace tiltlab {

/// Midpoint cells of side h in A_n, truncated at x_1 <= R. Cell k has
/// integer index (i_1 > ... > i_n >= 0) and center (i + 1/2) h; cells are
/// enumerated in lexicographic order of the index.
struct ChamberGrid {
  std::size_t n = 1;
  double R = 0.0;
  double h = 0.0;
  std::vector<double> centers;     // size() * n, row-major
  std::vector<std::int32_t> index;  // size() * n, row-major

  std::size_t size() const { return n == 0 ? 0 : centers.size() / n; }
  std::span<const double> point(std::size_t k) const { return {centers.data() + k * n, n}; }
  double cell_volume() const;
};

/// Throws std::invalid_argument for h <= 0 or an empty grid.
ChamberGrid build_grid(std::size_t n, double R, double h);

/// Defaults per dimension: R = 8/a + 2n, h in {0.01, 0.2, 0.5, 0.8} and
/// m_tau in {32, 32, 8, 4}, so that sqrt(tau) stays comparable to h.
double default_truncation(std::size_t n, double a);
double default_spacing(std::size_t n);
std::size_t default_substeps(std::size_t n);

struct DiscretizeOptions {
  std::size_t m_tau = 32;
  std::size_t threads = 1;
  /// Upper bound on cells^2 (entries of one dense matrix).
  std::size_t max_matrix_entries = 40'000'000;
};

struct TransferMatrices {
  /// One Strang step h^n D^{1/2} G_tau D^{1/2}, tau = 1/m_tau.
  Eigen::MatrixXd step;
  /// step^{m_tau}, symmetrized; entries are K_1(u, v) h^n.
  Eigen::MatrixXd K1;
  std::size_t m_tau = 0;
};

/// Throws std::length_error when the grid exceeds the memory cap.
TransferMatrices discretize_K1(const ChamberGrid& grid, const TiltParams& tilt,
                               const DiscretizeOptions& options = {});

/// Entry-wise kernel of the one-step Strang splitting,
/// e^{-tau a<b,x>/2} Khat_tau(x, u) e^{-tau a<b,u>/2}, at arbitrary points.
double strang_step_kernel(double tau, const TiltParams& tilt, std::span<const double> x,
                          std::span<const double> u);

struct EigenOptions {
  /// Dense solve up to this many cells, Lanczos beyond.
  std::size_t max_dense_cells = 4000;
  std::size_t lanczos_pairs = 20;
};

struct SpectralData {
  ChamberGrid grid;
  TiltParams tilt{1.0, 2.0, 1};
  std::size_t m_tau = 0;
  Eigen::MatrixXd step;
  Eigen::MatrixXd K1mat;
  /// Descending eigenvalues of K1mat and matching unit eigenvectors
  /// (Euclidean norm); either all of them or the leading Lanczos pairs.
  Eigen::VectorXd lambdas;
  Eigen::MatrixXd basis;
  /// Ground state, entrywise positive, unit Euclidean norm. As a function
  /// on the chamber it is phi1 / h^{n/2}.
  Eigen::VectorXd phi1;
  double gap = 0.0;
  bool full_basis = true;

  std::size_t cells() const { return grid.size(); }
  double lambda1() const { return lambdas(0); }
  double lambda2() const { return lambdas(1); }
  double tau() const { return 1.0 / static_cast<double>(m_tau); }
};

/// Throws std::runtime_error if lambda_1 is not simple (lambda_2/lambda_1 >=
/// 1 - 1e-6) or if an eigenvalue falls below -1e-12 lambda_1.
SpectralData eigendecompose(ChamberGrid grid, const TiltParams& tilt, TransferMatrices matrices,
                            const EigenOptions& options = {});

struct SpectralOptions {
  std::optional<double> R;
  std::optional<double> h;
  std::optional<std::size_t> m_tau;
  std::size_t threads = 1;
  std::size_t max_matrix_entries = DiscretizeOptions{}.max_matrix_entries;
  EigenOptions eigen{};
};

/// Grid, discretization and eigendecomposition in one call.
SpectralData compute_spectral(const TiltParams& tilt, const SpectralOptions& options = {});

// ---------------------------------------------------------------------------
// Boundary data

struct BoundaryCoefficients {
  /// alpha_i = <psi, phi_i> in L^2 of the chamber.
  Eigen::VectorXd alpha;
  /// ||psi||^2 in L^2 of the chamber.
  double psi_norm_sq = 0.0;
  /// ||psi||^2 / alpha_1^2.
  double kappa = 0.0;
};

BoundaryCoefficients boundary_coefficients(const Eigen::VectorXd& psi, const SpectralData& spec);

struct PsiResult {
  /// psi_s(u) at cell centers.
  Eigen::VectorXd psi;
  BoundaryCoefficients coeffs;
  double s = 0.0;         // realized time (multiple of tau)
  std::size_t steps = 0;  // s / tau
};

/// psi_s(u) = int K_s(u, x) Theta(dx), with s snapped to the nearest
/// multiple of tau. Throws IntegrabilityError unless a s > c_n.
PsiResult psi_s(const ThetaMeasure& theta, double s, const SpectralData& spec);

/// Values of Theta's density at the cell centers.
Eigen::VectorXd theta_on_grid(const ThetaMeasure& theta, const ChamberGrid& grid);

/// u -> K_1(eps nbar, u) at the cell centers. The first tau-step uses the
/// exact corner formula, the remaining m_tau - 1 steps the grid operator.
/// Throws std::domain_error when eps (2n-1) > R.
Eigen::VectorXd corner_row(double eps, const SpectralData& spec);

/// T = s + t with s = l + frac(T) (snapped to tau), l = floor(c_n / a) + 1
/// and t a positive integer.
struct FreeSplit {
  std::size_t ell = 0;
  double s = 0.0;
  std::size_t s_steps = 0;
  std::size_t t = 0;
};
FreeSplit free_split(const ThetaMeasure& theta, double a, double T, std::size_t m_tau);

// ---------------------------------------------------------------------------
// Events on the unit window

/// The operator K_1^Gamma on the grid, stored as K1mat times a mask on the
/// right endpoint, or as a dense matrix for general path events.
class GammaOperator {
 public:
  static GammaOperator masked(const SpectralData& spec, Eigen::VectorXd mask);
  static GammaOperator dense(Eigen::MatrixXd matrix);

  /// u^T K^Gamma w.
  double bilinear(const Eigen::VectorXd& u, const Eigen::VectorXd& w) const;

  bool is_masked() const { return mask_.size() > 0; }
  const Eigen::VectorXd& mask() const { return mask_; }
  /// Dense matrix (built on demand for masked operators).
  Eigen::MatrixXd matrix() const;

 private:
  const Eigen::MatrixXd* K1_ = nullptr;
  Eigen::VectorXd mask_;
  Eigen::MatrixXd dense_;
};

struct PathEventMcOptions {
  std::size_t samples = 256;
  std::size_t steps = 64;
  std::uint64_t seed = 1;
  std::size_t threads = 1;
  /// Guard on cells^2 * samples * steps.
  double max_work = 4e9;
};

/// K_1^Gamma for `event`. Endpoint-evaluable events give an exact mask;
/// other events (n <= 2 only) scale every K1mat entry by a Monte Carlo
/// estimate of the conditional probability of the event under the tilted
/// bridge from u to v, with one set of bridge shapes shared by all pairs.
GammaOperator gamma_operator(const PathEvent& event, const SpectralData& spec,
                             const PathEventMcOptions& mc = {});

/// gamma_11 / lambda_1, the common large-T limit.
double limit_value(const GammaOperator& gamma, const SpectralData& spec);

struct FiniteTValue {
  double value = 0.0;
  double xi1 = 0.0;
  double xi2 = 0.0;
  double limit = 0.0;
  double T = 0.0;
  std::size_t t = 0;
  double s = 0.0;
};

/// Free-boundary probability Xi1 / Xi2 of the event at half-length T.
FiniteTValue mu_free_T(const GammaOperator& gamma, const ThetaMeasure& theta, double T,
                       const SpectralData& spec);

/// Zero-boundary probability with endpoints eps nbar; T must be an integer
/// >= 2.
FiniteTValue mu_zero_T(const GammaOperator& gamma, double T, double eps,
                       const SpectralData& spec);

/// Same quantities computed by applying the step matrix to the boundary
/// vectors directly, without the eigenbasis.
double mu_free_T_direct(const GammaOperator& gamma, const ThetaMeasure& theta, double T,
                        const SpectralData& spec);
double mu_zero_T_direct(const GammaOperator& gamma, double T, double eps,
                        const SpectralData& spec);

struct KappaPoint {
  double eps = 0.0;
  double kappa = 0.0;            // tilted kernel
  double kappa_untilted = 0.0;   // Khat_2(x,x) / (int Khat_1(x,u) phi_1(u) du)^2
};

std::vector<KappaPoint> kappa_eps_curve(std::span<const double> eps, const SpectralData& spec);

struct DecayFit {
  double slope = 0.0;
  double intercept = 0.0;
  double delta = 0.0;
  double log_bound = 0.0;  // log(1 - delta)
  bool saturated = false;
  bool within_bound = false;
  std::vector<double> t;
  std::vector<double> error;
};

/// Least-squares slope of log|mu_T - limit| against t. Errors below 1e-13
/// are treated as saturated and dropped; with fewer than two points left
/// the fit reports saturation. Needs >= 4 values of T.
DecayFit decay_rate_fit(std::span<const double> t, std::span<const double> values, double limit,
                        double delta);

// ---------------------------------------------------------------------------
// n = 1 ground state in closed form

double airy_ai(double x);
/// First zero of Ai by bisection on [-3, -2].
double first_airy_zero(double tol = 1e-12);
/// Independent estimate of the first zero: RK4 integration of Ai'' = x Ai
/// from the values at 0, followed by linear interpolation at the sign change.
double first_airy_zero_ode(double step = 1e-4);

struct AiryOracle {
  double alpha = 0.0;    // (2a)^{1/3}
  double a1 = 0.0;       // first zero of Ai
  double lambda1 = 0.0;  // exp(alpha^2 a1 / 2)
  Eigen::VectorXd phi1;  // Ai(alpha x + a1) at cell centers, unit Euclidean norm
};

/// Throws std::invalid_argument unless the grid and tilt have n = 1.
AiryOracle ferrari_spohn_oracle(const TiltParams& tilt, const ChamberGrid& grid);

// ---------------------------------------------------------------------------
// Serialization

// Binary layout: magic "TLSPEC\0\0", u32 version, u32 flags (bit 0: full
// basis stored), u64 n, f64 R, f64 h, f64 tau, f64 a, f64 b, u64 cells,
// u64 count; then count eigenvalues, cells phi1 entries and, when flagged,
// count * cells basis entries (column-major).
struct SpectralFile {
  std::size_t n = 0;
  double R = 0.0;
  double h = 0.0;
  double tau = 0.0;
  double a = 0.0;
  double b = 0.0;
  std::size_t cells = 0;
  Eigen::VectorXd lambdas;
  Eigen::VectorXd phi1;
  std::optional<Eigen::MatrixXd> basis;
};

void write_spectral_binary(std::ostream& out, const SpectralData& spec, bool with_basis);
SpectralFile read_spectral_binary(std::istream& in);

/// JSON object with the grid parameters, lambda_1, lambda_2 and the gap.
std::string spectral_summary_json(const SpectralData& spec);

}  // namespace tiltlab
