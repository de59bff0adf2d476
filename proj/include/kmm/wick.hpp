#pragma once

// Transition dipole matrix elements between the two fermion-parity vacua
// and their quasiparticle excitations, from the generalized Wick contraction
// kernels.
//
// Strong coupling (B > 1):  <Phi-| G(a_2n) ... G(a_1) sigma_1^x |Phi+>
// Weak coupling   (B < 1):  <Phi-| G(a_2n+1) ... G(a_1) sigma_1^x |Phi+>
//
// Both kernels are obtained from one M x M complex linear system whose rows
// are indexed by the antiperiodic grid and whose columns are indexed by the
// periodic grid. Higher elements are Pfaffians of the kernel.

#include "kmm/model.hpp"

#include <Eigen/Dense>

#include <complex>
#include <span>
#include <string>
#include <vector>

namespace kmm {

using cplx = std::complex<double>;

/// Coefficient family of the contraction equations.
///  - dipole: includes the rank-one term contributed by sigma_1^x
///  - vacuum: the plain Bogoliubov anticommutator between the two grids
enum class KernelKind { dipole, vacuum };

/// (alpha, beta)_l for grid wavenumbers alpha (periodic) and beta
/// (antiperiodic), l in {1, 2}. Angles come from bogoliubov_angle.
cplx contraction_coeff(const ModelParams& p, double alpha, double beta, int l,
                       KernelKind kind = KernelKind::dipole);

/// Same coefficient with explicit modes; pass reflect(alpha) for the -alpha
/// arguments of the right-hand side.
cplx contraction_coeff(const Mode& alpha, const Mode& beta, int l, int M, KernelKind kind);

/// Diagonal gauge u_j with K(a_i, a_j) = -i u_i u_j X(a_i, a_j) and X real.
struct PhaseConvention {
  std::string name;
  std::vector<cplx> u;
};

/// Solved contraction kernel with its real antisymmetric reduction.
struct ContractionTable {
  int M = 0;
  KernelKind kind = KernelKind::dipole;
  Eigen::MatrixXcd K2;        ///< K(a1, a2), column a2 solved per right-hand side
  Eigen::MatrixXd X;          ///< real antisymmetric reduction
  PhaseConvention phase;
  std::vector<double> lambda; ///< non-negative magnitudes, one per +-i lambda pair
  int zero_count = 0;         ///< eigenvalues of X counted as zero
  /// |<Phi-|sigma_1^x|Phi+>|^2 for the dipole kernel,
  /// |<Phi-|Phi+>|^2 for the vacuum kernel; equals 1 / det(I + X).
  double sigma_norm = 0.0;
  double condition_number = 0.0; ///< 1-norm estimate for the shared LU factor
  double imag_residual = 0.0;    ///< max |Im X| before truncation to real
  double antisymmetry_residual = 0.0;
};

/// Relative threshold below which an eigenvalue of X counts as zero.
inline constexpr double kZeroEigenvalueThreshold = 1e-10;

/// Dipole kernel, B > 1.
ContractionTable solve_k2(const ModelParams& p);

/// Vacuum kernel <Phi-|G(a2) G(a1)|Phi+> / <Phi-|Phi+>, B < 1.
ContractionTable solve_vacuum_kernel(const ModelParams& p);

/// Rebuilds X, lambda and the norm from a stored K2 (cache reload).
ContractionTable reduce_kernel(const ModelParams& p, KernelKind kind, Eigen::MatrixXcd K2,
                               double condition_number = 0.0);

struct GroundOverlap {
  double value_sq = 1.0; ///< |<Phi-|Phi+>|^2
};

/// |<Phi-|Phi+>|^2 for B < 1 from the dipole normalization of the dual chain.
GroundOverlap ground_overlap(const ModelParams& p);

/// K(a_j) = <Phi-|G(a_j) sigma_1^x|Phi+> / <Phi-|Phi+>, B < 1.
std::vector<cplx> weak_one_particle(const ModelParams& p, const ContractionTable& vacuum);
std::vector<cplx> weak_one_particle(const ModelParams& p);

struct MatrixElement {
  std::vector<int> indices;       ///< periodic-grid positions, application order
  std::vector<double> wavenumbers;
  cplx amplitude;
  int excitation_count = 0;
};

/// <Phi-|G(a_2n)...G(a_1) sigma_1^x|Phi+>, with indices[0] applied first.
/// The phase of <Phi-|sigma_1^x|Phi+> is fixed real positive.
MatrixElement higher_elements_strong(const ContractionTable& table, std::span<const int> indices);

/// Everything needed for weak-coupling elements.
struct WeakTables {
  ContractionTable vacuum;
  std::vector<cplx> one_particle;
  double overlap_sq = 1.0;

  static WeakTables build(const ModelParams& p);
};

/// <Phi-|G(a_2n+1)...G(a_1) sigma_1^x|Phi+>, with indices[0] applied first.
/// The phase of <Phi-|Phi+> is fixed real positive.
MatrixElement higher_elements_weak(const WeakTables& tables, std::span<const int> indices);

} // namespace kmm
