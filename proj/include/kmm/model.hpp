#pragma once

// Lattice model of a periodic chain of dipole-coupled two-level sites:
// parameters, wavenumber grids, quasiparticle dispersion and the energies
// of the two fermion-parity vacua.

#include <cstddef>
#include <stdexcept>
#include <vector>

namespace kmm {

/// Raised for physically invalid or unsupported inputs.
class DomainError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

/// Wavenumber grid of a fermion-parity sector. The periodic grid (alpha)
/// belongs to the odd sector, the antiperiodic grid (beta) to the even one.
enum class Sector { periodic, antiperiodic };

enum class Regime { weak, critical, strong };

const char* to_string(Sector s);
const char* to_string(Regime r);

/// Hamiltonian parameters. Immutable; B = 2|b|/epsilon is derived on
/// construction. Only b <= 0 is accepted (b == 0 is the uncoupled limit).
class ModelParams {
public:
  static ModelParams make(double epsilon, double b, int M);
  /// b = -B epsilon / 2.
  static ModelParams from_coupling(double B, int M, double epsilon = 1.0);

  double epsilon() const noexcept { return epsilon_; }
  double b() const noexcept { return b_; }
  int M() const noexcept { return M_; }
  double B() const noexcept { return B_; }
  Regime regime() const noexcept;

  /// Parameters with the roles of site energy and coupling exchanged:
  /// epsilon' = 2|b|, b' = -epsilon/2, so B' = 1/B.
  ModelParams dual() const;

  ModelParams with_size(int M) const { return make(epsilon_, b_, M); }

private:
  ModelParams(double epsilon, double b, int M);

  double epsilon_;
  double b_;
  int M_;
  double B_;
};

/// One quasiparticle mode of a sector grid.
struct Mode {
  int index = 0;      ///< grid position, 0..M-1
  double k = 0.0;     ///< wavenumber in [0, 2pi)
  double e0 = 0.0;    ///< bare (hopping-only) dispersion, may be negative
  double e = 0.0;     ///< quasiparticle energy, always >= 0
  double theta = 0.0; ///< Bogoliubov angle
  /// True for the alpha = 0 mode in strong coupling: the odd-sector vacuum
  /// carries this bare excitation, so its quasiparticle creator removes it.
  bool occupied = false;
};

/// Mode with the wavenumber and angle of -k. The angle is odd in k, which
/// also fixes the k = 0 and k = pi modes where the wrapped grid is ambiguous.
Mode reflect(const Mode& m);

class ModeSet {
public:
  ModeSet(const ModelParams& params, Sector sector);

  Sector sector() const noexcept { return sector_; }
  int size() const noexcept { return static_cast<int>(modes_.size()); }
  const Mode& operator[](int i) const { return modes_[static_cast<std::size_t>(i)]; }
  const std::vector<Mode>& modes() const noexcept { return modes_; }
  auto begin() const { return modes_.begin(); }
  auto end() const { return modes_.end(); }

  /// Grid index of wavenumber k (mod 2pi), or throws DomainError if k is
  /// not on this grid.
  int index_of(double k) const;

private:
  Sector sector_;
  std::vector<Mode> modes_;
};

/// k_m = 2 pi m / M (periodic) or pi (2m + 1) / M (antiperiodic), m = 0..M-1.
double grid_wavenumber(Sector sector, int m, int M);

/// Maps k in [0, 2pi) to (-pi, pi].
double centered_wavenumber(double k);

double hl_dispersion(const ModelParams& p, double k);
double excitation_energy(const ModelParams& p, double k);
/// theta(k) = atan2(2 b sin k, E0(k)) / 2.
double bogoliubov_angle(const ModelParams& p, double k);

struct GroundStateEnergies {
  double E_plus = 0.0;  ///< even-sector vacuum, the true ground state
  double E_minus = 0.0; ///< odd-sector vacuum
  double gap = 0.0;     ///< E_minus - E_plus
  /// sum_alpha E0 - sum_beta E0; vanishes because E0 is even.
  double evenness_residual = 0.0;
};

GroundStateEnergies ground_energies(const ModelParams& p);

/// E_minus - E_plus from the two mode sums evaluated in extended precision.
/// The working precision grows with M so that exponentially small strong
/// coupling gaps survive the cancellation between the sums.
double gap_mode_sum_extended(const ModelParams& p);

/// E_minus - E_plus from the branch-cut integral representation. Strong
/// coupling only (B > 1).
double gap_integral(const ModelParams& p);

} // namespace kmm
