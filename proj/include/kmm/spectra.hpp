#pragma once

// Oscillator strengths, manifold sums, absorption densities and transition
// dipole correlations assembled from the contraction kernels.
//
// Weights are w_n = |<n|sigma_1^x|Phi+>|^2 with the single-molecule dipole
// set to 1. A state of total momentum k couples to sum_m exp(ikm) sigma_m^x
// with squared element M^2 w_n, and only k = 0 states couple to the uniform
// field sum_m sigma_m^x.

#include "kmm/model.hpp"
#include "kmm/wick.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <vector>

namespace kmm {

/// Enumeration refused because the manifold is too large.
class BudgetExceeded : public std::runtime_error {
public:
  BudgetExceeded(const std::string& what, double count)
      : std::runtime_error(what), count_(count) {}
  double count() const noexcept { return count_; }

private:
  double count_;
};

/// Number of states in a manifold, C(M, n), as a double (exact below 2^53).
double manifold_state_count(int M, int n);

/// Throws BudgetExceeded if the manifold may not be enumerated: n > 4 for
/// M > 20, or more than kMaxEnumeratedStates states.
void check_enumeration_budget(int M, int n);
inline constexpr double kMaxEnumeratedStates = 2e8;

/// chi_1 = M^2 |<Phi-|G(0) sigma_1^x|Phi+>|^2, B < 1.
double chi1(const ModelParams& p);
/// chi_0 = M^2 |<Phi-|sigma_1^x|Phi+>|^2, B > 1.
double chi0(const ModelParams& p);

/// A[B] = (1 - B)^(-3/4) (1 + B)^(1/4) on [0, 1]; +inf at B = 1.
double infinite_A(double B);
/// Atilde[B] = (1 - 1/B^2)^(1/4) on [1, inf); 0 at B = 1.
double infinite_Atilde(double B);

/// Weights, energies and momenta of the states reachable from |Phi+>.
/// Strong coupling: G+(a_1)...G+(a_n)|Phi-> with n even (n = 0 is |Phi->).
/// Weak coupling: the same with n odd.
class TransitionEngine {
public:
  explicit TransitionEngine(const ModelParams& p);
  /// Reuses an already solved dipole kernel (B > 1).
  TransitionEngine(const ModelParams& p, ContractionTable table);

  const ModelParams& params() const noexcept { return params_; }
  bool strong() const noexcept { return strong_; }
  /// Whether manifold n carries any sigma_1^x weight.
  bool allowed(int n) const noexcept { return n >= 0 && (n % 2 == 0) == strong_; }

  /// |<n|sigma_1^x|Phi+>|^2 for strictly increasing grid indices.
  double weight(const int* idx, int n) const;
  /// E_n - E_+ = gap + sum E(a_j).
  double energy(const int* idx, int n) const;
  /// Sum of wavenumbers each mapped to (-pi, pi], not reduced mod 2pi.
  double unwrapped_momentum(const int* idx, int n) const;
  /// Total momentum index, sum of grid indices mod M.
  int momentum_index(const int* idx, int n) const;

  double gap() const noexcept { return gap_; }
  /// sigma norm (strong) or vacuum overlap squared (weak).
  double normalization() const noexcept { return norm_; }
  const std::optional<ContractionTable>& dipole_table() const noexcept { return dipole_; }
  const std::optional<WeakTables>& weak_tables() const noexcept { return weak_; }

private:
  void init_modes();

  ModelParams params_;
  bool strong_ = false;
  double norm_ = 0.0;
  double gap_ = 0.0;
  std::vector<double> energy_;
  std::vector<double> centered_k_;
  std::optional<ContractionTable> dipole_;
  std::optional<WeakTables> weak_;
};

struct ManifoldContribution {
  int excitations = 0;
  double state_count = 0.0;
  /// sum_n |<n|sigma_1^x|Phi+>|^2 over the manifold; all manifolds add to 1.
  double sigma1_weight = 0.0;
  /// Uniform-field strength per molecule, M sum_{k=0} w_n.
  double chi_per_molecule = 0.0;
  /// Momentum-resolved strength per molecule, M sum_n w_n.
  double resolved_per_molecule = 0.0;
};

/// Contributions of manifolds 0..max_manifold (forbidden ones are zero).
/// threads <= 0 uses the hardware concurrency.
std::vector<ManifoldContribution> manifold_contributions(const ModelParams& p, int max_manifold,
                                                         int threads = 0);
std::vector<ManifoldContribution> manifold_contributions(const TransitionEngine& engine,
                                                         int max_manifold, int threads = 0);

struct GridSpec {
  double k_min = -10.0, k_max = 10.0;
  int n_k = 639;
  double E_min = 0.0, E_max = 6.0;
  int n_E = 480;

  double dk() const { return (k_max - k_min) / n_k; }
  double dE() const { return (E_max - E_min) / n_E; }
  void validate() const;
};

/// Binned density rho(k, E) = sum_n s_n / (dk dE) with per-state strength
/// s_n = M w_n (momentum-resolved, per molecule).
struct DensityGrid {
  GridSpec spec;
  int manifold = 0;
  std::vector<double> bins; ///< n_k * n_E, index ik * n_E + iE
  double strength_in_window = 0.0;
  double strength_total = 0.0; ///< including states outside the window
  double state_count = 0.0;

  double at(int ik, int iE) const { return bins[static_cast<std::size_t>(ik) * spec.n_E + iE]; }
  double k_center(int ik) const { return spec.k_min + (ik + 0.5) * spec.dk(); }
  double E_center(int iE) const { return spec.E_min + (iE + 0.5) * spec.dE(); }
  /// sum bins * dk * dE.
  double integrated() const;
};

DensityGrid absorption_density(const ModelParams& p, int manifold, const GridSpec& spec,
                               int threads = 0);
DensityGrid absorption_density(const TransitionEngine& engine, int manifold, const GridSpec& spec,
                               int threads = 0);

struct CorrelationFunction {
  std::vector<double> values; ///< C(m), m = 0..m_max
  double correlation_length = 0.0;
  int fit_first = 0, fit_last = 0;
  double fluctuation_sum = 0.0; ///< C(0) + 2 sum_{m>=1} C(m)
  bool heitler_london = false;
};

/// C(m) of the infinite chain at coupling p.B() (< 1).
CorrelationFunction correlations(const ModelParams& p, int m_max);
/// Hopping-only reference, C(m) = delta_{m0}.
CorrelationFunction hl_correlations(int m_max);

} // namespace kmm
