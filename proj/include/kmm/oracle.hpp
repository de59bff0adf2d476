#pragma once

// Brute-force reference: the full 2^M Hamiltonian in the site product basis,
// diagonalized densely, with parity, momentum and dipole elements. Used to
// validate the analytic path for short chains.

#include "kmm/model.hpp"

#include <Eigen/Dense>

#include <string>
#include <vector>

namespace kmm {

inline constexpr int kOracleMaxSites = 12;

/// Dense H in the basis where bit m-1 of the state label marks an excited
/// site m; periodic boundary.
Eigen::MatrixXd build_hamiltonian(const ModelParams& p);

/// State label after one lattice translation (site m+1 -> m).
unsigned translate_state(unsigned s, int M);

struct DenseSpectrum {
  int M = 0;
  Eigen::VectorXd eigenvalues;  ///< ascending
  Eigen::MatrixXd eigenvectors; ///< columns
  std::vector<int> parity;      ///< +1 even, -1 odd excitation number
  std::vector<int> group;       ///< degenerate group id per state
  std::vector<int> momentum;    ///< momentum index 0..M-1 (multiset per group)
  int group_count = 0;
  double orthonormality_residual = 0.0;
  double parity_commutator = 0.0;
  double translation_commutator = 0.0;
};

inline constexpr double kDegeneracyTolerance = 1e-9;

DenseSpectrum diagonalize(const ModelParams& p);

struct DipoleElement {
  int state = 0;
  double sigma1_sq = 0.0; ///< |<n|sigma_1^x|0>|^2
  double total_sq = 0.0;  ///< |<n|sum_m sigma_m^x|0>|^2
};

std::vector<DipoleElement> dipole_elements(const DenseSpectrum& s, int ground_index = 0);

/// Hopping-only one-excitation block.
struct HLReference {
  Eigen::VectorXd energies;
  std::vector<double> strengths; ///< |<k|sum_m sigma_m^x|vac>|^2
  double chi1 = 0.0;
};

HLReference hl_reference(const ModelParams& p);

struct ValidationCheck {
  std::string name;
  double epsilon = 0.0, b = 0.0;
  int M = 0;
  double max_deviation = 0.0;
  double tolerance = 0.0;
  bool pass = false;
};

/// Compares every analytic quantity with the oracle at one parameter point.
std::vector<ValidationCheck> verify_against_oracle(const ModelParams& p);

} // namespace kmm
