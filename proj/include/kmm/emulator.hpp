#pragma once

// Maps a chain of dressed polar molecules in an optical lattice onto the
// chain parameters and predicts collective one-excitation decay rates.

#include "kmm/model.hpp"

#include <optional>
#include <string>
#include <vector>

namespace kmm {

/// Units of a molecule record. Energies (epsilon_e and the returned b)
/// are joules for si and kHz (frequency units, E/h) for debye_nm_khz.
enum class UnitSystem { si, debye_nm_khz };

const char* to_string(UnitSystem u);
UnitSystem unit_system_from_string(const std::string& s);

struct MoleculeParams {
  UnitSystem units = UnitSystem::debye_nm_khz;
  double d = 0.0;         ///< dipole moment, C m or Debye
  double r = 0.0;         ///< separation, m or nm
  double Theta = 0.0;     ///< angle between quantization axis and separation, rad
  double eta = 0.0;       ///< gamma_sr / (g_S mu_B B0)
  double delta = 0.0;     ///< |pi/2 - phi|
  double epsilon_e = 0.0; ///< |D> -> |e> splitting, energy units of the record
  double gamma_f = 0.0;   ///< electronic decay rate, 1/s
  double x = 0.0;         ///< mixing fraction in (0, 1)
};

/// Validates a record; returns warnings (eta or delta above 0.1).
std::vector<std::string> validate(const MoleculeParams& mol);

/// d^2 / (4 pi eps0 r^3) in the record's energy unit.
double dipole_energy(const MoleculeParams& mol);

/// b = (1/3)(d^2/r^3)(1 - 3 cos^2 Theta)(1 - eta^2)(1 - delta^2).
double coupling(const MoleculeParams& mol);

/// Chain parameters (epsilon_e, b, M). Rejects b >= 0, including the magic
/// angle where the coupling vanishes.
ModelParams model_from_molecule(const MoleculeParams& mol, int M);

struct DecayPrediction {
  double rate = 0.0;        ///< gamma_M from the infinite-chain prefactor, 1/s
  double enhancement = 0.0; ///< gamma_M / (M x gamma_f), relative to the hopping-only rate
  double lifetime = 0.0;    ///< 1 / gamma_M, s
  std::optional<double> finite_size_rate; ///< from chi_1 or chi_0 of the finite chain
};

/// gamma_M = A[B] M x gamma_f (B < 1) or Atilde[B] M^2 x gamma_f (B > 1).
DecayPrediction decay_rate(const ModelParams& p, const MoleculeParams& mol,
                           bool finite_size = false);

/// Editable CaF-like record on a 300 nm lattice; illustrative values only.
MoleculeParams caf_like_preset();

} // namespace kmm
