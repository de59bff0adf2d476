#include "kmm/emulator.hpp"

#include "kmm/spectra.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

namespace kmm {

namespace {

// Conversion table.
constexpr double kDebye = 3.33564095e-30;          // C m
constexpr double kNanometre = 1e-9;                // m
constexpr double kVacuumPermittivity = 8.8541878128e-12; // F / m
constexpr double kPlanck = 6.62607015e-34;         // J s
constexpr double kKilohertz = 1e3;

void require(bool ok, const char* what) {
  if (!ok) throw DomainError(what);
}

} // namespace

const char* to_string(UnitSystem u) {
  return u == UnitSystem::si ? "si" : "debye_nm_khz";
}

UnitSystem unit_system_from_string(const std::string& s) {
  if (s == "si") return UnitSystem::si;
  if (s == "debye_nm_khz") return UnitSystem::debye_nm_khz;
  throw DomainError("unknown unit system '" + s + "' (expected si or debye_nm_khz)");
}

std::vector<std::string> validate(const MoleculeParams& mol) {
  require(std::isfinite(mol.d) && mol.d > 0.0, "dipole moment d must be positive");
  require(std::isfinite(mol.r) && mol.r > 0.0, "separation r must be positive");
  require(std::isfinite(mol.Theta), "Theta must be finite");
  require(mol.eta >= 0.0 && mol.eta < 0.3, "eta must lie in [0, 0.3)");
  require(mol.delta >= 0.0 && mol.delta < 0.3, "delta must lie in [0, 0.3)");
  require(std::isfinite(mol.epsilon_e) && mol.epsilon_e > 0.0, "epsilon_e must be positive");
  require(std::isfinite(mol.gamma_f) && mol.gamma_f >= 0.0, "gamma_f must be non-negative");
  require(mol.x > 0.0 && mol.x < 1.0, "mixing fraction x must lie in (0, 1)");
  std::vector<std::string> warnings;
  if (mol.eta > 0.1) warnings.push_back("eta above 0.1; the small-eta coupling form is approximate");
  if (mol.delta > 0.1) warnings.push_back("delta above 0.1; the small-delta coupling form is approximate");
  return warnings;
}

double dipole_energy(const MoleculeParams& mol) {
  if (mol.units == UnitSystem::si)
    return mol.d * mol.d / (4.0 * std::numbers::pi * kVacuumPermittivity * mol.r * mol.r * mol.r);
  const double d = mol.d * kDebye;
  const double r = mol.r * kNanometre;
  const double joules = d * d / (4.0 * std::numbers::pi * kVacuumPermittivity * r * r * r);
  return joules / kPlanck / kKilohertz;
}

double coupling(const MoleculeParams& mol) {
  const double c = std::cos(mol.Theta);
  const double angular = 1.0 - 3.0 * c * c;
  return dipole_energy(mol) * angular * (1.0 - mol.eta * mol.eta) * (1.0 - mol.delta * mol.delta) / 3.0;
}

ModelParams model_from_molecule(const MoleculeParams& mol, int M) {
  validate(mol);
  const double b = coupling(mol);
  const double scale = dipole_energy(mol);
  if (std::abs(b) <= 1e-12 * scale)
    throw DomainError("coupling vanishes at the magic angle (cos^2 Theta = 1/3); no chain to build");
  if (b > 0.0) {
    std::ostringstream os;
    os << "coupling b = " << b << " is positive for Theta = " << mol.Theta
       << "; only b < 0 (head-to-tail side of the magic angle) is supported";
    throw DomainError(os.str());
  }
  return ModelParams::make(mol.epsilon_e, b, M);
}

DecayPrediction decay_rate(const ModelParams& p, const MoleculeParams& mol, bool finite_size) {
  validate(mol);
  const double M = p.M();
  const double base = M * mol.x * mol.gamma_f;
  DecayPrediction out;
  switch (p.regime()) {
  case Regime::critical:
    throw DomainError("decay rate is singular at B = 1");
  case Regime::weak:
    out.rate = infinite_A(p.B()) * base;
    if (finite_size) out.finite_size_rate = chi1(p) / M * base;
    break;
  case Regime::strong:
    out.rate = infinite_Atilde(p.B()) * M * base;
    if (finite_size) out.finite_size_rate = chi0(p) / M * base;
    break;
  }
  out.enhancement = base > 0.0 ? out.rate / base : NAN;
  out.lifetime = out.rate > 0.0 ? 1.0 / out.rate : INFINITY;
  return out;
}

MoleculeParams caf_like_preset() {
  MoleculeParams m;
  m.units = UnitSystem::debye_nm_khz;
  m.d = 3.07;
  m.r = 300.0;
  m.Theta = 0.0;
  m.eta = 0.05;
  m.delta = 0.05;
  m.epsilon_e = 60.0;
  m.gamma_f = 2.0e7;
  m.x = 0.1;
  return m;
}

} // namespace kmm
