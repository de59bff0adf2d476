#include "kmm/wick.hpp"

#include "kmm/pfaffian.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace kmm {

namespace {

constexpr cplx I{0.0, 1.0};

// Candidate gauges for stripping the unimodular prefactor off K. The first
// one whose residual imaginary part stays below tolerance is used.
std::vector<PhaseConvention> phase_candidates(const ModeSet& alpha, KernelKind kind) {
  const double scale = kind == KernelKind::dipole ? 1.0 : 0.5;
  PhaseConvention with_theta{kind == KernelKind::dipole ? "exp(i(theta - alpha))"
                                                        : "exp(i(theta - alpha/2))",
                             {}};
  PhaseConvention plain{kind == KernelKind::dipole ? "exp(-i alpha)" : "exp(-i alpha/2)", {}};
  for (const Mode& m : alpha) {
    with_theta.u.push_back(std::exp(I * (m.theta - scale * m.k)));
    plain.u.push_back(std::exp(-I * (scale * m.k)));
  }
  return {with_theta, plain};
}

constexpr double kRealnessTolerance = 1e-8;

void check_indices(int M, std::span<const int> indices) {
  for (int i : indices)
    if (i < 0 || i >= M)
      throw DomainError("wavenumber index out of range");
}

bool has_repeat(std::span<const int> indices) {
  for (std::size_t i = 0; i < indices.size(); ++i)
    for (std::size_t j = i + 1; j < indices.size(); ++j)
      if (indices[i] == indices[j]) return true;
  return false;
}

ContractionTable solve_kernel(const ModelParams& p, KernelKind kind) {
  const int M = p.M();
  const ModeSet alpha(p, Sector::periodic);
  const ModeSet beta(p, Sector::antiperiodic);

  // Per-mode phases; the reflected alpha mode has both phases conjugated.
  std::vector<cplx> ta(M), ka(M), tb(M), kb(M);
  for (int m = 0; m < M; ++m) {
    ta[m] = std::polar(1.0, alpha[m].theta);
    ka[m] = std::polar(1.0, alpha[m].k);
    tb[m] = std::polar(1.0, beta[m].theta);
    kb[m] = std::polar(1.0, beta[m].k);
  }
  const bool dipole = kind == KernelKind::dipole;
  auto coeff = [&](cplx t_a, cplx k_a, int r, double sign) {
    const cplx d = tb[r] * std::conj(t_a);
    cplx first = d;
    if (dipole) first *= k_a * std::conj(kb[r]);
    const cplx numer = first - sign * std::conj(d);
    return numer / (static_cast<double>(M) * (kb[r] * std::conj(k_a) - 1.0));
  };
  Eigen::MatrixXcd lhs(M, M), rhs(M, M);
  for (int c = 0; c < M; ++c) {
    for (int r = 0; r < M; ++r) {
      lhs(r, c) = coeff(ta[c], ka[c], r, -1.0);
      rhs(r, c) = -coeff(std::conj(ta[c]), std::conj(ka[c]), r, 1.0);
    }
  }
  // The coefficient matrix does not depend on a2, so one factorization
  // serves all M right-hand sides.
  const Eigen::PartialPivLU<Eigen::MatrixXcd> lu(lhs);
  const double rcond = lu.rcond();
  if (!(rcond > 1e-14)) {
    std::ostringstream os;
    os << "contraction system is singular (condition estimate " << (rcond > 0 ? 1.0 / rcond : INFINITY)
       << ") for epsilon=" << p.epsilon() << " b=" << p.b() << " M=" << M;
    throw std::runtime_error(os.str());
  }
  return reduce_kernel(p, kind, lu.solve(rhs), 1.0 / rcond);
}

} // namespace

cplx contraction_coeff(const Mode& alpha, const Mode& beta, int l, int M, KernelKind kind) {
  if (l != 1 && l != 2)
    throw DomainError("contraction coefficient index l must be 1 or 2");
  const double dtheta = beta.theta - alpha.theta;
  const double sign = l == 1 ? -1.0 : 1.0; // (-1)^l
  cplx first = std::exp(I * dtheta);
  if (kind == KernelKind::dipole) first *= std::exp(I * (alpha.k - beta.k));
  const cplx numer = first - sign * std::exp(-I * dtheta);
  const cplx denom = static_cast<double>(M) * (std::exp(I * (beta.k - alpha.k)) - 1.0);
  return numer / denom;
}

cplx contraction_coeff(const ModelParams& p, double alpha, double beta, int l, KernelKind kind) {
  const ModeSet periodic(p, Sector::periodic);
  const ModeSet antiperiodic(p, Sector::antiperiodic);
  try {
    periodic.index_of(alpha);
  } catch (const DomainError&) {
    throw DomainError("alpha must lie on the periodic grid");
  }
  try {
    antiperiodic.index_of(beta);
  } catch (const DomainError&) {
    throw DomainError("beta must lie on the antiperiodic grid");
  }
  Mode a;
  a.k = alpha;
  a.theta = bogoliubov_angle(p, alpha);
  Mode b;
  b.k = beta;
  b.theta = bogoliubov_angle(p, beta);
  return contraction_coeff(a, b, l, p.M(), kind);
}

ContractionTable reduce_kernel(const ModelParams& p, KernelKind kind, Eigen::MatrixXcd K2,
                               double condition_number) {
  const int M = p.M();
  if (K2.rows() != M || K2.cols() != M)
    throw DomainError("kernel dimension does not match M");

  ContractionTable t;
  t.M = M;
  t.kind = kind;
  t.K2 = std::move(K2);
  t.condition_number = condition_number;

  const ModeSet alpha(p, Sector::periodic);
  double best = INFINITY;
  for (auto& candidate : phase_candidates(alpha, kind)) {
    Eigen::MatrixXcd x(M, M);
    for (int i = 0; i < M; ++i)
      for (int j = 0; j < M; ++j)
        x(i, j) = I * t.K2(i, j) / (candidate.u[i] * candidate.u[j]);
    const double residual = x.imag().cwiseAbs().maxCoeff();
    if (residual < best) {
      best = residual;
      t.X = x.real();
      t.phase = std::move(candidate);
    }
    if (residual < kRealnessTolerance) break;
  }
  t.imag_residual = best;
  if (!(best < kRealnessTolerance)) {
    std::ostringstream os;
    os << "no phase convention yields a real kernel reduction (residual " << best << ")";
    throw std::runtime_error(os.str());
  }
  t.antisymmetry_residual = (t.X + t.X.transpose()).cwiseAbs().maxCoeff();

  // i X is Hermitian with eigenvalues +-lambda_j (and zeros).
  const Eigen::MatrixXcd h = I * t.X.cast<cplx>();
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(h, Eigen::EigenvaluesOnly);
  Eigen::VectorXd mu = eig.eigenvalues();
  const double mu_max = mu.cwiseAbs().maxCoeff();
  std::vector<double> mags(mu.data(), mu.data() + mu.size());
  for (double& m : mags) m = std::abs(m);
  std::sort(mags.begin(), mags.end(), std::greater<>());
  for (double m : mags)
    if (!(m > kZeroEigenvalueThreshold * mu_max)) ++t.zero_count;
  // Each nonzero pair contributes one lambda; take every other magnitude.
  const int pairs = (M - t.zero_count) / 2;
  double log_det = 0.0;
  for (int j = 0; j < pairs; ++j) {
    const double lam = 0.5 * (mags[2 * j] + mags[2 * j + 1]);
    t.lambda.push_back(lam);
    log_det += std::log1p(lam * lam);
  }
  t.sigma_norm = std::exp(-log_det);
  return t;
}

ContractionTable solve_k2(const ModelParams& p) {
  if (p.regime() != Regime::strong)
    throw DomainError("the dipole contraction kernel requires strong coupling (B > 1)");
  return solve_kernel(p, KernelKind::dipole);
}

ContractionTable solve_vacuum_kernel(const ModelParams& p) {
  if (p.regime() != Regime::weak)
    throw DomainError("the vacuum contraction kernel requires weak coupling (B < 1)");
  return solve_kernel(p, KernelKind::vacuum);
}

GroundOverlap ground_overlap(const ModelParams& p) {
  if (p.regime() != Regime::weak)
    throw DomainError("the vacuum overlap is computed for weak coupling (B < 1) only");
  if (p.b() == 0.0) return GroundOverlap{1.0};
  return GroundOverlap{solve_k2(p.dual()).sigma_norm};
}

std::vector<cplx> weak_one_particle(const ModelParams& p, const ContractionTable& vacuum) {
  if (p.regime() != Regime::weak)
    throw DomainError("the one-particle function is defined for weak coupling (B < 1)");
  if (vacuum.kind != KernelKind::vacuum || vacuum.M != p.M())
    throw DomainError("weak_one_particle needs the vacuum kernel of the same chain");
  const int M = p.M();
  const ModeSet alpha(p, Sector::periodic);
  std::vector<cplx> out(static_cast<std::size_t>(M));
  const double norm = 1.0 / std::sqrt(static_cast<double>(M));
  for (int j = 0; j < M; ++j) {
    const int minus_j = (M - j) % M;
    cplx s = 0.0;
    for (int a0 = 0; a0 < M; ++a0) {
      cplx term = vacuum.K2(a0, j);
      if (a0 == minus_j) term += 1.0;
      s += std::exp(I * (alpha[a0].k - alpha[a0].theta)) * term;
    }
    out[static_cast<std::size_t>(j)] = norm * s;
  }
  return out;
}

std::vector<cplx> weak_one_particle(const ModelParams& p) {
  return weak_one_particle(p, solve_vacuum_kernel(p));
}

WeakTables WeakTables::build(const ModelParams& p) {
  WeakTables w;
  w.vacuum = solve_vacuum_kernel(p);
  w.one_particle = weak_one_particle(p, w.vacuum);
  w.overlap_sq = ground_overlap(p).value_sq;
  return w;
}

MatrixElement higher_elements_strong(const ContractionTable& table, std::span<const int> indices) {
  if (table.kind != KernelKind::dipole)
    throw DomainError("strong-coupling elements need the dipole kernel");
  if (indices.size() % 2 != 0)
    throw DomainError("strong-coupling elements need an even number of excitations");
  check_indices(table.M, indices);

  MatrixElement e;
  e.indices.assign(indices.begin(), indices.end());
  e.excitation_count = static_cast<int>(indices.size());
  for (int i : indices) e.wavenumbers.push_back(grid_wavenumber(Sector::periodic, i, table.M));
  if (has_repeat(indices)) {
    e.amplitude = 0.0;
    return e;
  }
  e.amplitude = std::sqrt(table.sigma_norm) *
                restricted_pfaffian(table.K2, indices.data(), static_cast<int>(indices.size()));
  return e;
}

MatrixElement higher_elements_weak(const WeakTables& tables, std::span<const int> indices) {
  if (indices.size() % 2 != 1)
    throw DomainError("weak-coupling elements need an odd number of excitations");
  const int M = tables.vacuum.M;
  check_indices(M, indices);

  MatrixElement e;
  e.indices.assign(indices.begin(), indices.end());
  e.excitation_count = static_cast<int>(indices.size());
  for (int i : indices) e.wavenumbers.push_back(grid_wavenumber(Sector::periodic, i, M));
  if (has_repeat(indices)) {
    e.amplitude = 0.0;
    return e;
  }
  const int n = static_cast<int>(indices.size());
  std::vector<int> rest(static_cast<std::size_t>(n - 1));
  cplx sum = 0.0;
  for (int j = 0; j < n; ++j) {
    int w = 0;
    for (int i = 0; i < n; ++i)
      if (i != j) rest[static_cast<std::size_t>(w++)] = indices[static_cast<std::size_t>(i)];
    const cplx pf = restricted_pfaffian(tables.vacuum.K2, rest.data(), n - 1);
    const double sign = (j % 2 == 0) ? 1.0 : -1.0;
    sum += sign * tables.one_particle[static_cast<std::size_t>(indices[static_cast<std::size_t>(j)])] * pf;
  }
  e.amplitude = std::sqrt(tables.overlap_sq) * sum;
  return e;
}

} // namespace kmm
