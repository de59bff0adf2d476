#include "kmm/oracle.hpp"

#include "kmm/spectra.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <complex>
#include <map>
#include <numbers>
#include <numeric>
#include <utility>

namespace kmm {

namespace {

using Column = std::vector<std::pair<unsigned, double>>;

void require_oracle_size(const ModelParams& p) {
  if (p.M() > kOracleMaxSites)
    throw DomainError("dense oracle limited to M <= " + std::to_string(kOracleMaxSites));
}

// Nonzero entries of each column of H.
std::vector<Column> sparse_hamiltonian(const ModelParams& p) {
  const int M = p.M();
  const unsigned dim = 1u << M;
  std::vector<Column> cols(dim);
  for (unsigned s = 0; s < dim; ++s) {
    std::map<unsigned, double> entries;
    entries[s] = p.epsilon() * std::popcount(s);
    if (p.b() != 0.0) {
      for (int m = 0; m < M; ++m) {
        const unsigned mask = (1u << m) | (1u << ((m + 1) % M));
        entries[s ^ mask] += p.b();
      }
    }
    for (const auto& [row, v] : entries)
      if (v != 0.0 || row == s) cols[s].emplace_back(row, v);
  }
  return cols;
}

double lookup(const Column& c, unsigned row) {
  for (const auto& [r, v] : c)
    if (r == row) return v;
  return 0.0;
}

int parity_of(unsigned s) { return std::popcount(s) % 2 == 0 ? 1 : -1; }

Eigen::VectorXd translate(const Eigen::VectorXd& v, int M) {
  Eigen::VectorXd out(v.size());
  for (unsigned s = 0; s < static_cast<unsigned>(v.size()); ++s) out(translate_state(s, M)) = v(s);
  return out;
}

Eigen::MatrixXd group_columns(const DenseSpectrum& sp, int first, int count) {
  return sp.eigenvectors.middleCols(first, count);
}

// Translation operator restricted to a degenerate subspace.
Eigen::MatrixXd translation_in_group(const DenseSpectrum& sp, const Eigen::MatrixXd& V) {
  Eigen::MatrixXd TV(V.rows(), V.cols());
  for (int c = 0; c < V.cols(); ++c) TV.col(c) = translate(V.col(c), sp.M);
  return V.transpose() * TV;
}

// ||Pi_j c||^2 for each momentum index j, with U the translation in the
// group basis.
std::vector<double> momentum_resolved(const Eigen::MatrixXd& U, const Eigen::VectorXd& c, int M) {
  std::vector<Eigen::VectorXd> powers;
  Eigen::VectorXd cur = c;
  for (int t = 0; t < M; ++t) {
    powers.push_back(cur);
    cur = U * cur;
  }
  std::vector<double> out(static_cast<std::size_t>(M));
  for (int j = 0; j < M; ++j) {
    Eigen::VectorXcd acc = Eigen::VectorXcd::Zero(c.size());
    for (int t = 0; t < M; ++t)
      acc += std::polar(1.0 / M, -2.0 * std::numbers::pi * j * t / M) * powers[static_cast<std::size_t>(t)].cast<std::complex<double>>();
    out[static_cast<std::size_t>(j)] = acc.squaredNorm();
  }
  return out;
}

struct GroupRange {
  int first = 0, count = 0;
};

std::vector<GroupRange> group_ranges(const DenseSpectrum& sp) {
  std::vector<GroupRange> g(static_cast<std::size_t>(sp.group_count));
  for (int n = 0; n < static_cast<int>(sp.group.size()); ++n) {
    auto& r = g[static_cast<std::size_t>(sp.group[static_cast<std::size_t>(n)])];
    if (r.count == 0) r.first = n;
    ++r.count;
  }
  return g;
}

} // namespace

unsigned translate_state(unsigned s, int M) {
  return (s >> 1) | ((s & 1u) << (M - 1));
}

Eigen::MatrixXd build_hamiltonian(const ModelParams& p) {
  require_oracle_size(p);
  const auto cols = sparse_hamiltonian(p);
  const auto dim = static_cast<Eigen::Index>(cols.size());
  Eigen::MatrixXd H = Eigen::MatrixXd::Zero(dim, dim);
  for (Eigen::Index s = 0; s < dim; ++s)
    for (const auto& [row, v] : cols[static_cast<std::size_t>(s)]) H(row, s) = v;
  return H;
}

DenseSpectrum diagonalize(const ModelParams& p) {
  require_oracle_size(p);
  const int M = p.M();
  const unsigned dim = 1u << M;
  const auto cols = sparse_hamiltonian(p);

  DenseSpectrum sp;
  sp.M = M;
  for (unsigned s = 0; s < dim; ++s) {
    for (const auto& [row, v] : cols[s]) {
      if (parity_of(row) != parity_of(s)) sp.parity_commutator = std::max(sp.parity_commutator, std::abs(v));
      const double moved = lookup(cols[translate_state(s, M)], translate_state(row, M));
      sp.translation_commutator = std::max(sp.translation_commutator, std::abs(moved - v));
    }
  }

  struct Entry {
    double e;
    int parity;
    Eigen::VectorXd v;
  };
  std::vector<Entry> entries;
  entries.reserve(dim);
  for (int par : {1, -1}) {
    std::vector<unsigned> states;
    std::vector<int> local(dim, -1);
    for (unsigned s = 0; s < dim; ++s)
      if (parity_of(s) == par) {
        local[s] = static_cast<int>(states.size());
        states.push_back(s);
      }
    const auto n = static_cast<Eigen::Index>(states.size());
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(n, n);
    for (Eigen::Index c = 0; c < n; ++c)
      for (const auto& [row, v] : cols[states[static_cast<std::size_t>(c)]])
        if (local[row] >= 0) h(local[row], c) = v;
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(h);
    const Eigen::MatrixXd& V = eig.eigenvectors();
    const double ortho = (V.transpose() * V - Eigen::MatrixXd::Identity(n, n)).cwiseAbs().maxCoeff();
    sp.orthonormality_residual = std::max(sp.orthonormality_residual, ortho);
    for (Eigen::Index c = 0; c < n; ++c) {
      Eigen::VectorXd full = Eigen::VectorXd::Zero(dim);
      for (Eigen::Index r = 0; r < n; ++r) full(states[static_cast<std::size_t>(r)]) = V(r, c);
      entries.push_back({eig.eigenvalues()(c), par, std::move(full)});
    }
  }
  std::stable_sort(entries.begin(), entries.end(),
                   [](const Entry& a, const Entry& b) { return a.e < b.e; });

  sp.eigenvalues.resize(dim);
  sp.eigenvectors.resize(dim, dim);
  sp.parity.resize(dim);
  sp.group.resize(dim);
  sp.momentum.assign(dim, 0);
  for (unsigned n = 0; n < dim; ++n) {
    sp.eigenvalues(n) = entries[n].e;
    sp.eigenvectors.col(n) = entries[n].v;
    sp.parity[n] = entries[n].parity;
    if (n > 0 && entries[n].e - entries[n - 1].e <= kDegeneracyTolerance * std::max(1.0, std::abs(entries[n].e)))
      sp.group[n] = sp.group[n - 1];
    else
      sp.group[n] = n == 0 ? 0 : sp.group[n - 1] + 1;
  }
  sp.group_count = dim == 0 ? 0 : sp.group[dim - 1] + 1;

  for (const auto& r : group_ranges(sp)) {
    const Eigen::MatrixXd U = translation_in_group(sp, group_columns(sp, r.first, r.count));
    const Eigen::EigenSolver<Eigen::MatrixXd> es(U, false);
    std::vector<int> ks;
    for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
      const double phase = std::arg(es.eigenvalues()(i));
      int j = static_cast<int>(std::lround(phase * M / (2.0 * std::numbers::pi)));
      ks.push_back(((j % M) + M) % M);
    }
    std::sort(ks.begin(), ks.end());
    for (int i = 0; i < r.count; ++i) sp.momentum[static_cast<std::size_t>(r.first + i)] = ks[static_cast<std::size_t>(i)];
  }
  return sp;
}

std::vector<DipoleElement> dipole_elements(const DenseSpectrum& sp, int ground_index) {
  const auto dim = sp.eigenvalues.size();
  if (ground_index < 0 || ground_index >= dim) throw DomainError("ground index out of range");
  const Eigen::VectorXd g = sp.eigenvectors.col(ground_index);
  Eigen::VectorXd s1 = Eigen::VectorXd::Zero(dim), tot = Eigen::VectorXd::Zero(dim);
  for (Eigen::Index s = 0; s < dim; ++s) {
    s1(s ^ 1) += g(s);
    for (int m = 0; m < sp.M; ++m) tot(s ^ (Eigen::Index{1} << m)) += g(s);
  }
  const Eigen::VectorXd a1 = sp.eigenvectors.transpose() * s1;
  const Eigen::VectorXd at = sp.eigenvectors.transpose() * tot;
  std::vector<DipoleElement> out(static_cast<std::size_t>(dim));
  for (Eigen::Index n = 0; n < dim; ++n)
    out[static_cast<std::size_t>(n)] = {static_cast<int>(n), a1(n) * a1(n), at(n) * at(n)};
  return out;
}

HLReference hl_reference(const ModelParams& p) {
  const int M = p.M();
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(M, M);
  for (int m = 0; m < M; ++m) {
    h(m, m) += p.epsilon();
    h(m, (m + 1) % M) += p.b();
    h((m + 1) % M, m) += p.b();
  }
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(h);
  HLReference ref;
  ref.energies = eig.eigenvalues();
  const Eigen::VectorXd proj = eig.eigenvectors().transpose() * Eigen::VectorXd::Ones(M);
  for (int i = 0; i < M; ++i) {
    ref.strengths.push_back(proj(i) * proj(i));
    ref.chi1 += proj(i) * proj(i);
  }
  return ref;
}

std::vector<ValidationCheck> verify_against_oracle(const ModelParams& p) {
  require_oracle_size(p);
  const int M = p.M();
  const DenseSpectrum sp = diagonalize(p);
  const auto dip = dipole_elements(sp, 0);
  const auto ranges = group_ranges(sp);
  const TransitionEngine engine(p);
  const GroundStateEnergies ge = ground_energies(p);
  const ModeSet alpha(p, Sector::periodic);
  const ModeSet beta(p, Sector::antiperiodic);

  std::vector<ValidationCheck> checks;
  auto add = [&](std::string name, double dev, double tol) {
    checks.push_back({std::move(name), p.epsilon(), p.b(), M, dev, tol, dev <= tol});
  };

  add("orthonormality", sp.orthonormality_residual, 1e-10);
  add("parity_commutator", sp.parity_commutator, 1e-12);
  add("translation_commutator", sp.translation_commutator, 1e-12);

  // Analytic states: even-count beta excitations on |Phi+>, and alpha
  // excitations on |Phi-> with the count parity fixed by the regime.
  struct State {
    double e;
    int k;
    double w;
  };
  std::vector<State> analytic;
  int idx[kOracleMaxSites];
  for (unsigned mask = 0; mask < (1u << M); ++mask) {
    const int n = std::popcount(mask);
    int ksum = 0, c = 0;
    double eb = ge.E_plus, ea = ge.E_minus;
    for (int j = 0; j < M; ++j)
      if (mask & (1u << j)) {
        idx[c++] = j;
        ksum += j;
        eb += beta[j].e;
        ea += alpha[j].e;
      }
    if (n % 2 == 0) analytic.push_back({eb, (ksum + n / 2) % M, 0.0});
    if (engine.allowed(n)) analytic.push_back({ea, ksum % M, engine.weight(idx, n)});
  }

  std::vector<double> ae;
  for (const auto& s : analytic) ae.push_back(s.e);
  std::sort(ae.begin(), ae.end());
  double spec_dev = ae.size() == static_cast<std::size_t>(sp.eigenvalues.size()) ? 0.0 : INFINITY;
  for (std::size_t i = 0; i < ae.size() && std::isfinite(spec_dev); ++i)
    spec_dev = std::max(spec_dev, std::abs(ae[i] - sp.eigenvalues(static_cast<Eigen::Index>(i))) /
                                      std::max(1.0, std::abs(ae[i])));
  add("spectrum_equivalence", spec_dev, 1e-9);
  add("ground_energy", std::abs(sp.eigenvalues(0) - ge.E_plus) / std::max(1.0, std::abs(ge.E_plus)), 1e-10);

  // Assign analytic states to oracle degeneracy groups.
  std::vector<double> a_w(static_cast<std::size_t>(sp.group_count), 0.0);
  std::vector<std::map<int, double>> a_wk(static_cast<std::size_t>(sp.group_count));
  std::vector<std::vector<int>> a_k(static_cast<std::size_t>(sp.group_count));
  int unmatched = 0;
  const double* ev = sp.eigenvalues.data();
  const auto dim = sp.eigenvalues.size();
  for (const auto& s : analytic) {
    const auto it = std::lower_bound(ev, ev + dim, s.e);
    Eigen::Index best = -1;
    double bd = INFINITY;
    for (auto cand : {it - ev - 1, it - ev})
      if (cand >= 0 && cand < dim && std::abs(ev[cand] - s.e) < bd) {
        bd = std::abs(ev[cand] - s.e);
        best = cand;
      }
    if (best < 0 || bd > 1e-8 * std::max(1.0, std::abs(s.e))) {
      ++unmatched;
      continue;
    }
    const auto g = static_cast<std::size_t>(sp.group[static_cast<std::size_t>(best)]);
    a_w[g] += s.w;
    a_wk[g][s.k] += s.w;
    a_k[g].push_back(s.k);
  }

  double dev_w = unmatched ? INFINITY : 0.0, dev_wk = dev_w, dev_tot = dev_w, parity_leak = 0.0;
  int momentum_mismatch = unmatched;
  double oracle_sum = 0.0;
  for (int g = 0; g < sp.group_count; ++g) {
    const auto& r = ranges[static_cast<std::size_t>(g)];
    double ow = 0.0, ot = 0.0;
    Eigen::VectorXd c(r.count);
    for (int i = 0; i < r.count; ++i) {
      const auto& d = dip[static_cast<std::size_t>(r.first + i)];
      ow += d.sigma1_sq;
      ot += d.total_sq;
      if (sp.parity[static_cast<std::size_t>(r.first + i)] == 1) parity_leak = std::max(parity_leak, std::max(d.sigma1_sq, d.total_sq));
    }
    oracle_sum += ow;
    const auto gi = static_cast<std::size_t>(g);
    dev_w = std::max(dev_w, std::abs(ow - a_w[gi]));
    double at = 0.0;
    if (auto f = a_wk[gi].find(0); f != a_wk[gi].end()) at = static_cast<double>(M) * M * f->second;
    dev_tot = std::max(dev_tot, std::abs(ot - at));

    std::vector<int> ok(sp.momentum.begin() + r.first, sp.momentum.begin() + r.first + r.count);
    auto ak = a_k[gi];
    std::sort(ak.begin(), ak.end());
    if (ok != ak) ++momentum_mismatch;

    if (ow > 1e-14) {
      const Eigen::MatrixXd V = group_columns(sp, r.first, r.count);
      Eigen::VectorXd s1g = Eigen::VectorXd::Zero(V.rows());
      const Eigen::VectorXd gs = sp.eigenvectors.col(0);
      for (Eigen::Index s = 0; s < V.rows(); ++s) s1g(s ^ 1) += gs(s);
      const auto res = momentum_resolved(translation_in_group(sp, V), V.transpose() * s1g, M);
      for (int j = 0; j < M; ++j) {
        double aw = 0.0;
        if (auto f = a_wk[gi].find(j); f != a_wk[gi].end()) aw = f->second;
        dev_wk = std::max(dev_wk, std::abs(res[static_cast<std::size_t>(j)] - aw));
      }
    } else {
      for (const auto& [j, w] : a_wk[gi]) dev_wk = std::max(dev_wk, w);
    }
  }
  add("sigma1_group_weights", dev_w, 1e-7);
  add("sigma1_momentum_weights", dev_wk, 1e-7);
  add("uniform_dipole_strengths", dev_tot, 1e-7);
  add("parity_selection", parity_leak, 1e-12);
  add("momentum_assignment", momentum_mismatch, 0.0);

  double analytic_sum = 0.0;
  for (const auto& c : manifold_contributions(engine, M, 1)) analytic_sum += c.sigma1_weight;
  add("completeness_analytic", std::abs(analytic_sum - 1.0), 1e-8);
  add("completeness_oracle", std::abs(oracle_sum - 1.0), 1e-8);

  // Lowest state of the odd sector.
  double odd_min = INFINITY;
  for (Eigen::Index n = 0; n < dim; ++n)
    if (sp.parity[static_cast<std::size_t>(n)] == -1) odd_min = std::min(odd_min, ev[n]);
  double a_odd_min = ge.E_minus + (engine.strong() ? 0.0 : INFINITY);
  if (!engine.strong())
    for (const Mode& m : alpha) a_odd_min = std::min(a_odd_min, ge.E_minus + m.e);
  add("lowest_odd_state", std::abs(odd_min - a_odd_min) / std::max(1.0, std::abs(odd_min)), 1e-9);

  // chi against the group holding the lowest k = 0 excitation.
  const double chi = engine.strong() ? chi0(p) : chi1(p);
  const double target = engine.strong() ? ge.E_minus : ge.E_minus + alpha[0].e;
  double o_chi = 0.0;
  for (Eigen::Index n = 0; n < dim; ++n)
    if (std::abs(ev[n] - target) <= kDegeneracyTolerance * std::max(1.0, std::abs(target)))
      o_chi += dip[static_cast<std::size_t>(n)].total_sq;
  add(engine.strong() ? "chi0" : "chi1", std::abs(chi - o_chi) / std::max(1.0, chi), 1e-8);
  return checks;
}

} // namespace kmm
