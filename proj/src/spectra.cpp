#include "kmm/spectra.hpp"

#include "kmm/pfaffian.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <condition_variable>
#include <exception>
#include <mutex>
#include <numbers>
#include <sstream>
#include <thread>

namespace kmm {

namespace {

int resolve_threads(int threads, int chunks) {
  if (threads <= 0) threads = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  return std::max(1, std::min(threads, chunks));
}

// Runs work(chunk, slot) for every chunk on a pool and calls merge(chunk,
// slot) strictly in chunk order, so results do not depend on the number of
// threads.
template <class Work, class Merge>
void run_chunks(int chunks, int threads, Work work, Merge merge) {
  if (chunks <= 0) return;
  threads = resolve_threads(threads, chunks);
  if (threads == 1) {
    for (int c = 0; c < chunks; ++c) {
      work(c, 0);
      merge(c, 0);
    }
    return;
  }
  std::atomic<int> next{0};
  std::mutex mu;
  std::condition_variable cv;
  int merged = 0;
  bool failed = false;
  std::exception_ptr error;

  auto body = [&](int slot) {
    for (;;) {
      const int c = next.fetch_add(1);
      if (c >= chunks) return;
      try {
        work(c, slot);
      } catch (...) {
        std::lock_guard lock(mu);
        if (!error) error = std::current_exception();
        failed = true;
        cv.notify_all();
        return;
      }
      std::unique_lock lock(mu);
      cv.wait(lock, [&] { return failed || merged == c; });
      if (failed) return;
      merge(c, slot);
      ++merged;
      cv.notify_all();
    }
  };
  std::vector<std::thread> pool;
  for (int t = 0; t < threads; ++t) pool.emplace_back(body, t);
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

// Visits all strictly increasing n-tuples of 0..M-1 whose first entry is i0,
// in lexicographic order.
template <class F>
void for_each_tuple(int M, int n, int i0, F&& f) {
  int idx[64];
  idx[0] = i0;
  for (int j = 1; j < n; ++j) idx[j] = i0 + j;
  if (idx[n - 1] >= M) return;
  for (;;) {
    f(static_cast<const int*>(idx));
    int j = n - 1;
    while (j >= 1 && idx[j] == M - n + j) --j;
    if (j < 1) return;
    ++idx[j];
    for (int l = j + 1; l < n; ++l) idx[l] = idx[l - 1] + 1;
  }
}

} // namespace

double manifold_state_count(int M, int n) {
  if (n < 0 || n > M) return 0.0;
  double c = 1.0;
  for (int i = 1; i <= n; ++i) c = c * (M - n + i) / i;
  return std::round(c);
}

void check_enumeration_budget(int M, int n) {
  const double count = manifold_state_count(M, n);
  if ((M > 20 && n > 4) || count > kMaxEnumeratedStates) {
    std::ostringstream os;
    os << "manifold with " << n << " excitations at M=" << M << " has " << count
       << " states; enumeration limited to n <= 4 for M > 20 and " << kMaxEnumeratedStates
       << " states";
    throw BudgetExceeded(os.str(), count);
  }
}

double chi1(const ModelParams& p) {
  if (p.regime() != Regime::weak)
    throw DomainError("chi1 is defined for weak coupling (B < 1)");
  const WeakTables w = WeakTables::build(p);
  const double M = p.M();
  return M * M * std::norm(w.one_particle[0]) * w.overlap_sq;
}

double chi0(const ModelParams& p) {
  if (p.regime() != Regime::strong)
    throw DomainError("chi0 is defined for strong coupling (B > 1)");
  const double M = p.M();
  return M * M * solve_k2(p).sigma_norm;
}

double infinite_A(double B) {
  if (!(B >= 0.0) || B > 1.0)
    throw DomainError("A[B] is defined for 0 <= B < 1 (diverges at B = 1)");
  if (B == 1.0) return INFINITY;
  return std::pow(1.0 - B, -0.75) * std::pow(1.0 + B, 0.25);
}

double infinite_Atilde(double B) {
  if (!(B >= 1.0) || !std::isfinite(B))
    throw DomainError("Atilde[B] is defined for B > 1 (vanishes at B = 1)");
  if (B == 1.0) return 0.0;
  return std::pow(1.0 - 1.0 / (B * B), 0.25);
}

TransitionEngine::TransitionEngine(const ModelParams& p) : params_(p) {
  switch (p.regime()) {
  case Regime::critical:
    throw DomainError("transition weights are not available at the critical point B = 1");
  case Regime::strong:
    strong_ = true;
    dipole_ = solve_k2(p);
    norm_ = dipole_->sigma_norm;
    break;
  case Regime::weak:
    weak_ = WeakTables::build(p);
    norm_ = weak_->overlap_sq;
    break;
  }
  init_modes();
}

TransitionEngine::TransitionEngine(const ModelParams& p, ContractionTable table) : params_(p) {
  if (p.regime() != Regime::strong || table.kind != KernelKind::dipole || table.M != p.M())
    throw DomainError("a dipole kernel can only seed a strong-coupling engine of the same size");
  strong_ = true;
  norm_ = table.sigma_norm;
  dipole_ = std::move(table);
  init_modes();
}

void TransitionEngine::init_modes() {
  const ModeSet alpha(params_, Sector::periodic);
  for (const Mode& m : alpha) {
    energy_.push_back(m.e);
    centered_k_.push_back(centered_wavenumber(m.k));
  }
  gap_ = gap_mode_sum_extended(params_);
}

double TransitionEngine::weight(const int* idx, int n) const {
  if (!allowed(n)) return 0.0;
  if (strong_) {
    const Eigen::MatrixXd& X = dipole_->X;
    double pf;
    switch (n) {
    case 0: pf = 1.0; break;
    case 2: pf = X(idx[0], idx[1]); break;
    case 4:
      pf = pfaffian4(X(idx[0], idx[1]), X(idx[0], idx[2]), X(idx[0], idx[3]), X(idx[1], idx[2]),
                     X(idx[1], idx[3]), X(idx[2], idx[3]));
      break;
    default: pf = restricted_pfaffian(X, idx, n);
    }
    return norm_ * pf * pf;
  }
  const Eigen::MatrixXcd& K = weak_->vacuum.K2;
  const std::vector<cplx>& k1 = weak_->one_particle;
  cplx amp;
  switch (n) {
  case 1: amp = k1[idx[0]]; break;
  case 3:
    amp = k1[idx[0]] * K(idx[1], idx[2]) - k1[idx[1]] * K(idx[0], idx[2]) +
          k1[idx[2]] * K(idx[0], idx[1]);
    break;
  default: {
    int rest[64];
    amp = 0.0;
    for (int j = 0; j < n; ++j) {
      int w = 0;
      for (int i = 0; i < n; ++i)
        if (i != j) rest[w++] = idx[i];
      const double sign = j % 2 == 0 ? 1.0 : -1.0;
      amp += sign * k1[idx[j]] * restricted_pfaffian(K, rest, n - 1);
    }
  }
  }
  return norm_ * std::norm(amp);
}

double TransitionEngine::energy(const int* idx, int n) const {
  double e = gap_;
  for (int j = 0; j < n; ++j) e += energy_[idx[j]];
  return e;
}

double TransitionEngine::unwrapped_momentum(const int* idx, int n) const {
  double k = 0.0;
  for (int j = 0; j < n; ++j) k += centered_k_[idx[j]];
  return k;
}

int TransitionEngine::momentum_index(const int* idx, int n) const {
  long s = 0;
  for (int j = 0; j < n; ++j) s += idx[j];
  return static_cast<int>(s % params_.M());
}

std::vector<ManifoldContribution> manifold_contributions(const ModelParams& p, int max_manifold,
                                                         int threads) {
  if (max_manifold < 0) throw DomainError("max_manifold must be non-negative");
  for (int n = 0; n <= max_manifold; ++n) check_enumeration_budget(p.M(), n);
  return manifold_contributions(TransitionEngine(p), max_manifold, threads);
}

std::vector<ManifoldContribution> manifold_contributions(const TransitionEngine& engine,
                                                         int max_manifold, int threads) {
  const int M = engine.params().M();
  if (max_manifold < 0) throw DomainError("max_manifold must be non-negative");
  max_manifold = std::min(max_manifold, M);
  for (int n = 0; n <= max_manifold; ++n) check_enumeration_budget(M, n);

  std::vector<ManifoldContribution> out;
  for (int n = 0; n <= max_manifold; ++n) {
    ManifoldContribution c;
    c.excitations = n;
    c.state_count = manifold_state_count(M, n);
    if (engine.allowed(n)) {
      double total = 0.0, uniform = 0.0;
      if (n == 0) {
        total = uniform = engine.weight(nullptr, 0);
      } else {
        const int chunks = M - n + 1;
        std::vector<double> part_total(static_cast<std::size_t>(chunks));
        std::vector<double> part_uniform(static_cast<std::size_t>(chunks));
        run_chunks(
            chunks, threads,
            [&](int i0, int) {
              double t = 0.0, u = 0.0;
              for_each_tuple(M, n, i0, [&](const int* idx) {
                const double w = engine.weight(idx, n);
                t += w;
                if (engine.momentum_index(idx, n) == 0) u += w;
              });
              part_total[static_cast<std::size_t>(i0)] = t;
              part_uniform[static_cast<std::size_t>(i0)] = u;
            },
            [](int, int) {});
        for (int i = 0; i < chunks; ++i) {
          total += part_total[static_cast<std::size_t>(i)];
          uniform += part_uniform[static_cast<std::size_t>(i)];
        }
      }
      c.sigma1_weight = total;
      c.chi_per_molecule = M * uniform;
      c.resolved_per_molecule = M * total;
    }
    out.push_back(c);
  }
  return out;
}

void GridSpec::validate() const {
  if (!(k_max > k_min) || !std::isfinite(k_min) || !std::isfinite(k_max))
    throw DomainError("grid momentum window must satisfy k_min < k_max");
  if (!(E_max > E_min) || !std::isfinite(E_min) || !std::isfinite(E_max))
    throw DomainError("grid energy window must satisfy E_min < E_max");
  if (n_k < 1 || n_E < 1)
    throw DomainError("grid must have at least one bin per axis");
  if (static_cast<double>(n_k) * n_E > 1e8)
    throw DomainError("grid has too many bins");
}

double DensityGrid::integrated() const {
  double s = 0.0;
  for (double v : bins) s += v;
  return s * spec.dk() * spec.dE();
}

DensityGrid absorption_density(const ModelParams& p, int manifold, const GridSpec& spec,
                               int threads) {
  if (manifold < 1 || manifold > 4)
    throw DomainError("density manifold must be 1, 2, 3 or 4");
  spec.validate();
  check_enumeration_budget(p.M(), manifold);
  return absorption_density(TransitionEngine(p), manifold, spec, threads);
}

DensityGrid absorption_density(const TransitionEngine& engine, int n, const GridSpec& spec,
                               int threads) {
  if (n < 0 || n > 4)
    throw DomainError("density manifold must be between 0 and 4");
  spec.validate();
  const int M = engine.params().M();
  check_enumeration_budget(M, n);

  DensityGrid g;
  g.spec = spec;
  g.manifold = n;
  g.state_count = manifold_state_count(M, n);
  const std::size_t nbins = static_cast<std::size_t>(spec.n_k) * spec.n_E;
  g.bins.assign(nbins, 0.0);
  const double inv_cell = 1.0 / (spec.dk() * spec.dE());
  const double strength_scale = static_cast<double>(M);

  auto deposit = [&](std::vector<double>& bins, double& in_window, double& total, const int* idx) {
    const double s = strength_scale * engine.weight(idx, n);
    total += s;
    if (s == 0.0) return;
    const double k = engine.unwrapped_momentum(idx, n);
    const double e = engine.energy(idx, n);
    const double fk = (k - spec.k_min) / spec.dk();
    const double fe = (e - spec.E_min) / spec.dE();
    if (!(fk >= 0.0 && fk < spec.n_k && fe >= 0.0 && fe < spec.n_E)) return;
    const auto ik = std::min(static_cast<int>(fk), spec.n_k - 1);
    const auto ie = std::min(static_cast<int>(fe), spec.n_E - 1);
    bins[static_cast<std::size_t>(ik) * spec.n_E + ie] += s * inv_cell;
    in_window += s;
  };

  if (!engine.allowed(n)) return g;
  if (n == 0) {
    deposit(g.bins, g.strength_in_window, g.strength_total, nullptr);
    return g;
  }

  const int chunks = M - n + 1;
  const int slots = resolve_threads(threads, chunks);
  std::vector<std::vector<double>> local(static_cast<std::size_t>(slots));
  std::vector<double> local_in(static_cast<std::size_t>(slots)), local_total(local_in);
  run_chunks(
      chunks, slots,
      [&](int i0, int slot) {
        auto& bins = local[static_cast<std::size_t>(slot)];
        bins.assign(nbins, 0.0);
        double in = 0.0, total = 0.0;
        for_each_tuple(M, n, i0, [&](const int* idx) { deposit(bins, in, total, idx); });
        local_in[static_cast<std::size_t>(slot)] = in;
        local_total[static_cast<std::size_t>(slot)] = total;
      },
      [&](int, int slot) {
        const auto& bins = local[static_cast<std::size_t>(slot)];
        for (std::size_t i = 0; i < nbins; ++i) g.bins[i] += bins[i];
        g.strength_in_window += local_in[static_cast<std::size_t>(slot)];
        g.strength_total += local_total[static_cast<std::size_t>(slot)];
      });
  return g;
}

CorrelationFunction correlations(const ModelParams& p, int m_max) {
  if (p.regime() != Regime::weak)
    throw DomainError("correlations are defined for weak coupling (B < 1)");
  if (m_max < 0) throw DomainError("m_max must be non-negative");
  const double B = p.B();
  CorrelationFunction c;
  if (B == 0.0) {
    c = hl_correlations(m_max);
    c.heitler_london = false;
    return c;
  }

  // The integrand is analytic and periodic, so the trapezoid rule converges
  // geometrically; double N until the values settle.
  const double pref = std::pow(1.0 - B * B, 0.25);
  auto evaluate = [&](int N) {
    std::vector<double> inv(static_cast<std::size_t>(N));
    for (int j = 0; j < N; ++j) {
      const double k = 2.0 * std::numbers::pi * j / N;
      inv[static_cast<std::size_t>(j)] = 1.0 / std::sqrt(1.0 + B * B - 2.0 * B * std::cos(k));
    }
    std::vector<double> v(static_cast<std::size_t>(m_max) + 1);
    for (int m = 0; m <= m_max; ++m) {
      double s = 0.0;
      for (int j = 0; j < N; ++j)
        s += std::cos(2.0 * std::numbers::pi * static_cast<double>((static_cast<long>(m) * j) % N) / N) *
             inv[static_cast<std::size_t>(j)];
      v[static_cast<std::size_t>(m)] = pref * s / N;
    }
    return v;
  };
  int N = 64;
  while (N < 2 * m_max + 64) N *= 2;
  std::vector<double> prev = evaluate(N);
  for (;;) {
    N *= 2;
    std::vector<double> next = evaluate(N);
    double diff = 0.0;
    for (std::size_t i = 0; i < next.size(); ++i) diff = std::max(diff, std::abs(next[i] - prev[i]));
    prev = std::move(next);
    if (diff <= 1e-15 * std::abs(prev[0]) || N >= (1 << 22)) break;
  }
  c.values = std::move(prev);

  c.fluctuation_sum = c.values[0];
  for (int m = 1; m <= m_max; ++m) c.fluctuation_sum += 2.0 * c.values[static_cast<std::size_t>(m)];

  // Least-squares slope of log|C(m)| over the tail window.
  const int lo = std::max(1, static_cast<int>(std::ceil(3.0 / (1.0 - B))));
  const int hi = std::min(m_max, static_cast<int>(std::floor(8.0 / (1.0 - B))));
  c.fit_first = std::min(lo, std::max(1, m_max - 1));
  c.fit_last = std::max(hi, std::min(m_max, c.fit_first + 1));
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int count = 0;
  for (int m = c.fit_first; m <= c.fit_last && m <= m_max; ++m) {
    const double y = c.values[static_cast<std::size_t>(m)];
    if (!(std::abs(y) > 0.0)) continue;
    const double ly = std::log(std::abs(y));
    sx += m;
    sy += ly;
    sxx += static_cast<double>(m) * m;
    sxy += m * ly;
    ++count;
  }
  if (count >= 2) {
    const double slope = (count * sxy - sx * sy) / (count * sxx - sx * sx);
    c.correlation_length = slope < 0.0 ? -1.0 / slope : INFINITY;
  } else {
    c.correlation_length = NAN;
  }
  return c;
}

CorrelationFunction hl_correlations(int m_max) {
  if (m_max < 0) throw DomainError("m_max must be non-negative");
  CorrelationFunction c;
  c.values.assign(static_cast<std::size_t>(m_max) + 1, 0.0);
  c.values[0] = 1.0;
  c.fluctuation_sum = 1.0;
  c.correlation_length = 0.0;
  c.heitler_london = true;
  return c;
}

} // namespace kmm
