#include "kmm/model.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <mpfr.h>

#include <cmath>
#include <numbers>
#include <sstream>

namespace kmm {

namespace {

constexpr double two_pi = 2.0 * std::numbers::pi;

// Minimal RAII holder for an MPFR number at a fixed precision.
class BigFloat {
public:
  explicit BigFloat(mpfr_prec_t bits) { mpfr_init2(v_, bits); mpfr_set_zero(v_, 1); }
  ~BigFloat() { mpfr_clear(v_); }
  BigFloat(const BigFloat&) = delete;
  BigFloat& operator=(const BigFloat&) = delete;
  mpfr_ptr get() { return v_; }
  mpfr_srcptr get() const { return v_; }

private:
  mpfr_t v_;
};

} // namespace

const char* to_string(Sector s) {
  return s == Sector::periodic ? "periodic" : "antiperiodic";
}

const char* to_string(Regime r) {
  switch (r) {
  case Regime::weak: return "weak";
  case Regime::critical: return "critical";
  case Regime::strong: return "strong";
  }
  return "unknown";
}

ModelParams::ModelParams(double epsilon, double b, int M)
    : epsilon_(epsilon), b_(b), M_(M), B_(2.0 * std::abs(b) / epsilon) {}

ModelParams ModelParams::make(double epsilon, double b, int M) {
  if (!(epsilon > 0.0) || !std::isfinite(epsilon))
    throw DomainError("epsilon must be positive and finite");
  if (!std::isfinite(b))
    throw DomainError("b must be finite");
  if (b > 0.0)
    throw DomainError("only b <= 0 chains are supported");
  if (M < 2)
    throw DomainError("chain length M must be at least 2");
  return ModelParams(epsilon, b, M);
}

ModelParams ModelParams::from_coupling(double B, int M, double epsilon) {
  if (!(B >= 0.0) || !std::isfinite(B))
    throw DomainError("B must be non-negative and finite");
  return make(epsilon, -0.5 * B * epsilon, M);
}

Regime ModelParams::regime() const noexcept {
  if (B_ < 1.0) return Regime::weak;
  if (B_ > 1.0) return Regime::strong;
  return Regime::critical;
}

ModelParams ModelParams::dual() const {
  if (b_ == 0.0)
    throw DomainError("the uncoupled chain has no dual");
  return make(2.0 * std::abs(b_), -0.5 * epsilon_, M_);
}

double grid_wavenumber(Sector sector, int m, int M) {
  if (sector == Sector::periodic)
    return two_pi * m / M;
  return std::numbers::pi * (2 * m + 1) / M;
}

double centered_wavenumber(double k) {
  double c = std::fmod(k, two_pi);
  if (c < 0.0) c += two_pi;
  return c > std::numbers::pi ? c - two_pi : c;
}

double hl_dispersion(const ModelParams& p, double k) {
  return p.epsilon() + 2.0 * p.b() * std::cos(k);
}

double excitation_energy(const ModelParams& p, double k) {
  const double e0 = hl_dispersion(p, k);
  const double s = 2.0 * p.b() * std::sin(k);
  return std::hypot(e0, s);
}

double bogoliubov_angle(const ModelParams& p, double k) {
  return 0.5 * std::atan2(2.0 * p.b() * std::sin(k), hl_dispersion(p, k));
}

Mode reflect(const Mode& m) {
  Mode r = m;
  r.k = -m.k;
  r.theta = -m.theta;
  return r;
}

ModeSet::ModeSet(const ModelParams& p, Sector sector) : sector_(sector) {
  const int M = p.M();
  modes_.reserve(static_cast<std::size_t>(M));
  for (int m = 0; m < M; ++m) {
    Mode mode;
    mode.index = m;
    mode.k = grid_wavenumber(sector, m, M);
    mode.e0 = hl_dispersion(p, mode.k);
    mode.e = excitation_energy(p, mode.k);
    mode.theta = bogoliubov_angle(p, mode.k);
    mode.occupied = sector == Sector::periodic && m == 0 && mode.e0 < 0.0;
    modes_.push_back(mode);
  }
}

int ModeSet::index_of(double k) const {
  const int M = size();
  // Periodic grid points sit at integer multiples of 2pi/M, antiperiodic
  // ones at half-integer multiples.
  double x = k * M / two_pi;
  if (sector_ == Sector::antiperiodic) x -= 0.5;
  const double r = std::round(x);
  if (std::abs(x - r) > 1e-9) {
    std::ostringstream os;
    os << "wavenumber " << k << " is not on the " << to_string(sector_) << " grid";
    throw DomainError(os.str());
  }
  int m = static_cast<int>(r) % M;
  if (m < 0) m += M;
  return m;
}

GroundStateEnergies ground_energies(const ModelParams& p) {
  const ModeSet alpha(p, Sector::periodic);
  const ModeSet beta(p, Sector::antiperiodic);
  GroundStateEnergies g;
  double sum_e0_alpha = 0.0, sum_e0_beta = 0.0;
  for (const Mode& m : beta) {
    g.E_plus -= 0.5 * (m.e - m.e0);
    sum_e0_beta += m.e0;
  }
  for (const Mode& m : alpha) {
    g.E_minus -= 0.5 * (m.e - m.e0);
    sum_e0_alpha += m.e0;
  }
  g.gap = g.E_minus - g.E_plus;
  g.evenness_residual = sum_e0_alpha - sum_e0_beta;
  return g;
}

double gap_mode_sum_extended(const ModelParams& p) {
  const int M = p.M();
  // Decimal digits: the gap is ~exp(-M v0) (B > 1) or ~B^M (B < 1) of sums
  // of order M epsilon.
  double lost = 0.0;
  if (p.B() > 1.0) {
    const double v0 = std::acosh(0.5 * (p.B() + 1.0 / p.B()));
    lost = M * v0 / std::log(10.0);
  } else if (p.B() > 0.0 && p.B() < 1.0) {
    lost = -M * std::log(p.B()) / std::log(10.0);
  }
  const double digits = 40.0 + lost + std::log10(static_cast<double>(M));
  const auto bits = static_cast<mpfr_prec_t>(std::ceil(digits * 3.33)) + 16;

  BigFloat pi(bits), eps(bits), b(bits), k(bits), c(bits), s(bits), e0(bits), t(bits);
  BigFloat sum_alpha(bits), sum_beta(bits), diff(bits);
  mpfr_const_pi(pi.get(), MPFR_RNDN);
  mpfr_set_d(eps.get(), p.epsilon(), MPFR_RNDN);
  mpfr_set_d(b.get(), p.b(), MPFR_RNDN);

  auto accumulate = [&](BigFloat& sum, int numerator_scale, int offset) {
    for (int m = 0; m < M; ++m) {
      // k = pi (numerator_scale * m + offset) / M
      mpfr_mul_si(k.get(), pi.get(), numerator_scale * m + offset, MPFR_RNDN);
      mpfr_div_si(k.get(), k.get(), M, MPFR_RNDN);
      mpfr_sin_cos(s.get(), c.get(), k.get(), MPFR_RNDN);
      // e0 = eps + 2 b cos k
      mpfr_mul(e0.get(), b.get(), c.get(), MPFR_RNDN);
      mpfr_mul_2ui(e0.get(), e0.get(), 1, MPFR_RNDN);
      mpfr_add(e0.get(), e0.get(), eps.get(), MPFR_RNDN);
      // E = sqrt(e0^2 + (2 b sin k)^2)
      mpfr_mul(s.get(), s.get(), b.get(), MPFR_RNDN);
      mpfr_mul_2ui(s.get(), s.get(), 1, MPFR_RNDN);
      mpfr_hypot(t.get(), e0.get(), s.get(), MPFR_RNDN);
      mpfr_add(sum.get(), sum.get(), t.get(), MPFR_RNDN);
    }
  };
  accumulate(sum_alpha, 2, 0);
  accumulate(sum_beta, 2, 1);
  mpfr_sub(diff.get(), sum_beta.get(), sum_alpha.get(), MPFR_RNDN);
  mpfr_div_2ui(diff.get(), diff.get(), 1, MPFR_RNDN);
  return mpfr_get_d(diff.get(), MPFR_RNDN);
}

double gap_integral(const ModelParams& p) {
  if (!(p.B() > 1.0))
    throw DomainError("the branch-cut gap integral requires B > 1");
  const double B = p.B();
  const double M = p.M();
  const double v0 = std::acosh(0.5 * (B + 1.0 / B));

  // v = v0 + t^2 removes the square-root endpoint; the factor exp(-M v0) is
  // pulled out so the tolerance is relative even for vanishing gaps.
  auto integrand = [&](double t) {
    const double u = t * t;
    const double rise = 2.0 * std::sinh(v0 + 0.5 * u) * std::sinh(0.5 * u);
    const double denom = -std::expm1(-2.0 * M * (v0 + u));
    return 2.0 * t * std::exp(-M * u) / denom * std::sqrt(rise);
  };
  const double t_max = std::sqrt(40.0 / M);
  double error = 0.0;
  const double scaled = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
      integrand, 0.0, t_max, 20, 1e-14, &error);
  const double prefactor = 2.0 * M * p.epsilon() * std::sqrt(2.0 * B) / std::numbers::pi;
  return prefactor * std::exp(-M * v0) * scaled;
}

} // namespace kmm
