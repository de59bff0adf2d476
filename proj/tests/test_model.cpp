#include "kmm/model.hpp"
#include "kmm/oracle.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace kmm;
using std::numbers::pi;

TEST_CASE("parameter validation") {
  CHECK_THROWS_AS(ModelParams::make(0.0, -0.1, 4), DomainError);
  CHECK_THROWS_AS(ModelParams::make(-1.0, -0.1, 4), DomainError);
  CHECK_THROWS_AS(ModelParams::make(1.0, 0.1, 4), DomainError);
  CHECK_THROWS_AS(ModelParams::make(1.0, -0.1, 1), DomainError);
  CHECK_THROWS_AS(ModelParams::make(1.0, NAN, 4), DomainError);
  CHECK_NOTHROW(ModelParams::make(1.0, 0.0, 4));

  const auto p = ModelParams::make(2.0, -0.7, 6);
  CHECK(p.B() == doctest::Approx(0.7));
  CHECK(p.regime() == Regime::weak);
  CHECK(ModelParams::from_coupling(1.4, 10).b() == doctest::Approx(-0.7));
  CHECK(ModelParams::from_coupling(1.0, 10).regime() == Regime::critical);

  const auto d = p.dual();
  CHECK(d.epsilon() == doctest::Approx(1.4));
  CHECK(d.b() == doctest::Approx(-1.0));
  CHECK(d.B() * p.B() == doctest::Approx(1.0));
  CHECK_THROWS_AS(ModelParams::make(1.0, 0.0, 4).dual(), DomainError);
}

TEST_CASE("wavenumber grids") {
  const auto p = ModelParams::from_coupling(0.5, 8);
  const ModeSet a(p, Sector::periodic), b(p, Sector::antiperiodic);
  REQUIRE(a.size() == 8);
  CHECK(a[3].k == doctest::Approx(2 * pi * 3 / 8));
  CHECK(b[3].k == doctest::Approx(pi * 7 / 8));
  for (int m = 0; m < 8; ++m) {
    CHECK(a.index_of(a[m].k) == m);
    CHECK(b.index_of(b[m].k) == m);
    CHECK(a.index_of(a[m].k - 2 * pi) == m);
  }
  CHECK_THROWS_AS(a.index_of(b[0].k), DomainError);
  CHECK_THROWS_AS(b.index_of(a[1].k), DomainError);
  CHECK(centered_wavenumber(3 * pi / 2) == doctest::Approx(-pi / 2));
  CHECK(centered_wavenumber(pi) == doctest::Approx(pi));
}

TEST_CASE("dispersion and Bogoliubov angle") {
  const auto p = ModelParams::make(1.0, -0.35, 10);
  for (double k : {0.0, 0.3, 1.7, pi, 4.0}) {
    const double e0 = 1.0 + 2 * -0.35 * std::cos(k);
    const double s = 2 * -0.35 * std::sin(k);
    CHECK(excitation_energy(p, k) == doctest::Approx(std::sqrt(e0 * e0 + s * s)));
    const double t = bogoliubov_angle(p, k);
    CHECK(std::cos(2 * t) * excitation_energy(p, k) == doctest::Approx(e0));
    CHECK(std::sin(2 * t) * excitation_energy(p, k) == doctest::Approx(s));
  }
  // Above the critical point the alpha = 0 mode is the occupied bare state.
  const auto strong = ModelParams::from_coupling(1.5, 6);
  const ModeSet a(strong, Sector::periodic);
  CHECK(a[0].occupied);
  CHECK(a[0].theta == doctest::Approx(-pi / 2));
  CHECK_FALSE(ModeSet(p, Sector::periodic)[0].occupied);

  const Mode r = reflect(a[2]);
  CHECK(r.k == doctest::Approx(-a[2].k));
  CHECK(r.theta == doctest::Approx(-a[2].theta));
}

TEST_CASE("vacuum energies match dense diagonalization") {
  for (double B : {0.3, 0.9, 1.3, 2.5}) {
    const auto p = ModelParams::from_coupling(B, 7);
    const auto g = ground_energies(p);
    const auto sp = diagonalize(p);
    CHECK(g.E_plus == doctest::Approx(sp.eigenvalues(0)).epsilon(1e-12));
    CHECK(std::abs(g.evenness_residual) < 1e-12);
  }
  const auto g = ground_energies(ModelParams::from_coupling(0.8, 10));
  CHECK(g.E_plus == doctest::Approx(diagonalize(ModelParams::from_coupling(0.8, 10)).eigenvalues(0)).epsilon(1e-12));
}

TEST_CASE("gap: extended mode sum against branch-cut integral") {
  for (double B : {1.1, 1.4, 2.0})
    for (int M : {10, 50, 200}) {
      const auto p = ModelParams::from_coupling(B, M);
      const double a = gap_mode_sum_extended(p);
      const double b = gap_integral(p);
      CHECK(a > 0);
      CHECK(std::abs(a - b) <= 1e-8 * b);
    }
  // Double-precision sums agree where the gap is not too small.
  const auto p = ModelParams::from_coupling(1.4, 10);
  CHECK(ground_energies(p).gap == doctest::Approx(gap_mode_sum_extended(p)).epsilon(1e-10));
  CHECK_THROWS_AS(gap_integral(ModelParams::from_coupling(0.9, 10)), DomainError);
  CHECK(gap_integral(ModelParams::from_coupling(1.4, 50)) < gap_integral(ModelParams::from_coupling(1.4, 10)));
  // Weak coupling: the splitting is ~B^M and needs the extra precision too.
  const double weak = gap_mode_sum_extended(ModelParams::from_coupling(0.4, 200));
  CHECK(weak > 0);
  CHECK(weak < 1e-70);
}
