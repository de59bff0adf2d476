#include "kmm/oracle.hpp"
#include "kmm/wick.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace kmm;
using std::numbers::pi;

TEST_CASE("contraction coefficient reference values") {
  // Reference values evaluated independently in 30-digit arithmetic.
  const auto p = ModelParams::make(1.0, -0.7, 6);
  const cplx c = contraction_coeff(p, pi / 3, pi / 6, 2);
  CHECK(c.real() == doctest::Approx(0.0037952226104983243).epsilon(1e-12));
  CHECK(c.imag() == doctest::Approx(0.0021911727958057617).epsilon(1e-12));

  // Uncoupled limit: theta = 0 leaves (1 + exp(i(a - b))) / (M (exp(i(b - a)) - 1)).
  const cplx d = contraction_coeff(ModelParams::make(1.0, 0.0, 4), 0.0, pi / 4, 1);
  CHECK(d.real() == doctest::Approx(-0.42677669529663688).epsilon(1e-12));
  CHECK(d.imag() == doctest::Approx(-0.42677669529663688).epsilon(1e-12));

  CHECK_THROWS_AS(contraction_coeff(p, pi / 6, pi / 6, 1), DomainError);
  CHECK_THROWS_AS(contraction_coeff(p, pi / 3, pi / 3, 1), DomainError);
  CHECK_THROWS_AS(contraction_coeff(p, pi / 3, pi / 6, 3), DomainError);
}

namespace {

// |<Phi-|sigma_1^x|Phi+>|^2 from the oracle: the weight to the lowest odd state.
double oracle_sigma_norm(const ModelParams& p) {
  const auto sp = diagonalize(p);
  const auto dip = dipole_elements(sp, 0);
  double best = INFINITY, w = 0;
  for (int n = 0; n < static_cast<int>(dip.size()); ++n)
    if (sp.parity[n] == -1 && sp.eigenvalues(n) < best - 1e-9) {
      best = sp.eigenvalues(n);
      w = dip[n].sigma1_sq;
    }
  return w;
}

} // namespace

TEST_CASE("dipole kernel: reduction and normalization") {
  for (int M : {4, 5, 6, 7, 8}) {
    const auto p = ModelParams::from_coupling(1.6, M);
    const auto t = solve_k2(p);
    CHECK(t.imag_residual < 1e-8);
    CHECK(t.antisymmetry_residual < 1e-10);
    CHECK(t.phase.name == "exp(-i alpha)");
    CHECK(t.sigma_norm == doctest::Approx(oracle_sigma_norm(p)).epsilon(1e-9));
    CHECK(t.sigma_norm == doctest::Approx(1.0 / (Eigen::MatrixXd::Identity(M, M) + t.X).determinant()).epsilon(1e-9));
    CHECK(static_cast<int>(t.lambda.size()) * 2 + t.zero_count == M);
  }
  CHECK_THROWS_AS(solve_k2(ModelParams::from_coupling(0.5, 6)), DomainError);
  CHECK_THROWS_AS(solve_k2(ModelParams::from_coupling(1.0, 6)), DomainError);
}

TEST_CASE("reduce_kernel reproduces a solved table") {
  const auto p = ModelParams::from_coupling(1.3, 9);
  const auto t = solve_k2(p);
  const auto r = reduce_kernel(p, KernelKind::dipole, t.K2);
  CHECK(r.sigma_norm == t.sigma_norm);
  CHECK((r.X - t.X).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("vacuum overlap: dual route equals the direct kernel") {
  for (double B : {0.2, 0.5, 0.8}) {
    const auto p = ModelParams::from_coupling(B, 7);
    const double dual = ground_overlap(p).value_sq;
    const double direct = solve_vacuum_kernel(p).sigma_norm;
    CHECK(dual == doctest::Approx(direct).epsilon(1e-10));
    // The dual normalization itself, against the dense dual chain.
    CHECK(dual == doctest::Approx(oracle_sigma_norm(p.dual())).epsilon(1e-9));
  }
  CHECK(ground_overlap(ModelParams::make(1.0, 0.0, 5)).value_sq == 1.0);
  CHECK_THROWS_AS(ground_overlap(ModelParams::from_coupling(1.2, 5)), DomainError);
}

TEST_CASE("weak one-particle function") {
  const auto p0 = ModelParams::make(1.0, 0.0, 6);
  const auto k0 = weak_one_particle(p0);
  // sigma_1^x on the uncoupled chain excites site 1: exp(-i alpha) / sqrt(M).
  for (int j = 0; j < 6; ++j)
    CHECK(std::abs(k0[j] - std::polar(1.0 / std::sqrt(6.0), -2 * pi * j / 6)) < 1e-14);

  const auto p = ModelParams::from_coupling(0.6, 6);
  const auto w = WeakTables::build(p);
  const int one[1] = {0};
  const auto e = higher_elements_weak(w, one);
  CHECK(std::norm(e.amplitude) == doctest::Approx(std::norm(w.one_particle[0]) * w.overlap_sq));
}

TEST_CASE("element selection rules and validation") {
  const auto t = solve_k2(ModelParams::from_coupling(1.4, 6));
  const int rep[2] = {2, 2};
  CHECK(higher_elements_strong(t, rep).amplitude == cplx(0.0));
  const int odd[3] = {0, 1, 2};
  CHECK_THROWS_AS(higher_elements_strong(t, odd), DomainError);
  const int bad[2] = {0, 6};
  CHECK_THROWS_AS(higher_elements_strong(t, bad), DomainError);
  const int two[2] = {1, 4}, swapped[2] = {4, 1};
  CHECK(std::abs(higher_elements_strong(t, two).amplitude + higher_elements_strong(t, swapped).amplitude) < 1e-14);
  const int none[1] = {0};
  CHECK(std::abs(higher_elements_strong(t, std::span<const int>(none, 0)).amplitude) ==
        doctest::Approx(std::sqrt(t.sigma_norm)));

  const auto w = WeakTables::build(ModelParams::from_coupling(0.5, 6));
  CHECK_THROWS_AS(higher_elements_weak(w, two), DomainError);
  const int rep3[3] = {1, 1, 3};
  CHECK(higher_elements_weak(w, rep3).amplitude == cplx(0.0));
}
