#include "kmm/pfaffian.hpp"

#include <doctest.h>

#include <random>

using namespace kmm;

namespace {

Eigen::MatrixXd random_skew(int n, unsigned seed) {
  std::mt19937 rng(seed);
  std::normal_distribution<double> d;
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      a(i, j) = d(rng);
      a(j, i) = -a(i, j);
    }
  return a;
}

} // namespace

TEST_CASE("pfaffian squares to the determinant") {
  for (int n : {2, 4, 6, 10}) {
    const Eigen::MatrixXd a = random_skew(n, 7u + n);
    const double pf = pfaffian(a);
    CHECK(pf * pf == doctest::Approx(a.determinant()).epsilon(1e-10));
  }
  CHECK(pfaffian(random_skew(5, 3)) == 0.0);
}

TEST_CASE("pfaffian sign conventions") {
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(4, 4);
  a(0, 1) = 2;
  a(2, 3) = 3;
  a = a - Eigen::MatrixXd(a.transpose());
  CHECK(pfaffian(a) == doctest::Approx(6.0));
  const int swapped[4] = {1, 0, 2, 3};
  CHECK(restricted_pfaffian(a, swapped, 4) == doctest::Approx(-6.0));

  const Eigen::MatrixXd r = random_skew(6, 11);
  const double expect = r(0, 1) * r(2, 3) - r(0, 2) * r(1, 3) + r(0, 3) * r(1, 2);
  const int idx[4] = {0, 1, 2, 3};
  CHECK(restricted_pfaffian(r, idx, 4) == doctest::Approx(expect));
  CHECK(pfaffian(Eigen::MatrixXd(r.topLeftCorner(4, 4))) == doctest::Approx(expect));
  const int six[6] = {0, 1, 2, 3, 4, 5};
  CHECK(restricted_pfaffian(r, six, 6) == doctest::Approx(pfaffian(r)));
  CHECK(restricted_pfaffian(r, six, 0) == 1.0);
  CHECK(restricted_pfaffian(r, six, 3) == 0.0);
}

TEST_CASE("complex pfaffian") {
  const Eigen::MatrixXd re = random_skew(6, 21), im = random_skew(6, 22);
  Eigen::MatrixXcd a(6, 6);
  a.real() = re;
  a.imag() = im;
  const auto pf = pfaffian(a);
  const auto det = a.determinant();
  CHECK(std::abs(pf * pf - det) < 1e-10 * std::abs(det));
}
