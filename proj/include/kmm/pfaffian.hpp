#pragma once

#include <Eigen/Dense>

#include <complex>

namespace kmm {

/// Pfaffian of a skew-symmetric matrix by Parlett-Reid elimination with
/// partial pivoting (skew LTL^T), O(n^3). Odd dimensions give zero.
/// The input is taken by value and used as workspace.
double pfaffian(Eigen::MatrixXd a);
std::complex<double> pfaffian(Eigen::MatrixXcd a);

template <typename Scalar>
inline Scalar pfaffian4(Scalar a01, Scalar a02, Scalar a03, Scalar a12, Scalar a13, Scalar a23) {
  return a01 * a23 - a02 * a13 + a03 * a12;
}

/// Pfaffian of the principal submatrix of `a` selected by `idx` (in the
/// given order). Small sizes are expanded directly.
template <typename Derived, typename Index>
typename Derived::Scalar restricted_pfaffian(const Eigen::MatrixBase<Derived>& a, const Index* idx, int n) {
  using Scalar = typename Derived::Scalar;
  if (n == 0) return Scalar(1);
  if (n % 2 != 0) return Scalar(0);
  if (n == 2) return a(idx[0], idx[1]);
  if (n == 4)
    return pfaffian4<Scalar>(a(idx[0], idx[1]), a(idx[0], idx[2]), a(idx[0], idx[3]),
                             a(idx[1], idx[2]), a(idx[1], idx[3]), a(idx[2], idx[3]));
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> sub(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      sub(i, j) = a(idx[i], idx[j]);
  return pfaffian(std::move(sub));
}

} // namespace kmm
