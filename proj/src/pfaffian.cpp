#include "kmm/pfaffian.hpp"

#include <cmath>

namespace kmm {

namespace {

template <typename Matrix>
typename Matrix::Scalar parlett_reid(Matrix& a) {
  using Scalar = typename Matrix::Scalar;
  const Eigen::Index n = a.rows();
  if (n % 2 != 0) return Scalar(0);

  Scalar pf(1);
  for (Eigen::Index k = 0; k + 1 < n; k += 2) {
    Eigen::Index rel = 0;
    a.col(k).tail(n - k - 1).cwiseAbs().maxCoeff(&rel);
    const Eigen::Index kp = k + 1 + rel;
    if (kp != k + 1) {
      a.row(k + 1).swap(a.row(kp));
      a.col(k + 1).swap(a.col(kp));
      pf = -pf;
    }
    if (a(k + 1, k) == Scalar(0)) return Scalar(0);

    pf *= a(k, k + 1);
    const Eigen::Index rest = n - k - 2;
    if (rest > 0) {
      const Eigen::Matrix<Scalar, Eigen::Dynamic, 1> tau = a.row(k).tail(rest).transpose() / a(k, k + 1);
      const Eigen::Matrix<Scalar, Eigen::Dynamic, 1> pivot_col = a.col(k + 1).tail(rest);
      a.bottomRightCorner(rest, rest) += tau * pivot_col.transpose() - pivot_col * tau.transpose();
    }
  }
  return pf;
}

} // namespace

double pfaffian(Eigen::MatrixXd a) { return parlett_reid(a); }

std::complex<double> pfaffian(Eigen::MatrixXcd a) { return parlett_reid(a); }

} // namespace kmm
