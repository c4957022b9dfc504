#pragma once

#include <complex>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace chronospec {

using cplx = std::complex<double>;
inline constexpr cplx kI{0.0, 1.0};

template <typename Scalar>
using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using MatrixXc = Mat<cplx>;
using VectorXc = Vec<cplx>;
using MatrixXr = Mat<double>;
using VectorXr = Vec<double>;

/// Time-dependent square matrix, e.g. the reduced coefficient matrix A(t).
using MatrixFn = std::function<MatrixXc(double)>;

/// Singular values in decreasing order.
template <typename Derived>
VectorXr singular_values(const Eigen::MatrixBase<Derived>& m) {
  if (m.size() == 0) return VectorXr{};
  Eigen::BDCSVD<Mat<typename Derived::Scalar>> svd(m.eval());
  return svd.singularValues();
}

template <typename Derived>
double spectral_norm(const Eigen::MatrixBase<Derived>& m) {
  if (m.size() == 0) return 0.0;
  return singular_values(m)(0);
}

/// sigma_max / sigma_min; infinity for singular input.
template <typename Derived>
double condition_number(const Eigen::MatrixBase<Derived>& m) {
  const VectorXr s = singular_values(m);
  if (s.size() == 0) return 1.0;
  const double smin = s(s.size() - 1);
  if (smin <= 0.0) return std::numeric_limits<double>::infinity();
  return s(0) / smin;
}

/// ||M - M^dagger||_F
template <typename Derived>
double hermiticity_defect(const Eigen::MatrixBase<Derived>& m) {
  return (m - m.adjoint()).norm();
}

/// Thrown when an argument violates a documented precondition.
class DomainError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Thrown when a numerical procedure fails (singular matrix, no convergence).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace chronospec
