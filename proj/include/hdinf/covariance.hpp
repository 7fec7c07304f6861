#pragma once

#include "hdinf/common.hpp"

#include <Eigen/Cholesky>

#include <cmath>
#include <string>

namespace hdinf {

/// Sigma(i, j) = rho^|i - j|.
template <typename Scalar = double>
Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> toeplitz_cov(Index p, Scalar rho) {
  using std::abs;
  using std::pow;
  if (p < 1) throw DomainError("toeplitz_cov: p must be >= 1");
  if (!(abs(rho) < Scalar(1))) throw DomainError("toeplitz_cov: |rho| must be < 1");
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> S(p, p);
  for (Index j = 0; j < p; ++j) {
    for (Index i = 0; i < p; ++i) {
      const Index lag = i > j ? i - j : j - i;
      S(i, j) = lag == 0 ? Scalar(1) : pow(rho, Scalar(lag));
    }
  }
  return S;
}

inline constexpr double kCholeskyPivotFloor = 1e-12;

/// Lower factor L with L L^T = S. Any pivot L(i,i)^2 <= 1e-12 is reported as NotSpdError
/// rather than letting a near-singular factor leak NaNs downstream.
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic> cholesky(
    const Eigen::MatrixBase<Derived>& S) {
  using Scalar = typename Derived::Scalar;
  using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  if (S.rows() != S.cols()) throw DimensionError("cholesky: matrix is not square");
  const Scalar scale = S.cwiseAbs().maxCoeff();
  if (!((S - S.transpose()).cwiseAbs().maxCoeff() <= Scalar(1e-12) * (Scalar(1) + scale))) {
    throw NotSpdError("cholesky: matrix is not symmetric");
  }
  Eigen::LLT<Mat> llt(S.derived());
  Mat L = llt.matrixL();
  if (llt.info() != Eigen::Success) throw NotSpdError("cholesky: non-positive pivot");
  for (Index i = 0; i < L.rows(); ++i) {
    const Scalar pivot = L(i, i) * L(i, i);
    if (!(pivot > Scalar(kCholeskyPivotFloor))) {
      throw NotSpdError("cholesky: pivot " + std::to_string(i) + " below floor");
    }
  }
  return L;
}

struct CovarianceModel {
  enum class Kind { toeplitz, identity, explicit_matrix };

  Kind kind = Kind::identity;
  Index p = 1;
  double rho = 0.0;
  Matrix explicit_sigma;  // used only for Kind::explicit_matrix

  static CovarianceModel identity(Index p) { return {Kind::identity, p, 0.0, {}}; }
  static CovarianceModel toeplitz(Index p, double rho) { return {Kind::toeplitz, p, rho, {}}; }
  static CovarianceModel from_matrix(Matrix sigma) {
    const Index p = sigma.rows();
    return {Kind::explicit_matrix, p, 0.0, std::move(sigma)};
  }

  Matrix sigma() const;
};

}  // namespace hdinf
