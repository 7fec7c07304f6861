#pragma once

#include "hdinf/common.hpp"
#include "hdinf/dataset.hpp"
#include "hdinf/decorrelate.hpp"
#include "hdinf/scaled_lasso.hpp"

namespace hdinf {

inline constexpr double kQRidge = 1e-4;

struct DebiasedEstimate {
  Vector gamma_d;   // U^T theta_hat + G^T X^T (y - X theta_hat) / n
  Matrix Q;         // (sigma_hat^2 / n) (G^T Sigma_hat G + 1e-4 I_k)
  Vector D;         // Q_ii^{-1/2}
  double sigma_hat = 0.0;
  Index n = 0;

  Index k() const { return gamma_d.size(); }
};

DebiasedEstimate debias(const ScaledLassoFit& fit, const Dataset& data, const Subspace& U,
                        const Decorrelator& G);

/// Same, with Sigma_hat = X^T X / n already formed by the caller.
DebiasedEstimate debias(const ScaledLassoFit& fit, const Dataset& data, const Matrix& sigma_hat,
                        const Subspace& U, const Matrix& G);

/// sqrt(n) (gamma_d - U^T theta0) = Z + Delta with
/// Z = G^T X^T (y - X theta0) / sqrt(n) and Delta = sqrt(n) (G^T Sigma_hat - U^T)(theta0 - theta_hat).
struct Decomposition {
  Vector Z;
  Vector Delta;
};

/// Requires data.truth; throws std::invalid_argument otherwise.
Decomposition decompose(const DebiasedEstimate& est, const Dataset& data, const ScaledLassoFit& fit,
                        const Subspace& U, const Matrix& G);

}  // namespace hdinf
