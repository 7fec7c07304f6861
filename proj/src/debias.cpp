#include "hdinf/debias.hpp"

#include <cmath>
#include <stdexcept>

namespace hdinf {

DebiasedEstimate debias(const ScaledLassoFit& fit, const Dataset& data, const Matrix& sigma_hat,
                        const Subspace& U, const Matrix& G) {
  const Index p = data.p();
  const Index k = U.k();
  require_dims(fit.theta_hat.size() == p && U.p() == p && G.rows() == p && G.cols() == k &&
                   sigma_hat.rows() == p && sigma_hat.cols() == p,
               "debias: dimensions do not conform");
  const double n = static_cast<double>(data.n());

  DebiasedEstimate est;
  est.n = data.n();
  est.sigma_hat = fit.sigma_hat;
  const Vector resid = data.y - data.X * fit.theta_hat;
  const Vector score = data.X.transpose() * resid;
  est.gamma_d = U.U.transpose() * fit.theta_hat + G.transpose() * score / n;

  est.Q = G.transpose() * sigma_hat * G;
  est.Q.diagonal().array() += kQRidge;
  est.Q *= fit.sigma_hat * fit.sigma_hat / n;
  est.D = est.Q.diagonal().cwiseSqrt().cwiseInverse();
  return est;
}

DebiasedEstimate debias(const ScaledLassoFit& fit, const Dataset& data, const Subspace& U,
                        const Decorrelator& G) {
  return debias(fit, data, data.gram(), U, G.G);
}

Decomposition decompose(const DebiasedEstimate& est, const Dataset& data, const ScaledLassoFit& fit,
                        const Subspace& U, const Matrix& G) {
  if (!data.truth) throw std::invalid_argument("decompose: dataset carries no ground truth");
  const Vector& theta0 = data.truth->theta0;
  require_dims(theta0.size() == data.p() && G.cols() == est.k() && U.k() == est.k(),
               "decompose: dimensions do not conform");
  const double n = static_cast<double>(data.n());
  const double root_n = std::sqrt(n);

  Decomposition out;
  out.Z = G.transpose() * (data.X.transpose() * (data.y - data.X * theta0)) / root_n;
  // G^T Sigma_hat v computed as G^T X^T (X v) / n to avoid forming Sigma_hat.
  const Vector diff = theta0 - fit.theta_hat;
  out.Delta = root_n * (G.transpose() * (data.X.transpose() * (data.X * diff)) / n -
                        U.U.transpose() * diff);
  return out;
}

}  // namespace hdinf
