#include "hdinf/covariance.hpp"

namespace hdinf {

Matrix CovarianceModel::sigma() const {
  switch (kind) {
    case Kind::identity:
      return Matrix::Identity(p, p);
    case Kind::toeplitz:
      return toeplitz_cov<double>(p, rho);
    case Kind::explicit_matrix:
      require_dims(explicit_sigma.rows() == p && explicit_sigma.cols() == p,
                   "CovarianceModel: explicit matrix must be p x p");
      return explicit_sigma;
  }
  return {};
}

}  // namespace hdinf
