#pragma once

#include "hdinf/common.hpp"
#include "hdinf/dataset.hpp"

#include <string>
#include <vector>

namespace hdinf {

template <typename Scalar>
inline Scalar soft_threshold(Scalar x, Scalar t) {
  if (x > t) return x - t;
  if (x < -t) return x + t;
  return Scalar(0);
}

/// sqrt(2.05 log(p) / n), the regularization level used throughout the experiments.
double default_lambda(Index n, Index p);

struct ScaledLassoOptions {
  double tol_sigma = 1e-6;   // relative change in sigma between outer iterations
  double tol_cd = 1e-8;      // largest coordinate update in the last sweep
  int max_outer = 100;
  int max_sweeps = 1000;     // per theta-step
  double sigma_floor = 1e-8;
  bool standardize = false;  // rescale columns to unit empirical variance before fitting
  bool check_descent = true; // verify the joint objective never increases
};

struct ScaledLassoFit {
  Vector theta_hat;
  double sigma_hat = 0.0;
  double lambda = 0.0;
  int iterations = 0;
  double kkt_inf_norm = 0.0;
  bool converged = false;
  std::vector<std::string> warnings;
  std::vector<double> objective_trace;  // objective after every outer iteration
};

/// (1/(2 sigma n)) ||y - X theta||^2 + sigma / 2 + lambda ||theta||_1
double scaled_lasso_objective(const Dataset& data, const Vector& theta, double sigma, double lambda);

/// Alternating minimization: coordinate-descent Lasso at penalty sigma * lambda,
/// then sigma = max(||y - X theta|| / sqrt(n), sigma_floor). Warm-started.
/// Non-convergence is reported through `converged`, not thrown.
ScaledLassoFit fit_scaled_lasso(const Dataset& data, double lambda, const ScaledLassoOptions& opts = {});

/// Largest violation of the theta-subgradient conditions of the scaled objective.
double kkt_check(const ScaledLassoFit& fit, const Dataset& data);

/// Plain Lasso, (1/(2n)) ||y - X theta||^2 + penalty ||theta||_1, by cyclic coordinate
/// descent starting from `theta` (updated in place). Returns the number of sweeps.
int lasso_coordinate_descent(const Matrix& X, const Vector& y, double penalty, Vector& theta,
                             double tol, int max_sweeps, const Vector* col_sq_norms = nullptr,
                             double* max_update = nullptr);

}  // namespace hdinf
