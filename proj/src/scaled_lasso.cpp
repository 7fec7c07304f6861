#include "hdinf/scaled_lasso.hpp"

#include <algorithm>
#include <cmath>

namespace hdinf {

double default_lambda(Index n, Index p) {
  if (n < 1 || p < 2) throw DomainError("default_lambda: need n >= 1 and p >= 2");
  return std::sqrt(2.05 * std::log(static_cast<double>(p)) / static_cast<double>(n));
}

double scaled_lasso_objective(const Dataset& data, const Vector& theta, double sigma, double lambda) {
  const double n = static_cast<double>(data.n());
  const double rss = (data.y - data.X * theta).squaredNorm();
  return rss / (2.0 * sigma * n) + 0.5 * sigma + lambda * theta.lpNorm<1>();
}

int lasso_coordinate_descent(const Matrix& X, const Vector& y, double penalty, Vector& theta,
                             double tol, int max_sweeps, const Vector* col_sq_norms,
                             double* max_update) {
  const Index n = X.rows();
  const Index p = X.cols();
  const double inv_n = 1.0 / static_cast<double>(n);
  Vector sq;
  if (col_sq_norms == nullptr) {
    sq = X.colwise().squaredNorm().transpose() * inv_n;
    col_sq_norms = &sq;
  }
  Vector r = y - X * theta;

  auto update = [&](Index j) {
    const double cj = (*col_sq_norms)(j);
    if (cj <= 0.0) {
      theta(j) = 0.0;
      return 0.0;
    }
    const double old = theta(j);
    const double z = X.col(j).dot(r) * inv_n + cj * old;
    const double fresh = soft_threshold(z, penalty) / cj;
    const double delta = fresh - old;
    if (delta != 0.0) {
      r.noalias() -= delta * X.col(j);
      theta(j) = fresh;
    }
    return std::abs(delta);
  };

  int sweeps = 0;
  double last = 0.0;
  std::vector<Index> active;
  while (sweeps < max_sweeps) {
    // Full sweep, then polish the active set until it settles.
    double biggest = 0.0;
    for (Index j = 0; j < p; ++j) biggest = std::max(biggest, update(j));
    ++sweeps;
    last = biggest;
    if (biggest <= tol) break;

    active.clear();
    for (Index j = 0; j < p; ++j) {
      if (theta(j) != 0.0) active.push_back(j);
    }
    while (sweeps < max_sweeps) {
      double inner = 0.0;
      for (Index j : active) inner = std::max(inner, update(j));
      ++sweeps;
      last = inner;
      if (inner <= tol) break;
    }
  }
  if (max_update) *max_update = last;
  return sweeps;
}

namespace {

ScaledLassoFit fit_unscaled(const Dataset& data, double lambda, const ScaledLassoOptions& opts) {
  const Index n = data.n();
  const Index p = data.p();
  const double root_n = std::sqrt(static_cast<double>(n));

  ScaledLassoFit fit;
  fit.lambda = lambda;
  fit.theta_hat = Vector::Zero(p);

  const Vector col_sq = data.X.colwise().squaredNorm().transpose() / static_cast<double>(n);
  for (Index j = 0; j < p; ++j) {
    if (col_sq(j) <= 0.0) {
      fit.warnings.push_back("column " + std::to_string(j) + " has zero variance");
    }
  }

  double sigma = std::max(data.y.norm() / root_n, opts.sigma_floor);
  double prev_obj = scaled_lasso_objective(data, fit.theta_hat, sigma, lambda);
  for (int outer = 1; outer <= opts.max_outer; ++outer) {
    double max_update = 0.0;
    const int sweeps = lasso_coordinate_descent(data.X, data.y, sigma * lambda, fit.theta_hat,
                                                opts.tol_cd, opts.max_sweeps, &col_sq, &max_update);
    const double next = std::max((data.y - data.X * fit.theta_hat).norm() / root_n, opts.sigma_floor);
    const double rel_change = std::abs(next - sigma) / sigma;
    sigma = next;
    fit.iterations = outer;

    const double obj = scaled_lasso_objective(data, fit.theta_hat, sigma, lambda);
    fit.objective_trace.push_back(obj);
    if (opts.check_descent && obj > prev_obj + 1e-12 * (1.0 + std::abs(prev_obj))) {
      fit.warnings.push_back("objective increased at outer iteration " + std::to_string(outer));
    }
    prev_obj = obj;

    const bool cd_done = max_update <= opts.tol_cd && sweeps < opts.max_sweeps;
    if (rel_change <= opts.tol_sigma && cd_done) {
      fit.converged = true;
      break;
    }
  }
  fit.sigma_hat = sigma;
  return fit;
}

}  // namespace

ScaledLassoFit fit_scaled_lasso(const Dataset& data, double lambda, const ScaledLassoOptions& opts) {
  data.validate();
  if (!(lambda > 0.0)) throw DomainError("fit_scaled_lasso: lambda must be positive");

  if (!opts.standardize) {
    ScaledLassoFit fit = fit_unscaled(data, lambda, opts);
    fit.kkt_inf_norm = kkt_check(fit, data);
    return fit;
  }

  const double n = static_cast<double>(data.n());
  Vector scale = (data.X.colwise().squaredNorm().transpose() / n).cwiseSqrt();
  for (Index j = 0; j < scale.size(); ++j) {
    if (scale(j) <= 0.0) scale(j) = 1.0;
  }
  Dataset scaled{data.X * scale.cwiseInverse().asDiagonal(), data.y, std::nullopt};
  ScaledLassoFit fit = fit_unscaled(scaled, lambda, opts);
  fit.kkt_inf_norm = kkt_check(fit, scaled);
  fit.theta_hat = fit.theta_hat.cwiseQuotient(scale);
  return fit;
}

double kkt_check(const ScaledLassoFit& fit, const Dataset& data) {
  require_dims(fit.theta_hat.size() == data.p(), "kkt_check: theta_hat length must equal p");
  const double n = static_cast<double>(data.n());
  const Vector grad = data.X.transpose() * (data.y - data.X * fit.theta_hat) / (n * fit.sigma_hat);
  double worst = 0.0;
  for (Index j = 0; j < grad.size(); ++j) {
    const double t = fit.theta_hat(j);
    const double v = t != 0.0 ? std::abs(grad(j) - fit.lambda * (t > 0.0 ? 1.0 : -1.0))
                              : std::max(0.0, std::abs(grad(j)) - fit.lambda);
    worst = std::max(worst, v);
  }
  return worst;
}

}  // namespace hdinf
