#include "hdinf/covariance.hpp"
#include "hdinf/dataset.hpp"
#include "hdinf/scaled_lasso.hpp"

#include "oracles.hpp"

#include <doctest.h>

#include <cmath>
#include <numeric>

using namespace hdinf;

namespace {

Dataset small_instance(std::uint64_t seed) {
  Vector theta0(3);
  theta0 << 1.5, 0.0, -0.8;
  return sample_dataset(8, CovarianceModel::toeplitz(3, 0.3), theta0, 0.7, {seed, 0});
}

// Columns with X^T X / n = I exactly: scaled Hadamard rows.
Matrix orthogonal_design() {
  Matrix H(8, 4);
  H << 1, 1, 1, 1, 1, -1, 1, -1, 1, 1, -1, -1, 1, -1, -1, 1, 1, 1, 1, 1, 1, -1, 1, -1, 1, 1, -1, -1, 1,
      -1, -1, 1;
  return H;
}

}  // namespace

TEST_CASE("soft_threshold") {
  CHECK(soft_threshold(3.0, 1.0) == 2.0);
  CHECK(soft_threshold(-3.0, 1.0) == -2.0);
  CHECK(soft_threshold(0.5, 1.0) == 0.0);
  CHECK(soft_threshold(-1.0, 1.0) == 0.0);
  CHECK(soft_threshold(2.5f, 0.5f) == 2.0f);
}

TEST_CASE("default_lambda") {
  CHECK(default_lambda(600, 1000) == doctest::Approx(0.15365).epsilon(1e-4));
  CHECK(default_lambda(41, 7) == doctest::Approx(std::sqrt(2.05 * std::log(7.0) / 41.0)).epsilon(1e-15));
  CHECK_THROWS(default_lambda(0, 10));
  CHECK_THROWS(default_lambda(10, 1));
}

TEST_CASE("zero response gives zero fit at the sigma floor") {
  Dataset d = small_instance(1);
  d.y.setZero();
  const ScaledLassoFit fit = fit_scaled_lasso(d, 0.5);
  CHECK(fit.theta_hat.isZero());
  CHECK(fit.sigma_hat == ScaledLassoOptions{}.sigma_floor);
  CHECK(kkt_check(fit, d) <= 1e-10);
}

TEST_CASE("full shrinkage on an orthogonal design") {
  Dataset d;
  d.X = orthogonal_design();
  d.y = Vector::Zero(8);
  d.y << 0.3, -0.1, 0.2, 0.4, -0.2, 0.1, 0.0, 0.3;
  const double n = 8.0;
  const double sigma0 = d.y.norm() / std::sqrt(n);
  const double corr = (d.X.transpose() * d.y / n).cwiseAbs().maxCoeff();
  const double lambda = 1.01 * corr / sigma0;
  const ScaledLassoFit fit = fit_scaled_lasso(d, lambda);
  CHECK(fit.converged);
  CHECK(fit.theta_hat.isZero());
  CHECK(fit.sigma_hat == doctest::Approx(sigma0).epsilon(1e-12));
}

TEST_CASE("matches the enumeration oracle on n = 8, p = 3") {
  for (std::uint64_t seed : {1u, 2u, 3u, 4u, 5u}) {
    const Dataset d = small_instance(seed);
    const double lambda = 0.3;
    ScaledLassoOptions opts;
    opts.tol_sigma = 1e-12;
    opts.tol_cd = 1e-14;
    opts.max_outer = 1000;
    const ScaledLassoFit fit = fit_scaled_lasso(d, lambda, opts);
    const auto ref = oracle::scaled_lasso(d.X, d.y, lambda);
    CAPTURE(seed);
    CHECK((fit.theta_hat - ref.theta).cwiseAbs().maxCoeff() <= 1e-6);
    CHECK(std::abs(fit.sigma_hat - ref.sigma) <= 1e-6);
  }
}

TEST_CASE("objective descent, sigma-step exactness and KKT at n = 600, p = 1000") {
  const Index n = 600;
  const Index p = 1000;
  const Vector theta0 = make_signal(p, 10, 1.0, {11, 0});
  const Dataset d = sample_dataset(n, CovarianceModel::toeplitz(p, 0.2), theta0, 1.0, {11, 1});
  const double lambda = default_lambda(n, p);
  const ScaledLassoFit fit = fit_scaled_lasso(d, lambda);
  REQUIRE(fit.converged);
  CHECK(fit.warnings.empty());
  for (std::size_t i = 1; i < fit.objective_trace.size(); ++i) {
    CHECK(fit.objective_trace[i] <= fit.objective_trace[i - 1] + 1e-12);
  }
  // d/dsigma of the objective: -|r|^2 / (2 sigma^2 n) + 1/2.
  const Vector r = d.y - d.X * fit.theta_hat;
  const double deriv = -r.squaredNorm() / (2.0 * fit.sigma_hat * fit.sigma_hat * n) + 0.5;
  CHECK(std::abs(deriv) <= 1e-10);
  CHECK(kkt_check(fit, d) <= 1e-5);
  CHECK(fit.sigma_hat > 0.5);
  CHECK(fit.sigma_hat < 1.5);
}

TEST_CASE("kkt_check detects a perturbed solution") {
  const Dataset d = small_instance(3);
  ScaledLassoFit fit = fit_scaled_lasso(d, 0.3);
  const double base = kkt_check(fit, d);
  Index j = 0;
  fit.theta_hat.cwiseAbs().maxCoeff(&j);
  REQUIRE(fit.theta_hat(j) != 0.0);
  fit.theta_hat(j) += 0.1;
  CHECK(kkt_check(fit, d) > base);
}

TEST_CASE("support recovery on a noiseless orthogonal design") {
  Dataset d;
  d.X = orthogonal_design();
  Vector theta0(4);
  theta0 << 5.0, 0.0, -4.0, 0.0;
  d.y = d.X * theta0;
  const ScaledLassoFit fit = fit_scaled_lasso(d, 0.2);
  for (Index j = 0; j < 4; ++j) CHECK((fit.theta_hat(j) != 0.0) == (theta0(j) != 0.0));
}

TEST_CASE("column permutation permutes the solution") {
  const Index p = 40;
  const Vector theta0 = make_signal(p, 4, 1.0, {21, 0});
  const Dataset d = sample_dataset(60, CovarianceModel::toeplitz(p, 0.5), theta0, 1.0, {21, 1});
  std::vector<Index> perm(static_cast<std::size_t>(p));
  std::iota(perm.begin(), perm.end(), Index{0});
  std::reverse(perm.begin(), perm.end());
  std::swap(perm[3], perm[17]);
  Dataset q = d;
  for (Index j = 0; j < p; ++j) q.X.col(j) = d.X.col(perm[static_cast<std::size_t>(j)]);
  ScaledLassoOptions opts;
  opts.tol_sigma = 1e-12;
  opts.tol_cd = 1e-13;
  const double lambda = default_lambda(60, p);
  const ScaledLassoFit a = fit_scaled_lasso(d, lambda, opts);
  const ScaledLassoFit b = fit_scaled_lasso(q, lambda, opts);
  for (Index j = 0; j < p; ++j) {
    CHECK(std::abs(b.theta_hat(j) - a.theta_hat(perm[static_cast<std::size_t>(j)])) <= 1e-8);
  }
}

TEST_CASE("standardized fit returns coefficients on the original scale") {
  const Index p = 30;
  const Vector theta0 = make_signal(p, 3, 1.0, {31, 0});
  Dataset d = sample_dataset(80, CovarianceModel::identity(p), theta0, 0.5, {31, 1});
  ScaledLassoOptions opts;
  opts.standardize = true;
  const ScaledLassoFit base = fit_scaled_lasso(d, default_lambda(80, p), opts);
  Dataset scaled = d;
  scaled.X.col(4) *= 3.0;
  const ScaledLassoFit fit = fit_scaled_lasso(scaled, default_lambda(80, p), opts);
  CHECK(fit.theta_hat(4) * 3.0 == doctest::Approx(base.theta_hat(4)).epsilon(1e-6));
  CHECK(fit.sigma_hat == doctest::Approx(base.sigma_hat).epsilon(1e-6));
}

TEST_CASE("lasso_coordinate_descent solves the plain Lasso") {
  const Dataset d = small_instance(7);
  Vector theta = Vector::Zero(3);
  double max_update = 0.0;
  lasso_coordinate_descent(d.X, d.y, 0.2, theta, 1e-14, 10000, nullptr, &max_update);
  CHECK((theta - oracle::lasso_enumerate(d.X, d.y, 0.2)).cwiseAbs().maxCoeff() <= 1e-9);
  CHECK(max_update <= 1e-14);
}

TEST_CASE("invalid input") {
  const Dataset d = small_instance(1);
  CHECK_THROWS(fit_scaled_lasso(d, 0.0));
  CHECK_THROWS(fit_scaled_lasso(d, -1.0));
  Dataset bad = d;
  bad.y = Vector::Zero(3);
  CHECK_THROWS_AS(fit_scaled_lasso(bad, 0.3), DimensionError);
}
