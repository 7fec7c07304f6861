#include "hdinf/covariance.hpp"
#include "hdinf/dataset.hpp"
#include "hdinf/debias.hpp"
#include "hdinf/decorrelate.hpp"
#include "hdinf/scaled_lasso.hpp"

#include "oracles.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace hdinf;

namespace {

Matrix random_spd(Index p, std::uint64_t seed) {
  Engine eng = make_engine({seed, 77});
  std::normal_distribution<double> z(0.0, 1.0);
  Matrix A(p + 3, p);
  for (Index i = 0; i < A.rows(); ++i) {
    for (Index j = 0; j < p; ++j) A(i, j) = z(eng);
  }
  return A.transpose() * A / static_cast<double>(A.rows()) + 0.05 * Matrix::Identity(p, p);
}

Vector random_unit(Index p, std::uint64_t seed) {
  Engine eng = make_engine({seed, 78});
  std::normal_distribution<double> z(0.0, 1.0);
  Vector u(p);
  for (Index i = 0; i < p; ++i) u(i) = z(eng);
  return u / u.norm();
}

}  // namespace

TEST_CASE("solve_column closed forms on the identity") {
  const Matrix I = Matrix::Identity(5, 5);
  Vector e1 = Vector::Zero(5);
  e1(0) = 1.0;
  const ColumnSolution a = solve_column(I, e1, 0.1);
  CHECK(a.converged);
  CHECK((a.g - 0.9 * e1).cwiseAbs().maxCoeff() <= 1e-12);
  CHECK(a.objective == doctest::Approx(0.81).epsilon(1e-12));
  const ColumnSolution b = solve_column(I, e1, 1.0);
  CHECK(b.g.isZero());
  CHECK(b.objective == 0.0);
  CHECK_THROWS_AS(solve_column(I, e1, 0.0), DomainError);
  CHECK_THROWS_AS(solve_column(I, Vector::Zero(4), 0.1), DimensionError);
}

TEST_CASE("solve_column matches the barrier oracle") {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const Index p = 4 + static_cast<Index>(seed % 7);
    const Matrix S = random_spd(p, seed);
    const Vector u = random_unit(p, seed);
    const double mu = 0.02 + 0.01 * static_cast<double>(seed % 5);
    const ColumnSolution sol = solve_column(S, u, mu);
    const double ref = oracle::qp_barrier(S, u, mu);
    CAPTURE(seed);
    REQUIRE(sol.converged);
    CHECK(std::abs(sol.objective - ref) <= 1e-5 * std::max(1.0, std::abs(ref)));
    CHECK(sol.max_violation <= 1e-9);
  }
}

TEST_CASE("solve_column invariants") {
  const Matrix S = random_spd(8, 5);
  const Vector u = random_unit(8, 5);
  SUBCASE("objective is monotone in mu") {
    double prev = std::numeric_limits<double>::infinity();
    for (double mu : {0.01, 0.02, 0.05, 0.1, 0.3}) {
      const double obj = solve_column(S, u, mu).objective;
      CHECK(obj <= prev + 1e-7);
      prev = obj;
    }
  }
  SUBCASE("negating u negates g") {
    const ColumnSolution a = solve_column(S, u, 0.05);
    const ColumnSolution b = solve_column(S, Vector(-u), 0.05);
    CHECK((a.g + b.g).cwiseAbs().maxCoeff() <= 1e-8);
  }
}

TEST_CASE("build_decorrelator") {
  SUBCASE("identity design and U") {
    const Decorrelator G = build_decorrelator(Matrix::Identity(6, 6), Subspace::identity(6), 0.2);
    CHECK((G.G - 0.8 * Matrix::Identity(6, 6)).cwiseAbs().maxCoeff() <= 1e-12);
    CHECK(G.escalations == 0);
    CHECK(G.coherence == doctest::Approx(0.2));
  }
  SUBCASE("feasibility audit") {
    const Matrix S = random_spd(9, 11);
    const Decorrelator G = build_decorrelator(S, Subspace::identity(9), 0.05);
    CHECK(G.coherence <= 0.05 + 1e-7);
    CHECK(G.coherence <= G.mu_used.maxCoeff() + 1e-7);
    CHECK(coherence(S, G.G, Matrix(Matrix::Identity(9, 9))) == doctest::Approx(G.coherence));
  }
  SUBCASE("threads give identical output") {
    const Matrix S = random_spd(12, 3);
    const Decorrelator a = build_decorrelator(S, Subspace::identity(12), 0.05, {}, 1);
    const Decorrelator b = build_decorrelator(S, Subspace::identity(12), 0.05, {}, 4);
    CHECK(a.G == b.G);
  }
  SUBCASE("singular design escalates mu") {
    // Rank-deficient Gram: mu below the feasibility edge forces doublings.
    Matrix X = Matrix::Zero(3, 6);
    X << 1, 2, 0, 1, 0, 1, 0, 1, 1, 0, 2, 1, 1, 0, 1, 1, 1, 0;
    const Matrix S = X.transpose() * X / 3.0;
    const Decorrelator G = build_decorrelator(S, Subspace::basis_vector(6, 0), 0.05);
    CHECK(G.mu_used(0) >= 0.05);
    CHECK(G.coherence <= G.mu_used(0) + 1e-7);
  }
  SUBCASE("shrinking keeps feasibility and never raises mu") {
    const Matrix S = random_spd(8, 21);
    QpOptions opts;
    opts.shrink_steps = 6;
    const Decorrelator G = build_decorrelator(S, Subspace::identity(8), 0.2, opts);
    CHECK(G.mu_used.maxCoeff() <= 0.2);
    CHECK(G.coherence <= G.mu_used.maxCoeff() + 1e-7);
    // An invertible Gram is feasible at every mu, so every step is taken.
    CHECK(G.mu_used.minCoeff() == doctest::Approx(0.2 / std::pow(1.5, 6)));
  }
}

TEST_CASE("coherence") {
  const Matrix S = random_spd(5, 9);
  const Matrix U = Matrix::Identity(5, 5);
  CHECK(coherence(S, Matrix(S.inverse()), U) <= 1e-9);
  CHECK(coherence(S, Matrix(Matrix::Zero(5, 5)), U) == 1.0);
}

TEST_CASE("default_mu") {
  CHECK(default_mu(600, 1000) == doctest::Approx(0.2146).epsilon(1e-3));
  CHECK(default_mu(3, 20) == doctest::Approx(2.0 * std::sqrt(std::log(20.0) / 3.0)));
  CHECK_THROWS(default_mu(0, 10));
}

TEST_CASE("subspace helpers") {
  CHECK(Subspace::identity(4).is_coordinate());
  std::vector<Index> coords;
  CHECK(Subspace::basis_vector(4, 2).is_coordinate(&coords));
  CHECK(coords == std::vector<Index>{2});
  Vector v(3);
  v << 1, 1, 0;
  const Subspace d = Subspace::direction(v);
  CHECK_FALSE(d.is_coordinate());
  CHECK(d.U.norm() == doctest::Approx(1.0));
  CHECK_THROWS(Subspace::direction(Vector::Zero(3)));
  Subspace bad{Matrix::Ones(3, 2)};
  CHECK_THROWS_AS(bad.validate(), DimensionError);
}

TEST_CASE("debias") {
  const Index n = 60;
  const Index p = 10;
  const Vector theta0 = make_signal(p, 3, 1.0, {41, 0});
  const Dataset d = sample_dataset(n, CovarianceModel::toeplitz(p, 0.3), theta0, 1.0, {41, 1});
  const ScaledLassoFit fit = fit_scaled_lasso(d, default_lambda(n, p));
  const Matrix S = d.gram();
  const Subspace U = Subspace::identity(p);

  SUBCASE("zero residual gives no correction") {
    Dataset exact = d;
    exact.y = d.X * fit.theta_hat;
    const DebiasedEstimate est = debias(fit, exact, S, U, Matrix::Random(p, p));
    CHECK((est.gamma_d - fit.theta_hat).cwiseAbs().maxCoeff() <= 1e-12);
  }
  SUBCASE("G = 0") {
    const DebiasedEstimate est = debias(fit, d, S, U, Matrix::Zero(p, p));
    CHECK(est.gamma_d == fit.theta_hat);
    const Matrix expect = fit.sigma_hat * fit.sigma_hat / n * kQRidge * Matrix::Identity(p, p);
    CHECK((est.Q - expect).cwiseAbs().maxCoeff() <= 1e-18);
  }
  SUBCASE("inverse Gram reproduces OLS") {
    const Matrix G = S.inverse();
    const DebiasedEstimate est = debias(fit, d, S, U, G);
    const Vector ols = (d.X.transpose() * d.X).ldlt().solve(d.X.transpose() * d.y);
    CHECK((est.gamma_d - ols).cwiseAbs().maxCoeff() <= 1e-8);
  }
  SUBCASE("Q and D") {
    const Decorrelator G = build_decorrelator(S, U, default_mu(n, p));
    const DebiasedEstimate est = debias(fit, d, U, G);
    CHECK(est.k() == p);
    CHECK_NOTHROW(cholesky(est.Q));
    for (Index i = 0; i < p; ++i) {
      CHECK(est.Q(i, i) >= kQRidge * fit.sigma_hat * fit.sigma_hat / n * (1 - 1e-12));
      CHECK(est.D(i) <= 100.0 * std::sqrt(static_cast<double>(n)) / fit.sigma_hat * (1 + 1e-12));
      CHECK(est.D(i) == doctest::Approx(1.0 / std::sqrt(est.Q(i, i))));
    }
  }
  SUBCASE("dimension mismatch") {
    CHECK_THROWS_AS(debias(fit, d, S, U, Matrix::Zero(p + 1, p)), DimensionError);
  }
}

TEST_CASE("decompose") {
  const Index n = 80;
  const Index p = 40;
  const Vector theta0 = make_signal(p, 4, 1.0, {51, 0});
  const Dataset d = sample_dataset(n, CovarianceModel::toeplitz(p, 0.5), theta0, 1.0, {51, 1});
  const ScaledLassoFit fit = fit_scaled_lasso(d, default_lambda(n, p));
  const Matrix S = d.gram();
  const Subspace U = Subspace::identity(p);
  const Decorrelator G = build_decorrelator(S, U, default_mu(n, p));
  const DebiasedEstimate est = debias(fit, d, S, U, G.G);

  SUBCASE("identity holds") {
    const Decomposition dec = decompose(est, d, fit, U, G.G);
    const Vector lhs = std::sqrt(static_cast<double>(n)) * (est.gamma_d - theta0);
    CHECK((dec.Z + dec.Delta - lhs).cwiseAbs().maxCoeff() <=
          1e-9 * (1.0 + est.gamma_d.cwiseAbs().maxCoeff()));
  }
  SUBCASE("noiseless data has Z = 0") {
    const Dataset clean = sample_dataset(n, CovarianceModel::toeplitz(p, 0.5), theta0, 0.0, {51, 1});
    const Decomposition dec = decompose(est, clean, fit, U, G.G);
    CHECK(dec.Z.isZero());
  }
  SUBCASE("exact fit has Delta = 0") {
    ScaledLassoFit oracle_fit = fit;
    oracle_fit.theta_hat = theta0;
    const Decomposition dec = decompose(est, d, oracle_fit, U, G.G);
    CHECK(dec.Delta.isZero());
  }
  SUBCASE("truth is required") {
    Dataset real = d;
    real.truth.reset();
    CHECK_THROWS_AS(decompose(est, real, fit, U, G.G), std::invalid_argument);
  }
}
