#include "hdinf/decorrelate.hpp"

#include "hdinf/parallel.hpp"
#include "hdinf/scaled_lasso.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace hdinf {

void Subspace::validate(double tol) const {
  require_dims(k() >= 1 && k() <= p(), "Subspace: need 1 <= k <= p");
  const double err = (U.transpose() * U - Matrix::Identity(k(), k())).cwiseAbs().maxCoeff();
  require_dims(err <= tol, "Subspace: columns are not orthonormal (residual " + std::to_string(err) + ")");
}

bool Subspace::is_coordinate(std::vector<Index>* coords) const {
  std::vector<Index> picked;
  std::vector<bool> seen(static_cast<std::size_t>(p()), false);
  for (Index c = 0; c < k(); ++c) {
    Index hit = -1;
    for (Index i = 0; i < p(); ++i) {
      const double v = U(i, c);
      if (v == 0.0) continue;
      if (v != 1.0 || hit >= 0) return false;
      hit = i;
    }
    if (hit < 0 || seen[static_cast<std::size_t>(hit)]) return false;
    seen[static_cast<std::size_t>(hit)] = true;
    picked.push_back(hit);
  }
  if (coords) *coords = std::move(picked);
  return true;
}

Subspace Subspace::basis_vector(Index p, Index i) {
  require_dims(i >= 0 && i < p, "Subspace::basis_vector: index out of range");
  Matrix U = Matrix::Zero(p, 1);
  U(i, 0) = 1.0;
  return {U};
}

Subspace Subspace::direction(const Vector& v) {
  const double norm = v.norm();
  if (!(norm > 0.0)) throw DomainError("Subspace::direction: zero vector");
  return {Matrix(v / norm)};
}

double default_mu(Index n, Index p) {
  if (n < 1 || p < 2) throw DomainError("default_mu: need n >= 1 and p >= 2");
  return 2.0 * std::sqrt(std::log(static_cast<double>(p)) / static_cast<double>(n));
}

ColumnSolution solve_column(const Matrix& sigma, const Vector& u, double mu, const QpOptions& opts) {
  const Index p = sigma.rows();
  require_dims(sigma.cols() == p && u.size() == p, "solve_column: dimensions do not conform");
  if (!(mu > 0.0)) throw DomainError("solve_column: mu must be positive");
  const int max_sweeps = opts.max_sweeps > 0 ? opts.max_sweeps : static_cast<int>(50 * p);

  ColumnSolution sol;
  sol.g = Vector::Zero(p);
  Vector s = Vector::Zero(p);  // Sigma g
  Vector& g = sol.g;

  auto update = [&](Index j) {
    const double d = sigma(j, j);
    if (d <= 0.0) return 0.0;
    const double old = g(j);
    const double z = u(j) - (s(j) - d * old);
    const double fresh = soft_threshold(z, mu) / d;
    const double delta = fresh - old;
    if (delta != 0.0) {
      s.noalias() += delta * sigma.col(j);
      g(j) = fresh;
    }
    return std::abs(delta) * std::sqrt(d);
  };

  auto violation = [&] { return std::max(0.0, (s - u).cwiseAbs().maxCoeff() - mu); };

  std::vector<Index> active;
  while (sol.sweeps < max_sweeps) {
    double biggest = 0.0;
    for (Index j = 0; j < p; ++j) biggest = std::max(biggest, update(j));
    ++sol.sweeps;

    const double quad = g.dot(s);
    const double penalized = 0.5 * quad - u.dot(g) + mu * g.lpNorm<1>();
    if (!std::isfinite(penalized) || penalized < -opts.divergence_bound) break;

    const double gap = 2.0 * (quad - u.dot(g) + mu * g.lpNorm<1>());
    if (violation() <= opts.feas_tol && gap <= opts.tol_qp * std::max(quad, 1e-300)) {
      // Incremental updates drift; confirm against a fresh product before accepting.
      s.noalias() = sigma * g;
      if (violation() <= opts.feas_tol) {
        sol.converged = true;
        break;
      }
    }
    if (biggest == 0.0) continue;

    active.clear();
    for (Index j = 0; j < p; ++j) {
      if (g(j) != 0.0) active.push_back(j);
    }
    const double inner_tol = 1e-12 + 1e-10 * g.cwiseAbs().maxCoeff();
    while (sol.sweeps < max_sweeps) {
      double inner = 0.0;
      for (Index j : active) inner = std::max(inner, update(j));
      ++sol.sweeps;
      if (inner <= inner_tol) break;
    }
  }

  s.noalias() = sigma * g;
  sol.objective = g.dot(s);
  sol.max_violation = violation();
  sol.duality_gap = 2.0 * (sol.objective - u.dot(g) + mu * g.lpNorm<1>());
  if (sol.max_violation > opts.feas_tol) sol.converged = false;
  return sol;
}

Decorrelator build_decorrelator(const Matrix& sigma, const Subspace& U, double mu,
                                const QpOptions& opts, int threads) {
  const Index p = sigma.rows();
  const Index k = U.k();
  require_dims(sigma.cols() == p && U.p() == p, "build_decorrelator: dimensions do not conform");

  Decorrelator out;
  out.G.resize(p, k);
  out.mu_used.resize(k);
  out.objective.resize(k);
  std::vector<int> doublings(static_cast<std::size_t>(k), 0);
  std::vector<char> failed(static_cast<std::size_t>(k), 0);

  parallel_for(static_cast<std::size_t>(k), threads, [&](std::size_t c) {
    const Index col = static_cast<Index>(c);
    const Vector u = U.U.col(col);
    double m = mu;
    for (int attempt = 0; attempt <= kMaxMuDoublings; ++attempt) {
      ColumnSolution sol = solve_column(sigma, u, m, opts);
      if (sol.converged) {
        for (int step = 0; step < opts.shrink_steps; ++step) {
          ColumnSolution tighter = solve_column(sigma, u, m / opts.shrink_factor, opts);
          if (!tighter.converged) break;
          sol = std::move(tighter);
          m /= opts.shrink_factor;
        }
        out.G.col(col) = sol.g;
        out.mu_used(col) = m;
        out.objective(col) = sol.objective;
        doublings[c] = attempt;
        return;
      }
      m *= 2.0;
    }
    failed[c] = 1;
  });

  for (Index c = 0; c < k; ++c) {
    if (failed[static_cast<std::size_t>(c)]) {
      throw SolverError("decorrelate", "column " + std::to_string(c) + " stalled after " +
                                           std::to_string(kMaxMuDoublings) + " doublings of mu");
    }
    out.escalations += doublings[static_cast<std::size_t>(c)];
  }
  out.coherence = coherence(sigma, out.G, U.U);
  return out;
}

}  // namespace hdinf
