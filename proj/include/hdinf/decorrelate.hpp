#pragma once

#include "hdinf/common.hpp"

#include <vector>

namespace hdinf {

/// Orthonormal basis of the tested subspace, one direction per column (p x k).
struct Subspace {
  Matrix U;

  Index p() const { return U.rows(); }
  Index k() const { return U.cols(); }

  /// Throws DimensionError unless 1 <= k <= p and |U^T U - I|_max <= tol.
  void validate(double tol = 1e-8) const;

  /// True when every column is a distinct standard basis vector; `coords` receives
  /// the coordinate picked by each column.
  bool is_coordinate(std::vector<Index>* coords = nullptr) const;

  static Subspace identity(Index p) { return {Matrix::Identity(p, p)}; }
  static Subspace basis_vector(Index p, Index i);
  static Subspace direction(const Vector& v);  // v / ||v||
};

/// 2 sqrt(log(p) / n)
double default_mu(Index n, Index p);

/// |Sigma G - U|_inf, the largest absolute entry.
template <typename DS, typename DG, typename DU>
typename DS::Scalar coherence(const Eigen::MatrixBase<DS>& sigma, const Eigen::MatrixBase<DG>& G,
                              const Eigen::MatrixBase<DU>& U) {
  require_dims(sigma.rows() == sigma.cols() && sigma.cols() == G.rows() && G.rows() == U.rows() &&
                   G.cols() == U.cols(),
               "coherence: dimensions do not conform");
  if (U.size() == 0) return typename DS::Scalar(0);
  return (sigma * G - U).cwiseAbs().maxCoeff();
}

struct QpOptions {
  double tol_qp = 1e-6;       // relative duality gap
  double feas_tol = 1e-9;     // allowed excess of |Sigma g - u|_inf over mu
  int max_sweeps = 0;         // 0 means 50 * p
  double divergence_bound = 1e8;  // stall when the penalized objective drops below -bound
  // After a feasible solve, retry with mu / shrink_factor up to shrink_steps times and keep
  // the last feasible solution. 0 keeps mu as given.
  int shrink_steps = 0;
  double shrink_factor = 1.5;
};

struct ColumnSolution {
  Vector g;
  double objective = 0.0;      // g^T Sigma g
  double max_violation = 0.0;  // max(0, |Sigma g - u|_inf - mu)
  double duality_gap = 0.0;
  int sweeps = 0;
  bool converged = false;
};

/// minimize g^T Sigma g subject to |Sigma g - u|_inf <= mu.
///
/// Solved through its Lagrange dual, which after the change of variables g = -v/2 is the
/// penalized problem 0.5 g^T Sigma g - u^T g + mu |g|_1 with the same minimizer. Cyclic
/// coordinate descent on that problem keeps Sigma g updated incrementally; the primal-dual
/// gap 2 (g^T Sigma g - u^T g + mu |g|_1) certifies optimality once g is feasible.
ColumnSolution solve_column(const Matrix& sigma, const Vector& u, double mu, const QpOptions& opts = {});

struct Decorrelator {
  Matrix G;
  Vector mu_used;    // per column, after escalation
  Vector objective;  // g_i^T Sigma g_i
  double coherence = 0.0;
  int escalations = 0;  // total number of mu doublings across columns
};

inline constexpr int kMaxMuDoublings = 4;

/// Solves every column of U independently. A column that stalls is retried with mu
/// doubled, at most four times; SolverError("decorrelate") if it still stalls. With
/// opts.shrink_steps > 0 a feasible column is then re-solved at geometrically smaller mu
/// until a solve stalls, and mu_used records the smallest feasible value.
Decorrelator build_decorrelator(const Matrix& sigma, const Subspace& U, double mu,
                                const QpOptions& opts = {}, int threads = 1);

}  // namespace hdinf
