#pragma once

#include "hdinf/common.hpp"

namespace hdinf {

enum class LpStatus { optimal, infeasible, unbounded, iteration_limit };

const char* to_string(LpStatus s);

struct LpResult {
  LpStatus status = LpStatus::iteration_limit;
  Vector x;
  double objective = 0.0;
  int pivots = 0;
  double max_residual = 0.0;  // max(0, A x - b) at the returned point
};

struct LpOptions {
  double tol = 1e-9;  // pivot and reduced-cost tolerance
  int max_pivots = 0;  // 0 means 50 * (rows + cols)
};

/// minimize c^T x subject to A x <= b, x free.
///
/// Dense two-phase tableau simplex. Free variables are split as x = x+ - x-. Pricing is
/// Dantzig's rule, falling back to Bland's rule after a run of degenerate pivots.
LpResult solve_lp(const Vector& c, const Matrix& A, const Vector& b, const LpOptions& opts = {});

/// Phase one only: a point with A x <= b, or status infeasible.
LpResult find_feasible(const Matrix& A, const Vector& b, const LpOptions& opts = {});

}  // namespace hdinf
