#pragma once

#include "hdinf/common.hpp"
#include "hdinf/dataset.hpp"
#include "hdinf/debias.hpp"
#include "hdinf/decorrelate.hpp"
#include "hdinf/hypothesis_set.hpp"
#include "hdinf/rng.hpp"
#include "hdinf/scaled_lasso.hpp"

#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace hdinf {

// ---------------------------------------------------------------------------
// Power lower bound

struct PowerQuery {
  double alpha = 0.05;
  double x = 0.0;  // sqrt(n) eta / (sigma_hat m0)
  int k = 1;
};

/// F(alpha, x, k) = 1 - k [Phi(x + z) - Phi(x - z)], z = Phi^{-1}(1 - alpha / (2k)).
/// Evaluated through upper tails so values near 1 keep their precision. For k >= 2 the
/// bound can fall below alpha (even below 0) at small x; it is returned unclamped.
double power_F(const PowerQuery& q);

/// max_i sqrt(u_i^T Sigma^{-1} u_i + 1e-4), via a Cholesky solve. Throws NotSpdError.
double m0(const Matrix& sigma, const Subspace& U);

// ---------------------------------------------------------------------------
// Pipeline

enum class PipelineMode { split, fixed_U };

struct PipelineConfig {
  PipelineMode mode = PipelineMode::split;
  std::optional<Subspace> fixed_U;  // required for fixed_U mode; identity if absent
  double lambda = 0.0;              // 0 selects default_lambda(n, p) of the fitted sample
  double mu = 0.0;                  // 0 selects default_mu(n, p) of the debiasing sample
  ScaledLassoOptions lasso;
  QpOptions qp;
  RngSeed split_seed{};
  int threads = 1;  // columns of the decorrelator solved concurrently
};

/// Disjoint halves of sizes floor(n/2) and ceil(n/2); uniform random partition.
std::pair<Dataset, Dataset> split(const Dataset& data, const RngSeed& seed);

/// Index sets behind split(), first half then second half.
std::pair<std::vector<Index>, std::vector<Index>> split_indices(Index n, const RngSeed& seed);

/// One-dimensional direction maximizing the power bound for the set, given a pilot estimate:
/// the normalized residual theta1 - P(theta1) for convex sets (xi / |xi| for a linear
/// functional), e_{i*} with i* = argmax |theta1_i - S(theta1_i, c)| for beta_min (smallest
/// index on ties), theta1 / |theta1| for sq_norm. Falls back to e_1 when the residual is zero.
Subspace select_subspace(const HypothesisSet& set, const Vector& theta1);

/// Everything computed on the debiasing sample.
struct DebiasRun {
  ScaledLassoFit fit;
  Decorrelator decorrelator;
  DebiasedEstimate estimate;
  Subspace U;
  double mu = 0.0;
};

/// Scaled Lasso, decorrelator and debiased estimate for a fixed U on `data`.
DebiasRun run_debias(const Dataset& data, const Subspace& U, const PipelineConfig& cfg);

/// Same, reusing a precomputed Gram matrix and decorrelator (fixed design, new noise).
DebiasRun run_debias(const Dataset& data, const Matrix& sigma_hat, const Subspace& U,
                     const Decorrelator& G, const PipelineConfig& cfg);

struct TestOutcome {
  double T_n = 0.0;
  double threshold = 0.0;  // z_{alpha / (2k)}
  bool reject = false;
  double alpha = 0.05;
  Index k = 1;
  Vector mu_used;
  double sigma_hat = 0.0;
  std::optional<Vector> theta_p;
  bool exact = false;
};

/// Threshold comparison on an existing estimate; reject iff T_n >= z_{alpha/(2k)}.
TestOutcome decide(const DebiasRun& run, const HypothesisSet& set, double alpha);

/// Split mode: pilot fit on the first half, subspace selection, debiasing on the second.
/// fixed_U mode: debias the full sample against cfg.fixed_U (identity when unset).
/// Failures surface as SolverError carrying the stage name.
TestOutcome run_test(const Dataset& data, const HypothesisSet& set, double alpha, const PipelineConfig& cfg);

// ---------------------------------------------------------------------------
// Confidence intervals

struct ConfidenceInterval {
  double lo = 0.0;
  double hi = 0.0;
  double level = 0.95;
  bool degenerate = false;
  std::string note;

  double width() const { return hi - lo; }
  bool contains(double v) const { return lo <= v && v <= hi; }
};

/// Interval for xi^T theta0: |xi| (gamma_d -/+ (sigma_hat / sqrt(n)) sqrt(g^T Sigma_hat g) z_{alpha/2})
/// with u = xi / |xi| on the full sample (no split).
ConfidenceInterval ci_linear(const Dataset& data, const Vector& xi, double alpha, const PipelineConfig& cfg);

/// Reusable design-side state for repeated linear intervals on a fixed X.
struct LinearCiContext {
  Vector xi;
  Subspace U;
  Matrix sigma_hat;
  Decorrelator G;
};

LinearCiContext prepare_ci_linear(const Matrix& X, const Vector& xi, const PipelineConfig& cfg);
ConfidenceInterval ci_linear(const LinearCiContext& ctx, const Dataset& data, double alpha,
                             const PipelineConfig& cfg);
/// Same, with a scaled Lasso fit on `data` supplied by the caller.
ConfidenceInterval ci_linear(const LinearCiContext& ctx, const Dataset& data, const ScaledLassoFit& fit,
                             double alpha);

/// Endpoints for |theta0|^2 given m = |theta1| gamma_d, half-width L and slack delta:
/// lo = ((sqrt((m - L + delta^2)_+) - delta)_+)^2, hi = (sqrt((m + L + delta^2)_+) + delta)^2.
ConfidenceInterval sq_norm_interval(double m, double L, double delta, double level);

/// Interval for |theta0|^2 via a split: u = theta1 / |theta1| from the first half, debiased
/// on the second; delta = A_n sqrt(s0 log p / n1). A zero pilot estimate yields the
/// degenerate interval [0, delta^2].
ConfidenceInterval ci_sqnorm(const Dataset& data, double alpha, double s0, double A_n,
                             const PipelineConfig& cfg);

/// Fraction of intervals containing `truth`, endpoints included. Throws on an empty list.
double coverage(const std::vector<ConfidenceInterval>& intervals, double truth);

}  // namespace hdinf
