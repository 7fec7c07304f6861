#include "hdinf/inference.hpp"

#include "hdinf/covariance.hpp"
#include "hdinf/normal.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace hdinf {

double power_F(const PowerQuery& q) {
  if (!(q.alpha > 0.0 && q.alpha < 1.0)) throw DomainError("power_F: alpha must lie in (0,1)");
  if (!(q.x >= 0.0)) throw DomainError("power_F: x must be nonnegative");
  if (q.k < 1) throw DomainError("power_F: k must be >= 1");
  const double z = normal_quantile(1.0 - q.alpha / (2.0 * q.k));
  // Phi(x + z) - Phi(x - z) = sf(x - z) - sf(x + z)
  return 1.0 - q.k * (normal_sf(q.x - z) - normal_sf(q.x + z));
}

double m0(const Matrix& sigma, const Subspace& U) {
  require_dims(sigma.rows() == sigma.cols() && sigma.rows() == U.p(), "m0: dimensions do not conform");
  const Matrix L = cholesky(sigma);
  const Matrix W = L.triangularView<Eigen::Lower>().solve(U.U);  // L^{-1} U
  const double worst = W.colwise().squaredNorm().maxCoeff();     // u^T Sigma^{-1} u
  return std::sqrt(worst + kQRidge);
}

std::pair<std::vector<Index>, std::vector<Index>> split_indices(Index n, const RngSeed& seed) {
  if (n < 4) throw DomainError("split: need n >= 4");
  std::vector<Index> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), Index{0});
  Engine eng = make_engine(seed);
  for (Index i = n - 1; i > 0; --i) {
    std::uniform_int_distribution<Index> pick(0, i);
    std::swap(perm[static_cast<std::size_t>(i)], perm[static_cast<std::size_t>(pick(eng))]);
  }
  const auto first = static_cast<std::ptrdiff_t>(n / 2);
  std::vector<Index> a(perm.begin(), perm.begin() + first);
  std::vector<Index> b(perm.begin() + first, perm.end());
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  return {std::move(a), std::move(b)};
}

std::pair<Dataset, Dataset> split(const Dataset& data, const RngSeed& seed) {
  data.validate();
  auto [a, b] = split_indices(data.n(), seed);
  return {data.subset(a), data.subset(b)};
}

Subspace select_subspace(const HypothesisSet& set, const Vector& theta1) {
  const Index p = theta1.size();
  require_dims(p >= 1, "select_subspace: empty estimate");
  if (!theta1.allFinite()) throw DomainError("select_subspace: estimate is not finite");

  if (const auto* s = set.get<sets::BetaMin>()) {
    Index best = 0;
    double best_gap = -1.0;
    for (Index i = 0; i < p; ++i) {
      const double gap = std::abs(theta1(i) - threshold_S(theta1(i), s->c));
      if (gap > best_gap) {
        best_gap = gap;
        best = i;
      }
    }
    return Subspace::basis_vector(p, best_gap > 0.0 ? best : 0);
  }
  if (const auto* s = set.get<sets::LinearFunctional>()) {
    require_dims(s->xi.size() == p, "select_subspace: xi has wrong length");
    return Subspace::direction(s->xi);
  }
  if (set.get<sets::SqNorm>()) {
    if (theta1.norm() > 0.0) return Subspace::direction(theta1);
    return Subspace::basis_vector(p, 0);
  }
  const Vector residual = theta1 - euclidean_projection(set, theta1);
  if (residual.norm() <= 1e-12 * (1.0 + theta1.norm())) return Subspace::basis_vector(p, 0);
  return Subspace::direction(residual);
}

namespace {

double pick_lambda(const PipelineConfig& cfg, const Dataset& d) {
  return cfg.lambda > 0.0 ? cfg.lambda : default_lambda(d.n(), d.p());
}

double pick_mu(const PipelineConfig& cfg, const Dataset& d) {
  return cfg.mu > 0.0 ? cfg.mu : default_mu(d.n(), d.p());
}

ScaledLassoFit staged_fit(const Dataset& d, const PipelineConfig& cfg, const char* stage) {
  try {
    return fit_scaled_lasso(d, pick_lambda(cfg, d), cfg.lasso);
  } catch (const SolverError&) {
    throw;
  } catch (const std::exception& e) {
    throw SolverError(stage, e.what());
  }
}

}  // namespace

DebiasRun run_debias(const Dataset& data, const Matrix& sigma_hat, const Subspace& U,
                     const Decorrelator& G, const PipelineConfig& cfg) {
  DebiasRun run;
  run.U = U;
  run.mu = G.mu_used.size() ? G.mu_used.maxCoeff() : 0.0;
  run.decorrelator = G;
  run.fit = staged_fit(data, cfg, "scaled_lasso");
  run.estimate = debias(run.fit, data, sigma_hat, U, G.G);
  return run;
}

DebiasRun run_debias(const Dataset& data, const Subspace& U, const PipelineConfig& cfg) {
  data.validate();
  U.validate();
  require_dims(U.p() == data.p(), "run_debias: U must have p rows");
  const Matrix sigma_hat = data.gram();
  const double mu = pick_mu(cfg, data);
  Decorrelator G = build_decorrelator(sigma_hat, U, mu, cfg.qp, cfg.threads);
  DebiasRun run = run_debias(data, sigma_hat, U, G, cfg);
  run.mu = mu;
  return run;
}

TestOutcome decide(const DebiasRun& run, const HypothesisSet& set, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("decide: alpha must lie in (0,1)");
  ProjectionResult proj;
  try {
    proj = project(set, run.estimate.gamma_d, run.estimate.D, run.U);
  } catch (const SolverError&) {
    throw;
  } catch (const UnsupportedProjection&) {
    throw;
  } catch (const std::exception& e) {
    throw SolverError("project", e.what());
  }
  TestOutcome out;
  out.k = run.U.k();
  out.alpha = alpha;
  out.T_n = proj.T_n;
  out.threshold = normal_quantile(1.0 - alpha / (2.0 * static_cast<double>(out.k)));
  out.reject = out.T_n >= out.threshold;
  out.mu_used = run.decorrelator.mu_used;
  out.sigma_hat = run.estimate.sigma_hat;
  out.theta_p = std::move(proj.theta_p);
  out.exact = proj.exact;
  return out;
}

TestOutcome run_test(const Dataset& data, const HypothesisSet& set, double alpha, const PipelineConfig& cfg) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("run_test: alpha must lie in (0,1)");
  data.validate();
  if (cfg.mode == PipelineMode::fixed_U) {
    const Subspace U = cfg.fixed_U ? *cfg.fixed_U : Subspace::identity(data.p());
    return decide(run_debias(data, U, cfg), set, alpha);
  }
  auto [first, second] = split(data, cfg.split_seed);
  const ScaledLassoFit pilot = staged_fit(first, cfg, "pilot_scaled_lasso");
  const Subspace U = select_subspace(set, pilot.theta_hat);
  return decide(run_debias(second, U, cfg), set, alpha);
}

LinearCiContext prepare_ci_linear(const Matrix& X, const Vector& xi, const PipelineConfig& cfg) {
  require_dims(xi.size() == X.cols(), "ci_linear: xi must have length p");
  if (!(xi.norm() > 0.0)) throw DomainError("ci_linear: xi must be nonzero");
  LinearCiContext ctx;
  ctx.xi = xi;
  ctx.U = Subspace::direction(xi);
  ctx.sigma_hat = (X.transpose() * X) / static_cast<double>(X.rows());
  const double mu = cfg.mu > 0.0 ? cfg.mu : default_mu(X.rows(), X.cols());
  ctx.G = build_decorrelator(ctx.sigma_hat, ctx.U, mu, cfg.qp, cfg.threads);
  return ctx;
}

ConfidenceInterval ci_linear(const LinearCiContext& ctx, const Dataset& data, double alpha,
                             const PipelineConfig& cfg) {
  return ci_linear(ctx, data, staged_fit(data, cfg, "scaled_lasso"), alpha);
}

ConfidenceInterval ci_linear(const LinearCiContext& ctx, const Dataset& data, const ScaledLassoFit& fit,
                             double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("ci_linear: alpha must lie in (0,1)");
  const DebiasedEstimate est = debias(fit, data, ctx.sigma_hat, ctx.U, ctx.G.G);
  const double xi_norm = ctx.xi.norm();
  const double spread = fit.sigma_hat / std::sqrt(static_cast<double>(data.n())) *
                        std::sqrt(ctx.G.objective(0)) * z_value(alpha / 2.0);
  const double center = est.gamma_d(0);
  ConfidenceInterval ci;
  ci.level = 1.0 - alpha;
  ci.lo = xi_norm * (center - spread);
  ci.hi = xi_norm * (center + spread);
  return ci;
}

ConfidenceInterval ci_linear(const Dataset& data, const Vector& xi, double alpha, const PipelineConfig& cfg) {
  data.validate();
  const LinearCiContext ctx = prepare_ci_linear(data.X, xi, cfg);
  return ci_linear(ctx, data, alpha, cfg);
}

ConfidenceInterval sq_norm_interval(double m, double L, double delta, double level) {
  ConfidenceInterval ci;
  ci.level = level;
  // Roots of |m - c| <= L + 2 delta sqrt(c) in sqrt(c).
  const double lower_root = std::max(std::sqrt(std::max(m - L + delta * delta, 0.0)) - delta, 0.0);
  const double upper_root = std::sqrt(std::max(m + L + delta * delta, 0.0)) + delta;
  ci.lo = lower_root * lower_root;
  ci.hi = upper_root * upper_root;
  ci.note = "lower endpoint uses the -L root and -delta";
  return ci;
}

ConfidenceInterval ci_sqnorm(const Dataset& data, double alpha, double s0, double A_n,
                             const PipelineConfig& cfg) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("ci_sqnorm: alpha must lie in (0,1)");
  if (!(A_n > 0.0)) throw DomainError("ci_sqnorm: A_n must be positive");
  if (!(s0 >= 0.0)) throw DomainError("ci_sqnorm: s0 must be nonnegative");
  data.validate();
  auto [first, second] = split(data, cfg.split_seed);
  const double p = static_cast<double>(data.p());
  const double delta = A_n * std::sqrt(s0 * std::log(p) / static_cast<double>(first.n()));

  const ScaledLassoFit pilot = staged_fit(first, cfg, "pilot_scaled_lasso");
  const double pilot_norm = pilot.theta_hat.norm();
  if (!(pilot_norm > 0.0)) {
    ConfidenceInterval ci;
    ci.level = 1.0 - alpha;
    ci.lo = 0.0;
    ci.hi = delta * delta;
    ci.degenerate = true;
    ci.note = "pilot estimate is zero";
    return ci;
  }
  const Subspace U = Subspace::direction(pilot.theta_hat);
  const DebiasRun run = run_debias(second, U, cfg);
  const double m = pilot_norm * run.estimate.gamma_d(0);
  const double L = pilot_norm * run.fit.sigma_hat / std::sqrt(static_cast<double>(second.n())) *
                   std::sqrt(run.decorrelator.objective(0)) * z_value(alpha / 2.0);
  return sq_norm_interval(m, L, delta, 1.0 - alpha);
}

double coverage(const std::vector<ConfidenceInterval>& intervals, double truth) {
  if (intervals.empty()) throw std::invalid_argument("coverage: no intervals");
  const auto hits = std::count_if(intervals.begin(), intervals.end(),
                                  [truth](const ConfidenceInterval& ci) { return ci.contains(truth); });
  return static_cast<double>(hits) / static_cast<double>(intervals.size());
}

}  // namespace hdinf
