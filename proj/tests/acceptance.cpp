// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fail.
#include "hdinf/covariance.hpp"
#include "hdinf/dataset.hpp"
#include "hdinf/debias.hpp"
#include "hdinf/decorrelate.hpp"
#include "hdinf/experiment.hpp"
#include "hdinf/hypothesis_set.hpp"
#include "hdinf/inference.hpp"
#include "hdinf/normal.hpp"
#include "hdinf/scaled_lasso.hpp"

#include "oracles.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <thread>
#include <vector>

using namespace hdinf;

namespace {

int g_failed = 0;

void report(int id, bool pass, const std::string& name, const std::string& detail, double seconds) {
  std::printf("%s  [%2d] %-32s %s (%.1f s)\n", pass ? "PASS" : "FAIL", id, name.c_str(), detail.c_str(), seconds);
  std::fflush(stdout);
  if (!pass) ++g_failed;
}

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

int threads() { return static_cast<int>(std::max(1u, std::thread::hardware_concurrency())); }

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

Vector uniform(Index p, double a, double b, Engine& eng) {
  std::uniform_real_distribution<double> u(a, b);
  Vector out(p);
  for (Index i = 0; i < p; ++i) out(i) = u(eng);
  return out;
}

Matrix random_spd(Index p, Engine& eng) {
  std::normal_distribution<double> z(0.0, 1.0);
  Matrix A(p + 2, p);
  for (Index i = 0; i < A.rows(); ++i) {
    for (Index j = 0; j < p; ++j) A(i, j) = z(eng);
  }
  return A.transpose() * A / static_cast<double>(A.rows()) + 0.05 * Matrix::Identity(p, p);
}

void betamin_criteria() {
  const auto t0 = std::chrono::steady_clock::now();
  ExperimentConfig cfg = preset_config(Command::table_betamin, Preset::desk);
  cfg.threads = threads();
  const ExperimentReport r = cmd_table_betamin(cfg);
  const double secs = seconds_since(t0);
  const int N = cfg.replicates;
  const double cap = 0.05 + 2.0 * std::sqrt(0.05 * 0.95 / N);

  bool typeI = true;
  std::string d1;
  bool power = true;
  std::string d2;
  for (double rho : cfg.grid.rho) {
    auto rate = [&](double c) {
      const ReportCell* cell = r.find({{"c", c}, {"rho", rho}});
      return cell && cell->valid ? cell->metric("rejection_rate") : std::nan("");
    };
    const double r1 = rate(1.0);
    typeI = typeI && r1 <= cap;
    d1 += "rho=" + fmt("%.1f", rho) + ": " + fmt("%.3f", r1) + "  ";

    const double a = rate(1.1), b = rate(1.3), c = rate(1.5);
    auto band = [&](double x, double y) { return 2.0 * std::max(mc_standard_error(x, N), mc_standard_error(y, N)); };
    const bool mono = b >= a - band(a, b) && c >= b - band(b, c);
    power = power && c >= 0.90 && mono;
    d2 += "rho=" + fmt("%.1f", rho) + ": " + fmt("%.3f", a) + "/" + fmt("%.3f", b) + "/" + fmt("%.3f", c) + "  ";
  }
  report(1, typeI, "type-I control, beta-min c=1", d1 + "(cap " + fmt("%.4f", cap) + ")", secs);
  report(2, power, "power growth, beta-min c=1.1/1.3/1.5", d2 + "(need >= 0.90 at 1.5, monotone)", 0.0);
}

void cone_criterion() {
  const auto t0 = std::chrono::steady_clock::now();
  ExperimentConfig cfg = preset_config(Command::table_cone, Preset::desk);
  cfg.threads = threads();
  const ExperimentReport r = cmd_table_cone(cfg);
  const double cap = 0.05 + 2.0 * std::sqrt(0.05 * 0.95 / cfg.replicates);
  bool pass = true;
  std::string d;
  for (double rho : cfg.grid.rho) {
    const ReportCell* null_cell = r.find({{"b", 0.5}, {"rho", rho}});
    const ReportCell* alt_cell = r.find({{"b", -0.5}, {"rho", rho}});
    const double rn = null_cell && null_cell->valid ? null_cell->metric("rejection_rate") : std::nan("");
    const double ra = alt_cell && alt_cell->valid ? alt_cell->metric("rejection_rate") : std::nan("");
    pass = pass && rn <= cap && ra >= 0.90;
    d += "rho=" + fmt("%.1f", rho) + ": null " + fmt("%.3f", rn) + " alt " + fmt("%.3f", ra) + "  ";
  }
  report(3, pass, "nonnegative cone null/alternative", d, seconds_since(t0));
}

void ci_criteria() {
  const auto t0 = std::chrono::steady_clock::now();
  ExperimentConfig cfg = preset_config(Command::ci_sweep, Preset::desk);
  cfg.threads = threads();
  const ExperimentReport r = cmd_ci_sweep(cfg);
  const double secs = seconds_since(t0);
  const double xi = static_cast<double>(cfg.xi_eigen_indices.front());

  bool cover = true;
  std::string d4;
  std::vector<double> log_n;
  std::vector<double> log_w;
  for (Index n : cfg.grid.n) {
    const ReportCell* cell = r.find({{"xi_index", xi}, {"n", static_cast<double>(n)}});
    const double cov = cell && cell->valid ? cell->metric("coverage") : std::nan("");
    if (n == 400 || n == 800) {
      cover = cover && cov >= 0.91 && cov <= 0.985;
      d4 += "n=" + std::to_string(n) + ": " + fmt("%.3f", cov) + "  ";
    }
    if (cell && cell->metric("mean_width") > 0.0) {
      log_n.push_back(std::log(static_cast<double>(n)));
      log_w.push_back(std::log(cell->metric("mean_width")));
    }
  }
  report(4, cover, "linear CI coverage", d4 + "(need [0.91, 0.985])", secs);
  const double slope = log_n.size() >= 2 ? ls_slope(log_n, log_w) : std::nan("");
  report(5, slope >= -0.6 && slope <= -0.4, "CI width scaling", "slope " + fmt("%.3f", slope) + " (need [-0.6, -0.4])",
         0.0);
}

void decomposition_criterion() {
  const auto t0 = std::chrono::steady_clock::now();
  struct Shape {
    Index n, p, s0;
    double b, rho;
    bool eigen_u;
  };
  const Shape shapes[] = {{200, 300, 5, 1.0, 0.2, false},
                          {200, 300, 5, 1.0, 0.6, false},
                          {200, 300, 5, 0.5, 0.2, false},
                          {200, 300, 5, -0.5, 0.6, false},
                          {400, 600, 10, 0.5, 0.5, true}};
  double worst = 0.0;
  for (int inst = 0; inst < 50; ++inst) {
    const Shape& s = shapes[inst % 5];
    const Vector theta0 = make_signal(s.p, s.s0, s.b, {6000, static_cast<std::uint64_t>(inst)});
    const CovarianceModel model = CovarianceModel::toeplitz(s.p, s.rho);
    const Dataset d = sample_dataset(s.n, model, theta0, 1.0, {6001, static_cast<std::uint64_t>(inst)});
    Subspace U = Subspace::identity(s.p);
    if (s.eigen_u) {
      Eigen::SelfAdjointEigenSolver<Matrix> eig(toeplitz_cov<double>(s.p, s.rho));
      U = Subspace::direction(eig.eigenvectors().col(s.p - 1));
    }
    const ScaledLassoFit fit = fit_scaled_lasso(d, default_lambda(s.n, s.p));
    const Matrix S = d.gram();
    const Decorrelator G = build_decorrelator(S, U, default_mu(s.n, s.p), {}, threads());
    const DebiasedEstimate est = debias(fit, d, S, U, G.G);
    const Decomposition dec = decompose(est, d, fit, U, G.G);
    const Vector lhs = std::sqrt(static_cast<double>(s.n)) * (est.gamma_d - U.U.transpose() * theta0);
    const double err = (dec.Z + dec.Delta - lhs).cwiseAbs().maxCoeff() / (1.0 + est.gamma_d.cwiseAbs().maxCoeff());
    worst = std::max(worst, err);
  }
  report(6, worst <= 1e-9, "Z + Delta decomposition", "max scaled error " + fmt("%.2e", worst) + " (need <= 1e-9)",
         seconds_since(t0));
}

void ols_criterion() {
  const auto t0 = std::chrono::steady_clock::now();
  const Index n = 50;
  const Index p = 10;
  double worst = 0.0;
  double mu_max = 0.0;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const Vector theta0 = make_signal(p, 3, 1.0, {7000, seed});
    const Dataset d = sample_dataset(n, CovarianceModel::toeplitz(p, 0.4), theta0, 1.0, {7001, seed});
    const ScaledLassoFit fit = fit_scaled_lasso(d, default_lambda(n, p));
    const Matrix S = d.gram();
    const Subspace U = Subspace::identity(p);
    QpOptions opts;
    opts.tol_qp = 1e-12;
    opts.max_sweeps = 100000;
    const Decorrelator G = build_decorrelator(S, U, 1e-8, opts);
    mu_max = std::max(mu_max, G.mu_used.maxCoeff());
    const DebiasedEstimate est = debias(fit, d, S, U, G.G);
    // Normal equations by a QR factorization of X.
    const Vector ols = d.X.colPivHouseholderQr().solve(d.y);
    worst = std::max(worst, (est.gamma_d - ols).cwiseAbs().maxCoeff());
  }
  report(7, worst <= 1e-6, "OLS degeneracy at mu=1e-8",
         "max error " + fmt("%.2e", worst) + ", mu used " + fmt("%.1e", mu_max) + " (need <= 1e-6)", seconds_since(t0));
}

void projection_criterion() {
  const auto t0 = std::chrono::steady_clock::now();
  Engine eng = make_engine({8000, 0});
  const double R = 2.0;
  const double steps[] = {0.0, 0.01, 0.01, 0.05, 0.1, 0.25, 0.5};  // grid spacing by p
  double worst_grid = 0.0;
  bool grid_ok = true;
  for (int inst = 0; inst < 100; ++inst) {
    const Index p = 1 + inst % 6;
    const double h = steps[p];
    const Vector gamma = uniform(p, -1.5, 1.5, eng);
    const Vector D = uniform(p, 0.5, 2.0, eng);
    const Subspace U = Subspace::identity(p);
    const HypothesisSet sets[] = {HypothesisSet::beta_min(0.5), HypothesisSet::nonneg_cone(),
                                  HypothesisSet::monotone_cone()};
    for (const HypothesisSet& set : sets) {
      const double T = project(set, gamma, D, U).T_n;
      const double grid =
          oracle::grid_projection(gamma, D, R, h, [&](const Vector& t) { return membership(set, t, 1e-12); });
      const double slack = D.maxCoeff() * h / 2.0;
      grid_ok = grid_ok && T <= grid + 1e-9 && grid <= T + slack + 1e-9;
      worst_grid = std::max(worst_grid, std::abs(grid - T) / slack);
    }
  }
  double worst_lp = 0.0;
  for (int inst = 0; inst < 100; ++inst) {
    const Index p = 1 + inst % 6;
    const Vector gamma = uniform(p, -2.0, 2.0, eng);
    const Vector D = uniform(p, 0.5, 2.0, eng);
    const HypothesisSet cone = HypothesisSet::nonneg_cone();
    const Subspace I = Subspace::identity(p);
    worst_lp = std::max(worst_lp, std::abs(project(cone, gamma, D, I).T_n - project_lp(cone, gamma, D, I).T_n));

    const Vector dir = uniform(p, -1.0, 1.0, eng);
    const Subspace u = Subspace::direction(dir);
    const Vector g1 = gamma.head(1);
    const Vector d1 = D.head(1);
    worst_lp = std::max(worst_lp, std::abs(project(cone, g1, d1, u).T_n - project_lp(cone, g1, d1, u).T_n));

    const HypothesisSet lf = HypothesisSet::linear_functional(dir, gamma(0));
    worst_lp = std::max(worst_lp, std::abs(project(lf, g1, d1, u).T_n - project_lp(lf, g1, d1, u).T_n));
  }
  report(8, grid_ok && worst_lp <= 1e-6, "projection vs grid and LP",
         "grid gap " + fmt("%.2f", worst_grid) + " of resolution, LP gap " + fmt("%.1e", worst_lp), seconds_since(t0));
}

void qp_criterion() {
  const auto t0 = std::chrono::steady_clock::now();
  Engine eng = make_engine({9000, 0});
  std::normal_distribution<double> z(0.0, 1.0);
  double worst = 0.0;
  bool converged = true;
  for (int inst = 0; inst < 100; ++inst) {
    const Index p = 2 + inst % 9;
    const Matrix S = random_spd(p, eng);
    Vector u(p);
    for (Index i = 0; i < p; ++i) u(i) = z(eng);
    u /= u.norm();
    const double mu = std::uniform_real_distribution<double>(0.01, 0.2)(eng);
    const ColumnSolution sol = solve_column(S, u, mu);
    const double ref = oracle::qp_barrier(S, u, mu);
    converged = converged && sol.converged;
    worst = std::max(worst, std::abs(sol.objective - ref) / std::max(std::abs(ref), 1e-12));
  }
  report(9, converged && worst <= 1e-5, "QP vs barrier oracle", "max relative gap " + fmt("%.1e", worst) + " (need <= 1e-5)",
         seconds_since(t0));
}

void power_criterion() {
  const auto t0 = std::chrono::steady_clock::now();
  double at_zero = 0.0;
  for (double a : {0.01, 0.05, 0.1}) at_zero = std::max(at_zero, std::abs(power_F({a, 0.0, 1}) - a));
  bool mono = true;
  for (double a : {0.01, 0.05, 0.1}) {
    for (int i = 0; i <= 60; ++i) {
      const double x = 0.1 * i;
      for (int k = 1; k <= 50; ++k) {
        const double f = power_F({a, x, k});
        if (i > 0) mono = mono && f > power_F({a, x - 0.1, k});
        if (k > 1 && x > 0.0) mono = mono && f < power_F({a, x, k - 1});
      }
    }
  }
  const long double zq = oracle::normal_quantile(0.975L);
  const double ref = static_cast<double>(1.0L - (oracle::normal_cdf(3.0L + zq) - oracle::normal_cdf(3.0L - zq)));
  const double f3 = power_F({0.05, 3.0, 1});
  const bool pass = at_zero <= 1e-9 && mono && std::abs(f3 - 0.8508) <= 1e-3 && std::abs(f3 - ref) <= 1e-9;
  report(10, pass, "power function F",
         "F(a,0,1)-a " + fmt("%.1e", at_zero) + ", monotone " + (mono ? "yes" : "no") + ", F(.05,3,1) " + fmt("%.4f", f3),
         seconds_since(t0));
}

void normality_criterion() {
  const auto t0 = std::chrono::steady_clock::now();
  const Index n = 400;
  const Index p = 100;
  const int reps = 500;
  const Vector theta0 = make_signal(p, 3, 1.0, {11000, 0});
  const CovarianceModel model = CovarianceModel::toeplitz(p, 0.2);
  const Subspace U = Subspace::basis_vector(p, 0);
  PipelineConfig cfg;
  cfg.mode = PipelineMode::fixed_U;
  cfg.fixed_U = U;
  std::vector<double> stat(reps);
  for (int r = 0; r < reps; ++r) {
    const Dataset d = sample_dataset(n, model, theta0, 1.0, {11001, static_cast<std::uint64_t>(r)});
    const DebiasRun run = run_debias(d, U, cfg);
    stat[static_cast<std::size_t>(r)] = run.estimate.D(0) * (run.estimate.gamma_d(0) - theta0(0));
  }
  const double pv = oracle::ks_pvalue_normal(stat);
  report(11, pv >= 0.01, "studentized normality (KS)", "p-value " + fmt("%.3f", pv) + " (need >= 0.01)",
         seconds_since(t0));
}

}  // namespace

int main() {
  const std::vector<std::function<void()>> criteria = {
      betamin_criteria, cone_criterion,       ci_criteria,  decomposition_criterion, ols_criterion,
      projection_criterion, qp_criterion, power_criterion, normality_criterion};
  for (const auto& run : criteria) {
    try {
      run();
    } catch (const std::exception& e) {
      std::printf("FAIL  criterion aborted: %s\n", e.what());
      ++g_failed;
    }
  }
  std::printf("%d criterion check(s) failed\n", g_failed);
  return g_failed == 0 ? 0 : 1;
}
