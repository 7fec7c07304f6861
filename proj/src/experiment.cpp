#include "hdinf/experiment.hpp"

#include "hdinf/covariance.hpp"
#include "hdinf/normal.hpp"
#include "hdinf/parallel.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <random>
#include <sstream>

namespace hdinf {

namespace {

constexpr const char* kVersion = "hdinf 0.1.0";
// Stream indices at or above this value are reserved for per-cell designs and the
// real-data xi, so they never collide with replicate streams.
constexpr std::uint64_t kReservedStreams = 1ULL << 62;

}  // namespace

Command command_from_string(const std::string& s) {
  if (s == "table-betamin") return Command::table_betamin;
  if (s == "table-cone") return Command::table_cone;
  if (s == "ci-sweep") return Command::ci_sweep;
  if (s == "real-data") return Command::real_data;
  throw ConfigError("unknown command '" + s + "'");
}

std::string to_string(Command c) {
  switch (c) {
    case Command::table_betamin: return "table-betamin";
    case Command::table_cone: return "table-cone";
    case Command::ci_sweep: return "ci-sweep";
    case Command::real_data: return "real-data";
  }
  return "unknown";
}

Preset preset_from_string(const std::string& s) {
  if (s == "desk") return Preset::desk;
  if (s == "paper") return Preset::paper;
  throw ConfigError("unknown preset '" + s + "' (expected desk or paper)");
}

ExperimentConfig preset_config(Command cmd, Preset preset) {
  ExperimentConfig cfg;
  const bool paper = preset == Preset::paper;
  switch (cmd) {
    case Command::table_betamin:
      cfg.n = paper ? 600 : 200;
      cfg.p = paper ? 1000 : 300;
      cfg.s0 = paper ? 10 : 5;
      cfg.b = 1.0;
      cfg.replicates = paper ? 100 : 200;
      cfg.set = {{"type", "beta_min"}, {"c", 1.0}};
      cfg.pipeline = PipelineMode::fixed_U;
      cfg.grid.c = {0.6, 0.7, 0.8, 0.9, 1.0, 1.1, 1.2, 1.3, 1.4, 1.5};
      cfg.grid.rho = paper ? std::vector<double>{0.2, 0.4, 0.6, 0.8} : std::vector<double>{0.2, 0.6};
      break;
    case Command::table_cone:
      cfg.n = paper ? 600 : 200;
      cfg.p = paper ? 1000 : 300;
      cfg.s0 = paper ? 10 : 5;
      cfg.replicates = paper ? 300 : 200;
      cfg.set = {{"type", "nonneg_cone"}};
      cfg.pipeline = PipelineMode::fixed_U;
      cfg.grid.b = paper ? std::vector<double>{1.0, 0.8, 0.6, 0.4, 0.2, -0.2, -0.4, -0.6, -0.8, -1.0}
                         : std::vector<double>{0.5, -0.5};
      cfg.grid.rho = paper ? std::vector<double>{0.2, 0.4, 0.6, 0.8} : std::vector<double>{0.2, 0.6};
      break;
    case Command::ci_sweep:
      cfg.p = paper ? 3000 : 600;
      cfg.s0 = paper ? 30 : 10;
      cfg.b = 0.5;
      cfg.rho = 0.5;
      cfg.replicates = 300;
      cfg.set = {{"type", "linear_functional"}};
      cfg.pipeline = PipelineMode::fixed_U;
      if (paper) {
        for (Index n = 1000; n <= 2600; n += 200) cfg.grid.n.push_back(n);
        cfg.xi_eigen_indices = {0, 749, 1499, 2249, 2999};
      } else {
        cfg.grid.n = {400, 800, 1600};
        cfg.xi_eigen_indices = {0};
      }
      cfg.n = cfg.grid.n.front();
      cfg.mu_shrink_steps = 12;
      break;
    case Command::real_data:
      cfg.replicates = 100;
      cfg.set = {{"type", "linear_functional"}};
      cfg.grid.sigma = {1.0, 5.0, 10.0};
      cfg.mu_shrink_steps = 12;
      break;
  }
  return cfg;
}

namespace {

template <typename T>
std::vector<T> list_field(const nlohmann::json& j, const char* key) {
  try {
    return j.at(key).get<std::vector<T>>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config field '") + key + "': " + e.what());
  }
}

template <typename T>
T scalar_field(const nlohmann::json& j, const char* key) {
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config field '") + key + "': " + e.what());
  }
}

}  // namespace

void apply_json(ExperimentConfig& cfg, const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (key == "n") cfg.n = scalar_field<Index>(j, "n");
    else if (key == "p") cfg.p = scalar_field<Index>(j, "p");
    else if (key == "s0") cfg.s0 = scalar_field<Index>(j, "s0");
    else if (key == "b") cfg.b = scalar_field<double>(j, "b");
    else if (key == "rho") cfg.rho = scalar_field<double>(j, "rho");
    else if (key == "sigma") cfg.sigma = scalar_field<double>(j, "sigma");
    else if (key == "alpha") cfg.alpha = scalar_field<double>(j, "alpha");
    else if (key == "replicates") cfg.replicates = scalar_field<int>(j, "replicates");
    else if (key == "base_seed") cfg.base_seed = scalar_field<std::uint64_t>(j, "base_seed");
    else if (key == "set") cfg.set = value;
    else if (key == "pipeline") {
      const auto mode = value.is_object() ? scalar_field<std::string>(value, "mode") : value.get<std::string>();
      if (mode == "split") cfg.pipeline = PipelineMode::split;
      else if (mode == "fixed_U") cfg.pipeline = PipelineMode::fixed_U;
      else throw ConfigError("pipeline must be 'split' or 'fixed_U'");
    } else if (key == "grid") {
      if (!value.is_object()) throw ConfigError("grid must be an object");
      for (const auto& [gk, gv] : value.items()) {
        if (gk == "c") cfg.grid.c = list_field<double>(value, "c");
        else if (gk == "rho") cfg.grid.rho = list_field<double>(value, "rho");
        else if (gk == "n") cfg.grid.n = list_field<Index>(value, "n");
        else if (gk == "b") cfg.grid.b = list_field<double>(value, "b");
        else if (gk == "sigma") cfg.grid.sigma = list_field<double>(value, "sigma");
        else throw ConfigError("unknown grid field '" + gk + "'");
      }
    } else if (key == "lambda") cfg.lambda = scalar_field<double>(j, "lambda");
    else if (key == "mu") cfg.mu = scalar_field<double>(j, "mu");
    else if (key == "mu_shrink_steps") cfg.mu_shrink_steps = scalar_field<int>(j, "mu_shrink_steps");
    else if (key == "xi_eigen_indices") cfg.xi_eigen_indices = list_field<Index>(j, "xi_eigen_indices");
    else if (key == "A_n") cfg.A_n = scalar_field<double>(j, "A_n");
    else if (key == "s0_ci") cfg.s0_ci = scalar_field<double>(j, "s0_ci");
    else if (key == "standardize") cfg.standardize = scalar_field<bool>(j, "standardize");
    else if (key == "threads") cfg.threads = scalar_field<int>(j, "threads");
    else throw ConfigError("unknown config field '" + key + "'");
  }
}

nlohmann::json to_json(const ExperimentConfig& cfg) {
  nlohmann::json j;
  j["n"] = cfg.n;
  j["p"] = cfg.p;
  j["s0"] = cfg.s0;
  j["b"] = cfg.b;
  j["rho"] = cfg.rho;
  j["sigma"] = cfg.sigma;
  j["alpha"] = cfg.alpha;
  j["replicates"] = cfg.replicates;
  j["base_seed"] = cfg.base_seed;
  j["set"] = cfg.set;
  j["pipeline"] = cfg.pipeline == PipelineMode::split ? "split" : "fixed_U";
  j["grid"] = {{"c", cfg.grid.c}, {"rho", cfg.grid.rho}, {"n", cfg.grid.n}, {"b", cfg.grid.b},
               {"sigma", cfg.grid.sigma}};
  j["lambda"] = cfg.lambda;
  j["mu"] = cfg.mu;
  j["mu_shrink_steps"] = cfg.mu_shrink_steps;
  j["xi_eigen_indices"] = cfg.xi_eigen_indices;
  j["A_n"] = cfg.A_n;
  j["s0_ci"] = cfg.s0_ci;
  j["standardize"] = cfg.standardize;
  return j;
}

void validate(const ExperimentConfig& cfg, Command cmd) {
  auto need = [](bool ok, const std::string& what) {
    if (!ok) throw ConfigError(what);
  };
  need(cfg.replicates >= 1, "replicates must be >= 1");
  need(cfg.alpha > 0.0 && cfg.alpha < 1.0, "alpha must lie in (0,1)");
  need(cfg.sigma >= 0.0, "sigma must be nonnegative");
  need(cfg.threads >= 1, "threads must be >= 1");
  need(cfg.lambda >= 0.0 && cfg.mu >= 0.0, "lambda and mu must be nonnegative (0 = default)");
  need(cfg.mu_shrink_steps >= 0, "mu_shrink_steps must be nonnegative");
  std::string set_type;
  if (cfg.set.is_object() && cfg.set.contains("type") && cfg.set["type"].is_string()) {
    set_type = cfg.set["type"].get<std::string>();
  }
  auto check_rho = [&](const std::vector<double>& rhos) {
    for (double r : rhos) need(std::abs(r) < 1.0, "every rho must satisfy |rho| < 1");
  };
  if (cmd != Command::real_data) {
    need(cfg.p >= 2, "p must be >= 2");
    need(cfg.s0 >= 0 && cfg.s0 <= cfg.p, "s0 must lie in [0, p]");
  }
  switch (cmd) {
    case Command::table_betamin:
      need(set_type == "beta_min", "table-betamin requires set.type = beta_min");
      need(!cfg.grid.c.empty() && !cfg.grid.rho.empty(), "table-betamin needs nonempty grid.c and grid.rho");
      for (double c : cfg.grid.c) need(c > 0.0, "every c must be positive");
      check_rho(cfg.grid.rho);
      need(cfg.n >= (cfg.pipeline == PipelineMode::split ? 4 : 2), "n too small");
      break;
    case Command::table_cone:
      need(set_type == "nonneg_cone", "table-cone requires set.type = nonneg_cone");
      need(!cfg.grid.b.empty() && !cfg.grid.rho.empty(), "table-cone needs nonempty grid.b and grid.rho");
      check_rho(cfg.grid.rho);
      need(cfg.n >= (cfg.pipeline == PipelineMode::split ? 4 : 2), "n too small");
      break;
    case Command::ci_sweep:
      need(set_type.empty() || set_type == "linear_functional", "ci-sweep requires set.type = linear_functional");
      need(!cfg.grid.n.empty() && !cfg.xi_eigen_indices.empty(), "ci-sweep needs nonempty grid.n and xi_eigen_indices");
      for (Index n : cfg.grid.n) need(n >= 2, "every n must be >= 2");
      for (Index i : cfg.xi_eigen_indices) need(i >= 0 && i < cfg.p, "xi_eigen_indices must lie in [0, p)");
      check_rho({cfg.rho});
      break;
    case Command::real_data:
      need(!cfg.grid.sigma.empty(), "real-data needs a nonempty grid.sigma");
      for (double s : cfg.grid.sigma) need(s > 0.0, "every sigma must be positive");
      need(cfg.A_n >= 0.0 && cfg.s0_ci >= 0.0, "A_n and s0_ci must be nonnegative (0 = default)");
      break;
  }
}

double ReportCell::param(const std::string& name) const {
  for (const auto& [k, v] : params) {
    if (k == name) return v;
  }
  throw std::out_of_range("ReportCell: no parameter '" + name + "'");
}

double ReportCell::metric(const std::string& name) const {
  for (const auto& [k, v] : metrics) {
    if (k == name) return v;
  }
  throw std::out_of_range("ReportCell: no metric '" + name + "'");
}

bool ExperimentReport::failure_budget_exceeded() const {
  return std::any_of(cells.begin(), cells.end(), [](const ReportCell& c) { return !c.valid; });
}

const ReportCell* ExperimentReport::find(const std::vector<std::pair<std::string, double>>& where) const {
  for (const auto& cell : cells) {
    bool ok = true;
    for (const auto& [k, v] : where) {
      bool hit = false;
      for (const auto& [ck, cv] : cell.params) {
        if (ck == k && std::abs(cv - v) <= 1e-12 * (1.0 + std::abs(v))) hit = true;
      }
      ok = ok && hit;
    }
    if (ok) return &cell;
  }
  return nullptr;
}

double mc_standard_error(double rate, int n) {
  if (n <= 0) return 0.0;
  return std::sqrt(std::max(rate * (1.0 - rate), 0.0) / static_cast<double>(n));
}

RngSeed replicate_seed(const ExperimentConfig& cfg, std::size_t cell, int rep) {
  return {cfg.base_seed, static_cast<std::uint64_t>(cell) * static_cast<std::uint64_t>(cfg.replicates) +
                             static_cast<std::uint64_t>(rep)};
}

double ls_slope(const std::vector<double>& x, const std::vector<double>& y) {
  require_dims(x.size() == y.size() && x.size() >= 2, "ls_slope: need two or more paired points");
  const double k = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / k;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / k;
  double sxy = 0.0;
  double sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  if (!(sxx > 0.0)) throw DomainError("ls_slope: x values are all equal");
  return sxy / sxx;
}

namespace {

PipelineConfig pipeline_for(const ExperimentConfig& cfg) {
  PipelineConfig pc;
  pc.mode = cfg.pipeline;
  pc.lambda = cfg.lambda;
  pc.mu = cfg.mu;
  pc.qp.shrink_steps = cfg.mu_shrink_steps;
  pc.lasso.standardize = cfg.standardize;
  return pc;
}

// Per-replicate outcome: 1 reject / covered, 0 not, -1 failed.
using Outcomes = std::vector<signed char>;

ReportCell rate_cell(std::vector<std::pair<std::string, double>> params, const std::vector<Outcomes>& jobs,
                     std::size_t first_job, int replicates, std::size_t slot, const char* rate_name) {
  ReportCell cell;
  cell.params = std::move(params);
  cell.replicates = replicates;
  int hits = 0;
  for (int r = 0; r < replicates; ++r) {
    const signed char v = jobs[first_job + static_cast<std::size_t>(r)][slot];
    if (v < 0) ++cell.failures;
    else hits += v;
  }
  const int ok = replicates - cell.failures;
  const double rate = ok > 0 ? static_cast<double>(hits) / ok : 0.0;
  cell.metrics = {{rate_name, rate}, {"se", mc_standard_error(rate, ok)}};
  cell.valid = ok > 0 && cell.failures <= kMaxFailureFraction * replicates;
  return cell;
}

Matrix factor_for(Index p, double rho) {
  return rho == 0.0 ? Matrix(Matrix::Identity(p, p)) : cholesky(toeplitz_cov<double>(p, rho));
}

Dataset with_noise(const Matrix& X, const Vector& theta0, double sigma, const RngSeed& seed) {
  Engine eng = make_engine(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Dataset d;
  d.X = X;
  d.y = X * theta0;
  for (Index i = 0; i < d.y.size(); ++i) d.y(i) += sigma * normal(eng);
  d.truth = Truth{theta0, sigma};
  return d;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

ExperimentReport cmd_table_betamin(const ExperimentConfig& cfg) {
  validate(cfg, Command::table_betamin);
  const auto t0 = std::chrono::steady_clock::now();
  const auto& cs = cfg.grid.c;
  const auto& rhos = cfg.grid.rho;
  std::vector<HypothesisSet> sets;
  for (double c : cs) sets.push_back(HypothesisSet::beta_min(c));
  std::vector<Matrix> factors;
  for (double rho : rhos) factors.push_back(factor_for(cfg.p, rho));

  const std::size_t reps = static_cast<std::size_t>(cfg.replicates);
  std::vector<Outcomes> jobs(rhos.size() * reps, Outcomes(cs.size(), -1));
  parallel_for(jobs.size(), cfg.threads, [&](std::size_t job) {
    const std::size_t r = job / reps;
    const int rep = static_cast<int>(job % reps);
    const RngSeed seed = replicate_seed(cfg, r, rep);
    PipelineConfig pc = pipeline_for(cfg);
    pc.split_seed = seed.child(2);
    try {
      const Vector theta0 = make_signal(cfg.p, cfg.s0, cfg.b, seed.child(0));
      const Dataset data = sample_dataset(cfg.n, factors[r], theta0, cfg.sigma, seed.child(1));
      if (cfg.pipeline == PipelineMode::fixed_U) {
        const DebiasRun run = run_debias(data, Subspace::identity(cfg.p), pc);
        for (std::size_t ci = 0; ci < cs.size(); ++ci) jobs[job][ci] = decide(run, sets[ci], cfg.alpha).reject;
      } else {
        for (std::size_t ci = 0; ci < cs.size(); ++ci) {
          try {
            jobs[job][ci] = run_test(data, sets[ci], cfg.alpha, pc).reject;
          } catch (const std::exception&) {
            jobs[job][ci] = -1;
          }
        }
      }
    } catch (const std::exception&) {
      std::fill(jobs[job].begin(), jobs[job].end(), -1);
    }
  });

  ExperimentReport report;
  report.command = Command::table_betamin;
  report.config = to_json(cfg);
  for (std::size_t ci = 0; ci < cs.size(); ++ci) {
    for (std::size_t r = 0; r < rhos.size(); ++r) {
      report.cells.push_back(
          rate_cell({{"c", cs[ci]}, {"rho", rhos[r]}}, jobs, r * reps, cfg.replicates, ci, "rejection_rate"));
    }
  }
  report.elapsed_seconds = seconds_since(t0);
  return report;
}

ExperimentReport cmd_table_cone(const ExperimentConfig& cfg) {
  validate(cfg, Command::table_cone);
  const auto t0 = std::chrono::steady_clock::now();
  const auto& bs = cfg.grid.b;
  const auto& rhos = cfg.grid.rho;
  const HypothesisSet set = HypothesisSet::nonneg_cone();
  std::vector<Matrix> factors;
  for (double rho : rhos) factors.push_back(factor_for(cfg.p, rho));

  const std::size_t reps = static_cast<std::size_t>(cfg.replicates);
  const std::size_t cells = bs.size() * rhos.size();
  std::vector<Outcomes> jobs(cells * reps, Outcomes(1, -1));
  parallel_for(jobs.size(), cfg.threads, [&](std::size_t job) {
    const std::size_t cell = job / reps;
    const std::size_t bi = cell / rhos.size();
    const std::size_t r = cell % rhos.size();
    const int rep = static_cast<int>(job % reps);
    const RngSeed seed = replicate_seed(cfg, cell, rep);
    PipelineConfig pc = pipeline_for(cfg);
    pc.split_seed = seed.child(2);
    try {
      const Vector theta0 = make_signal(cfg.p, cfg.s0, bs[bi], seed.child(0));
      const Dataset data = sample_dataset(cfg.n, factors[r], theta0, cfg.sigma, seed.child(1));
      jobs[job][0] = run_test(data, set, cfg.alpha, pc).reject;
    } catch (const std::exception&) {
      jobs[job][0] = -1;
    }
  });

  ExperimentReport report;
  report.command = Command::table_cone;
  report.config = to_json(cfg);
  for (std::size_t bi = 0; bi < bs.size(); ++bi) {
    for (std::size_t r = 0; r < rhos.size(); ++r) {
      const std::size_t cell = bi * rhos.size() + r;
      report.cells.push_back(
          rate_cell({{"b", bs[bi]}, {"rho", rhos[r]}}, jobs, cell * reps, cfg.replicates, 0, "rejection_rate"));
    }
  }
  report.elapsed_seconds = seconds_since(t0);
  return report;
}

ExperimentReport cmd_ci_sweep(const ExperimentConfig& cfg) {
  validate(cfg, Command::ci_sweep);
  const auto t0 = std::chrono::steady_clock::now();
  const Matrix sigma = toeplitz_cov<double>(cfg.p, cfg.rho);
  const Matrix L = cholesky(sigma);
  Eigen::SelfAdjointEigenSolver<Matrix> eig(sigma);
  std::vector<Vector> xis;
  for (Index idx : cfg.xi_eigen_indices) xis.push_back(eig.eigenvectors().col(cfg.p - 1 - idx));

  const auto& ns = cfg.grid.n;
  const std::size_t reps = static_cast<std::size_t>(cfg.replicates);
  const PipelineConfig pc = pipeline_for(cfg);

  // One design and signal per n; the decorrelator for each xi depends on X only.
  struct Design {
    Matrix X;
    Vector theta0;
    std::vector<std::optional<LinearCiContext>> contexts;
  };
  std::vector<Design> designs(ns.size());
  for (std::size_t ni = 0; ni < ns.size(); ++ni) {
    const RngSeed ds{cfg.base_seed, kReservedStreams + ni};
    designs[ni].theta0 = make_signal(cfg.p, cfg.s0, cfg.b, ds.child(0));
    designs[ni].X = sample_dataset(ns[ni], L, designs[ni].theta0, 0.0, ds.child(1)).X;
    designs[ni].contexts.resize(xis.size());
  }
  parallel_for(ns.size() * xis.size(), cfg.threads, [&](std::size_t job) {
    const std::size_t ni = job / xis.size();
    const std::size_t xi = job % xis.size();
    try {
      designs[ni].contexts[xi] = prepare_ci_linear(designs[ni].X, xis[xi], pc);
    } catch (const std::exception&) {
      designs[ni].contexts[xi].reset();
    }
  });

  std::vector<Outcomes> covered(ns.size() * reps, Outcomes(xis.size(), -1));
  std::vector<std::vector<double>> widths(ns.size() * reps, std::vector<double>(xis.size(), 0.0));
  parallel_for(covered.size(), cfg.threads, [&](std::size_t job) {
    const std::size_t ni = job / reps;
    const int rep = static_cast<int>(job % reps);
    const Design& design = designs[ni];
    try {
      const Dataset data = with_noise(design.X, design.theta0, cfg.sigma, replicate_seed(cfg, ni, rep));
      const double lambda = cfg.lambda > 0.0 ? cfg.lambda : default_lambda(data.n(), data.p());
      const ScaledLassoFit fit = fit_scaled_lasso(data, lambda, pc.lasso);
      for (std::size_t xi = 0; xi < xis.size(); ++xi) {
        if (!design.contexts[xi]) continue;
        const ConfidenceInterval ci = ci_linear(*design.contexts[xi], data, fit, cfg.alpha);
        covered[job][xi] = ci.contains(xis[xi].dot(design.theta0));
        widths[job][xi] = ci.width();
      }
    } catch (const std::exception&) {
      std::fill(covered[job].begin(), covered[job].end(), -1);
    }
  });

  ExperimentReport report;
  report.command = Command::ci_sweep;
  report.config = to_json(cfg);
  nlohmann::json slopes = nlohmann::json::array();
  for (std::size_t xi = 0; xi < xis.size(); ++xi) {
    std::vector<double> log_n;
    std::vector<double> log_w;
    for (std::size_t ni = 0; ni < ns.size(); ++ni) {
      const double truth = xis[xi].dot(designs[ni].theta0);
      ReportCell cell = rate_cell({{"xi_index", static_cast<double>(cfg.xi_eigen_indices[xi])},
                                   {"n", static_cast<double>(ns[ni])}},
                                  covered, ni * reps, cfg.replicates, xi, "coverage");
      double wsum = 0.0;
      for (std::size_t r = 0; r < reps; ++r) {
        if (covered[ni * reps + r][xi] >= 0) wsum += widths[ni * reps + r][xi];
      }
      const int ok = cfg.replicates - cell.failures;
      const double mean_width = ok > 0 ? wsum / ok : 0.0;
      cell.metrics.emplace_back("mean_width", mean_width);
      cell.metrics.emplace_back("truth", truth);
      if (ok > 0 && mean_width > 0.0) {
        log_n.push_back(std::log(static_cast<double>(ns[ni])));
        log_w.push_back(std::log(mean_width));
      }
      report.cells.push_back(std::move(cell));
    }
    nlohmann::json entry{{"xi_index", cfg.xi_eigen_indices[xi]}, {"log_n", log_n}, {"log_width", log_w}};
    entry["slope"] = log_n.size() >= 2 ? nlohmann::json(ls_slope(log_n, log_w)) : nlohmann::json(nullptr);
    slopes.push_back(entry);
  }
  report.extra["width_loglog"] = slopes;
  report.elapsed_seconds = seconds_since(t0);
  return report;
}

ExperimentReport cmd_real_data(const ExperimentConfig& cfg, const Dataset& data_in) {
  validate(cfg, Command::real_data);
  data_in.validate();
  const auto t0 = std::chrono::steady_clock::now();
  const Index n = data_in.n();
  const Index p = data_in.p();
  const PipelineConfig pc = pipeline_for(cfg);

  const double lambda = cfg.lambda > 0.0 ? cfg.lambda : default_lambda(n, std::max<Index>(p, 2));
  const Vector theta_hat = fit_scaled_lasso(data_in, lambda, pc.lasso).theta_hat;

  // xi_i ~ N(0, 1/sqrt(p)), drawn once.
  Vector xi(p);
  {
    Engine eng = make_engine(RngSeed{cfg.base_seed, kReservedStreams});
    std::normal_distribution<double> normal(0.0, std::pow(static_cast<double>(p), -0.25));
    for (Index i = 0; i < p; ++i) xi(i) = normal(eng);
  }
  const double truth_linear = xi.dot(theta_hat);
  const double truth_sq = theta_hat.squaredNorm();
  Index support = 0;
  for (Index i = 0; i < p; ++i) support += theta_hat(i) != 0.0 ? 1 : 0;
  const double s0 = cfg.s0_ci > 0.0 ? cfg.s0_ci : static_cast<double>(std::max<Index>(support, 1));
  const double A_n = cfg.A_n > 0.0 ? cfg.A_n : 2.0 * std::sqrt(std::log(static_cast<double>(n)));

  std::optional<LinearCiContext> ctx;
  try {
    ctx = prepare_ci_linear(data_in.X, xi, pc);
  } catch (const std::exception&) {
    ctx.reset();
  }

  const auto& sigmas = cfg.grid.sigma;
  const std::size_t reps = static_cast<std::size_t>(cfg.replicates);
  std::vector<Outcomes> covered(sigmas.size() * reps, Outcomes(2, -1));
  std::vector<std::vector<double>> widths(sigmas.size() * reps, std::vector<double>(2, 0.0));
  parallel_for(covered.size(), cfg.threads, [&](std::size_t job) {
    const std::size_t si = job / reps;
    const int rep = static_cast<int>(job % reps);
    const RngSeed seed = replicate_seed(cfg, si, rep);
    const Dataset data = with_noise(data_in.X, theta_hat, sigmas[si], seed.child(1));
    if (ctx) {
      try {
        const ScaledLassoFit fit = fit_scaled_lasso(data, lambda, pc.lasso);
        const ConfidenceInterval ci = ci_linear(*ctx, data, fit, cfg.alpha);
        covered[job][0] = ci.contains(truth_linear);
        widths[job][0] = ci.width();
      } catch (const std::exception&) {
        covered[job][0] = -1;
      }
    }
    try {
      PipelineConfig split_cfg = pc;
      split_cfg.split_seed = seed.child(2);
      const ConfidenceInterval ci = ci_sqnorm(data, cfg.alpha, s0, A_n, split_cfg);
      covered[job][1] = ci.contains(truth_sq);
      widths[job][1] = ci.width();
    } catch (const std::exception&) {
      covered[job][1] = -1;
    }
  });

  ExperimentReport report;
  report.command = Command::real_data;
  report.config = to_json(cfg);
  for (std::size_t si = 0; si < sigmas.size(); ++si) {
    const ReportCell lin = rate_cell({{"sigma", sigmas[si]}}, covered, si * reps, cfg.replicates, 0, "coverage_linear");
    const ReportCell sq = rate_cell({{"sigma", sigmas[si]}}, covered, si * reps, cfg.replicates, 1, "coverage_sqnorm");
    ReportCell cell;
    cell.params = lin.params;
    cell.replicates = cfg.replicates;
    cell.failures = std::max(lin.failures, sq.failures);
    cell.valid = lin.valid && sq.valid;
    cell.metrics = {{"coverage_linear", lin.metric("coverage_linear")},
                    {"se_linear", lin.metric("se")},
                    {"coverage_sqnorm", sq.metric("coverage_sqnorm")},
                    {"se_sqnorm", sq.metric("se")}};
    for (std::size_t slot = 0; slot < 2; ++slot) {
      double wsum = 0.0;
      int ok = 0;
      for (std::size_t r = 0; r < reps; ++r) {
        if (covered[si * reps + r][slot] >= 0) {
          wsum += widths[si * reps + r][slot];
          ++ok;
        }
      }
      cell.metrics.emplace_back(slot == 0 ? "mean_width_linear" : "mean_width_sqnorm", ok ? wsum / ok : 0.0);
    }
    report.cells.push_back(std::move(cell));
  }
  report.extra["xi"] = std::vector<double>(xi.data(), xi.data() + xi.size());
  report.extra["truth_linear"] = truth_linear;
  report.extra["truth_sqnorm"] = truth_sq;
  report.extra["s0"] = s0;
  report.extra["A_n"] = A_n;
  report.extra["lambda"] = lambda;
  report.elapsed_seconds = seconds_since(t0);
  return report;
}

ExperimentReport run_command(Command cmd, const ExperimentConfig& cfg, const std::optional<Dataset>& data) {
  switch (cmd) {
    case Command::table_betamin: return cmd_table_betamin(cfg);
    case Command::table_cone: return cmd_table_cone(cfg);
    case Command::ci_sweep: return cmd_ci_sweep(cfg);
    case Command::real_data:
      if (!data) throw ConfigError("real-data requires a dataset");
      return cmd_real_data(cfg, *data);
  }
  throw ConfigError("unknown command");
}

namespace {

std::string format_number(double v) {
  std::ostringstream os;
  os << std::setprecision(10) << v;
  return os.str();
}

}  // namespace

void write_report(const ExperimentReport& report, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  const std::string stem = to_string(report.command);
  {
    std::ofstream csv(dir / (stem + ".csv"));
    if (!csv) throw std::runtime_error("cannot write " + (dir / (stem + ".csv")).string());
    if (!report.cells.empty()) {
      const auto& first = report.cells.front();
      for (const auto& [k, v] : first.params) csv << k << ',';
      for (const auto& [k, v] : first.metrics) csv << k << ',';
      csv << "replicates,failures,valid\n";
    }
    for (const auto& cell : report.cells) {
      for (const auto& [k, v] : cell.params) csv << format_number(v) << ',';
      for (const auto& [k, v] : cell.metrics) csv << format_number(v) << ',';
      csv << cell.replicates << ',' << cell.failures << ',' << (cell.valid ? 1 : 0) << '\n';
    }
  }
  if (report.extra.contains("width_loglog")) {
    for (const auto& entry : report.extra["width_loglog"]) {
      const auto idx = entry["xi_index"].get<Index>();
      std::ofstream plot(dir / (stem + "_width_xi" + std::to_string(idx) + ".csv"));
      plot << "log_n,log_width\n";
      const auto xs = entry["log_n"].get<std::vector<double>>();
      const auto ys = entry["log_width"].get<std::vector<double>>();
      for (std::size_t i = 0; i < xs.size(); ++i) plot << format_number(xs[i]) << ',' << format_number(ys[i]) << '\n';
    }
  }
  nlohmann::json manifest;
  manifest["command"] = stem;
  manifest["version"] = kVersion;
  manifest["config"] = report.config;
  manifest["cells"] = report.cells.size();
  manifest["failure_budget_exceeded"] = report.failure_budget_exceeded();
  manifest["extra"] = report.extra;
  manifest["elapsed_seconds"] = report.elapsed_seconds;
  std::ofstream(dir / (stem + "_manifest.json")) << manifest.dump(2) << '\n';
}

}  // namespace hdinf
