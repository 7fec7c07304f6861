#pragma once

#include "hdinf/common.hpp"
#include "hdinf/dataset.hpp"
#include "hdinf/hypothesis_set.hpp"
#include "hdinf/inference.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace hdinf {

enum class Command { table_betamin, table_cone, ci_sweep, real_data };
enum class Preset { desk, paper };

Command command_from_string(const std::string& s);
std::string to_string(Command c);
Preset preset_from_string(const std::string& s);

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct Grid {
  std::vector<double> c;
  std::vector<double> rho;
  std::vector<Index> n;
  std::vector<double> b;
  std::vector<double> sigma;
};

struct ExperimentConfig {
  Index n = 200;
  Index p = 300;
  Index s0 = 5;
  double b = 1.0;
  double rho = 0.2;
  double sigma = 1.0;
  double alpha = 0.05;
  int replicates = 200;
  std::uint64_t base_seed = 20240101;
  nlohmann::json set;                       // hypothesis set description
  PipelineMode pipeline = PipelineMode::fixed_U;
  Grid grid;
  double lambda = 0.0;                      // 0 selects the default
  double mu = 0.0;                          // 0 selects the default
  int mu_shrink_steps = 0;                  // decorrelator: shrink mu toward the feasibility edge
  std::vector<Index> xi_eigen_indices{0};   // ci-sweep: eigenvectors of Sigma, 0 = largest eigenvalue
  double A_n = 0.0;                         // real-data: 0 selects 2 sqrt(log n)
  double s0_ci = 0.0;                       // real-data: 0 selects |theta_hat|_0
  bool standardize = false;                 // real-data: standardize columns in the Lasso fits
  int threads = 1;
};

/// Built-in configuration for a command at desk or paper scale.
ExperimentConfig preset_config(Command cmd, Preset preset);

/// Overlays fields present in `j` (names mirror ExperimentConfig). Unknown keys are a ConfigError.
void apply_json(ExperimentConfig& cfg, const nlohmann::json& j);
nlohmann::json to_json(const ExperimentConfig& cfg);

/// Throws ConfigError when the configuration cannot be run by `cmd`.
void validate(const ExperimentConfig& cfg, Command cmd);

struct ReportCell {
  std::vector<std::pair<std::string, double>> params;
  std::vector<std::pair<std::string, double>> metrics;
  int replicates = 0;
  int failures = 0;
  bool valid = true;  // false when more than 5% of replicates failed

  double param(const std::string& name) const;
  double metric(const std::string& name) const;
};

struct ExperimentReport {
  Command command = Command::table_betamin;
  nlohmann::json config;
  std::vector<ReportCell> cells;
  nlohmann::json extra = nlohmann::json::object();
  double elapsed_seconds = 0.0;

  bool failure_budget_exceeded() const;
  /// First cell whose parameters match every (name, value) pair, or nullptr.
  const ReportCell* find(const std::vector<std::pair<std::string, double>>& where) const;
};

inline constexpr double kMaxFailureFraction = 0.05;

/// Monte Carlo standard error sqrt(r (1 - r) / N).
double mc_standard_error(double rate, int n);

/// Seed of replicate `rep` in cell `cell`: (base_seed, cell * replicates + rep).
RngSeed replicate_seed(const ExperimentConfig& cfg, std::size_t cell, int rep);

/// Beta-min rejection rates over the (c, rho) grid. Cells sharing rho share their
/// simulated datasets; only the hypothesis threshold c differs between them.
ExperimentReport cmd_table_betamin(const ExperimentConfig& cfg);

/// Non-negative cone rejection rates over the (b, rho) grid; b < 0 gives the alternative.
ExperimentReport cmd_table_cone(const ExperimentConfig& cfg);

/// Linear-functional interval coverage and mean width over (xi, n). Each n draws one
/// design and signal; replicates resample the noise only.
ExperimentReport cmd_ci_sweep(const ExperimentConfig& cfg);

/// Resampled-noise protocol on a fixed design: the initial fit is treated as truth.
ExperimentReport cmd_real_data(const ExperimentConfig& cfg, const Dataset& data);

ExperimentReport run_command(Command cmd, const ExperimentConfig& cfg,
                             const std::optional<Dataset>& data = std::nullopt);

/// Writes <command>.csv, <command>_manifest.json and any plot files into `dir`.
void write_report(const ExperimentReport& report, const std::filesystem::path& dir);

/// Least-squares slope of y on x.
double ls_slope(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace hdinf
