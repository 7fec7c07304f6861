// hdinf: Monte Carlo experiment driver for debiased high-dimensional tests and intervals.

#include "hdinf/experiment.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitBudget = 3;

struct Options {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir = "results";
  int threads = 1;
  std::string preset = "desk";
  std::string x_csv;
  std::string y_csv;
};

void add_common(CLI::App* sub, Options& o) {
  sub->add_option("--config", o.config_path, "JSON file overriding preset fields")->check(CLI::ExistingFile);
  sub->add_option("--seed", o.seed, "Base seed");
  sub->add_option("--out", o.out_dir, "Output directory")->capture_default_str();
  sub->add_option("--threads", o.threads, "Worker threads")->check(CLI::PositiveNumber)->capture_default_str();
  sub->add_option("--preset", o.preset, "Built-in scale")
      ->check(CLI::IsMember({"desk", "paper"}))
      ->capture_default_str();
}

hdinf::ExperimentConfig build_config(hdinf::Command cmd, const Options& o) {
  hdinf::ExperimentConfig cfg = hdinf::preset_config(cmd, hdinf::preset_from_string(o.preset));
  if (!o.config_path.empty()) {
    std::ifstream in(o.config_path);
    nlohmann::json j;
    try {
      in >> j;
    } catch (const nlohmann::json::exception& e) {
      throw hdinf::ConfigError(o.config_path + ": " + e.what());
    }
    hdinf::apply_json(cfg, j);
  }
  if (o.seed) cfg.base_seed = *o.seed;
  cfg.threads = o.threads;
  hdinf::validate(cfg, cmd);
  return cfg;
}

void print_summary(const hdinf::ExperimentReport& report) {
  for (const auto& cell : report.cells) {
    for (const auto& [k, v] : cell.params) std::cout << k << '=' << v << ' ';
    std::cout << "|";
    for (const auto& [k, v] : cell.metrics) std::cout << ' ' << k << '=' << v;
    if (cell.failures) std::cout << " failures=" << cell.failures;
    if (!cell.valid) std::cout << " INVALID";
    std::cout << '\n';
  }
  std::cout << "elapsed " << report.elapsed_seconds << " s\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Debiased inference experiments"};
  app.require_subcommand(1);
  Options opts;

  auto* betamin = app.add_subcommand("table-betamin", "Beta-min type-I error and power grid");
  auto* cone = app.add_subcommand("table-cone", "Non-negative cone type-I error and power grid");
  auto* sweep = app.add_subcommand("ci-sweep", "Linear-functional interval coverage and width");
  auto* real = app.add_subcommand("real-data", "Resampled-noise protocol on a fixed design");
  for (auto* sub : {betamin, cone, sweep, real}) add_common(sub, opts);
  real->add_option("--x", opts.x_csv, "Design matrix CSV")->required()->check(CLI::ExistingFile);
  real->add_option("--y", opts.y_csv, "Response CSV")->required()->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    const auto cmd = hdinf::command_from_string(app.get_subcommands().front()->get_name());
    const auto cfg = build_config(cmd, opts);
    std::optional<hdinf::Dataset> data;
    if (cmd == hdinf::Command::real_data) data = hdinf::load_csv(opts.x_csv, opts.y_csv);
    const auto report = hdinf::run_command(cmd, cfg, data);
    hdinf::write_report(report, opts.out_dir);
    print_summary(report);
    if (report.failure_budget_exceeded()) {
      std::cerr << "hdinf: more than 5% of replicates failed in at least one cell\n";
      return kExitBudget;
    }
  } catch (const hdinf::ConfigError& e) {
    std::cerr << "hdinf: config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "hdinf: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
