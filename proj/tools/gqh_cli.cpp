// Command-line front end: run / validate experiment configs, redraw charts.

#include <cstdio>
#include <exception>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "gqh/chart.hpp"
#include "gqh/experiment.hpp"
#include "gqh/records.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kValidation = 1;
constexpr int kRuntime = 2;

int cmd_run(const std::string& config_path, const std::string& out, std::size_t workers, std::size_t seeds) {
  gqh::ExperimentConfig config;
  try {
    config = gqh::load_experiment_config(config_path);
    if (!out.empty()) config.output = out;
    if (workers > 0) config.workers = workers;
    if (seeds > 0) config.seeds = seeds;
    config.validate();
  } catch (const gqh::ConfigError& e) {
    std::cerr << config_path << ": " << e.what() << "\n";
    return kValidation;
  }
  gqh::ExperimentResult result;
  try {
    result = gqh::run_experiment(config);
  } catch (const gqh::ConfigError& e) {
    std::cerr << config_path << ": " << e.what() << "\n";
    return kValidation;
  } catch (const std::exception& e) {
    std::cerr << "run failed: " << e.what() << "\n";
    return kRuntime;
  }
  for (const auto& f : result.failures) {
    std::cerr << "arm " << f.arm << " seed " << f.seed << " failed: " << f.message << "\n";
  }
  std::cout << "wrote " << result.records.size() << " records to " << (config.output / "records.csv").string() << "\n";
  std::cout << gqh::summary_to_csv(result.summary);
  return result.exit_code;
}

int cmd_validate(const std::string& config_path) {
  try {
    const auto config = gqh::load_experiment_config(config_path);
    std::cout << config_path << ": ok (" << config.arms.size() << " arms, " << config.seeds << " seeds)\n";
    return kOk;
  } catch (const gqh::ConfigError& e) {
    std::cerr << config_path << ": " << e.what() << "\n";
    return kValidation;
  }
}

int cmd_chart(const std::string& records_path, const std::string& metric_name, const std::string& out) {
  const auto metric = gqh::parse_chart_metric(metric_name);
  if (!metric) {
    std::cerr << "unknown metric '" << metric_name << "' (expected loss, w1_oracle, risk or b)\n";
    return kValidation;
  }
  try {
    gqh::emit_chart(gqh::read_records_csv(records_path), *metric, out);
  } catch (const std::invalid_argument& e) {
    std::cerr << e.what() << "\n";
    return kValidation;
  } catch (const std::exception& e) {
    std::cerr << e.what() << "\n";
    return kRuntime;
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Quantile TD experiments with the generalized quantile Huber loss family"};
  app.require_subcommand(1);

  std::string config_path, out;
  std::size_t workers = 0, seeds = 0;
  auto* run = app.add_subcommand("run", "Run every (arm, seed) pair of an experiment config");
  run->add_option("config", config_path, "Experiment config (JSON)")->required();
  run->add_option("--out", out, "Output directory (overrides config 'output')");
  run->add_option("--workers", workers, "Concurrent runs (overrides config 'workers')")->check(CLI::PositiveNumber);
  run->add_option("--seeds", seeds, "Seeds per arm (overrides config 'seeds')")->check(CLI::PositiveNumber);

  std::string validate_path;
  auto* validate = app.add_subcommand("validate", "Check an experiment config without running it");
  validate->add_option("config", validate_path, "Experiment config (JSON)")->required();

  std::string records_path, metric, chart_out;
  auto* chart = app.add_subcommand("chart", "Render one metric of a records.csv as SVG");
  chart->add_option("records", records_path, "records.csv")->required();
  chart->add_option("--metric", metric, "loss | w1_oracle | risk | b")->required();
  chart->add_option("--out", chart_out, "Output SVG path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kOk : kValidation;
  }

  if (*run) return cmd_run(config_path, out, workers, seeds);
  if (*validate) return cmd_validate(validate_path);
  return cmd_chart(records_path, metric, chart_out);
}
