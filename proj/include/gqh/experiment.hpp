#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "gqh/agent.hpp"
#include "gqh/environment.hpp"
#include "gqh/loss_kernels.hpp"
#include "gqh/mdp.hpp"
#include "gqh/noise_estimator.hpp"
#include "gqh/records.hpp"
#include "gqh/sabr.hpp"

namespace gqh {

/// Invalid experiment configuration; the message names the offending field.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct Arm {
  std::string name;
  LossSpec loss;
};

enum class EnvironmentKind { Chain, MdpFile, Sabr };

struct EnvironmentSpec {
  EnvironmentKind kind = EnvironmentKind::Chain;
  /// Chain and MdpFile: the model. Sabr: unused.
  MdpModel mdp;
  SabrConfig sabr;
  /// Fixed policy evaluated by every arm; empty for greedy control.
  std::vector<std::size_t> policy;
  std::size_t oracle_horizon = 64;
};

struct ExperimentConfig {
  EnvironmentSpec environment;
  std::vector<Arm> arms;
  TrainConfig train;
  NoiseCentering centering = NoiseCentering::BatchMean;
  double fallback_b = 1.0;
  std::size_t seeds = 1;
  std::filesystem::path output = "out";
  std::size_t workers = 1;
  double w1_threshold = 0.05;

  /// Throws ConfigError.
  void validate() const;
};

/// Parses the JSON configuration documented in the README. Relative paths
/// inside (mdp files) resolve against `base_dir`.
ExperimentConfig parse_experiment_config(const std::string& text, const std::filesystem::path& base_dir = {});
ExperimentConfig load_experiment_config(const std::filesystem::path& path);

std::unique_ptr<Environment> make_environment(const EnvironmentSpec& spec);

/// Oracle midpoint quantiles for the start state under the fixed policy, when
/// the environment and policy admit one.
std::optional<OracleTarget> make_oracle(const EnvironmentSpec& spec, std::size_t quantiles);

struct ArmSummary {
  std::string arm;
  bool ok = true;
  std::size_t seeds = 0;  // seeds that completed
  std::optional<double> loss_mean, loss_std, w1_mean, w1_std, risk_mean, risk_std, b_mean, b_std;
  std::optional<double> epochs_to_threshold_mean;
  std::optional<std::size_t> reached;
};

inline constexpr const char* kSummaryHeader =
    "arm,status,seeds,final_loss_mean,final_loss_std,final_w1_mean,final_w1_std,final_risk_mean,final_risk_std,"
    "final_b_mean,final_b_std,epochs_to_w1_threshold_mean,reached_w1_threshold";

struct RunFailure {
  std::string arm;
  std::uint64_t seed = 0;
  std::string message;
};

/// Per-arm mean and sample std of each completed run's final-epoch metrics,
/// plus the mean first epoch at which w1_oracle <= threshold over the seeds
/// that got there. An arm with any failed run is marked failed.
std::vector<ArmSummary> summarize(const std::vector<Arm>& arms, const std::vector<RunRecord>& records,
                                  const std::vector<RunFailure>& failures, double w1_threshold);
std::string summary_to_csv(const std::vector<ArmSummary>& summary);

struct ExperimentResult {
  std::vector<RunRecord> records;
  std::vector<ArmSummary> summary;
  std::vector<RunFailure> failures;
  /// 0 success, 2 when every arm failed.
  int exit_code = 0;
};

/// Runs every (arm, seed) pair, at most `config.workers` at a time, and returns
/// records ordered by arm, seed, epoch. Seeds are train.seed, train.seed + 1, ...
ExperimentResult execute_experiment(const ExperimentConfig& config);

/// execute_experiment, then writes records.csv, summary.csv and one SVG chart
/// per metric into config.output.
ExperimentResult run_experiment(const ExperimentConfig& config);

}  // namespace gqh
