#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "gqh/environment.hpp"
#include "gqh/loss_kernels.hpp"
#include "gqh/noise_estimator.hpp"
#include "gqh/quantile.hpp"
#include "gqh/records.hpp"

namespace gqh {

/// N quantile values for every (state, action) pair, stored row-major.
class QuantileTable {
 public:
  QuantileTable() = default;
  QuantileTable(std::size_t n_states, std::size_t n_actions, std::size_t n_quantiles);

  std::size_t num_states() const { return n_states_; }
  std::size_t num_actions() const { return n_actions_; }
  std::size_t num_quantiles() const { return n_quantiles_; }

  std::span<double> row(std::size_t s, std::size_t a);
  std::span<const double> row(std::size_t s, std::size_t a) const;

  /// Number of rows whose quantile values are not sorted.
  std::size_t crossing_rows() const;

  bool operator==(const QuantileTable&) const = default;

 private:
  std::size_t n_states_ = 0;
  std::size_t n_actions_ = 0;
  std::size_t n_quantiles_ = 0;
  std::vector<double> data_;
};

struct TrainConfig {
  LossSpec loss;
  std::size_t quantiles = 32;
  double learning_rate = 0.05;
  double discount = 1.0;
  std::size_t epochs = 100;
  std::size_t steps_per_epoch = 100;
  double exploration_epsilon = 0.1;
  std::uint64_t seed = 1;
  RiskMetric risk_metric = RiskMetric::Mean;
  /// When non-empty, evaluate this fixed policy instead of learning a greedy one.
  std::vector<std::size_t> fixed_policy;
  /// Greedy-policy rollouts per epoch for the risk column; 0 reads the risk
  /// off the learned start-state distribution instead.
  std::size_t eval_episodes = 0;
  std::size_t max_episode_steps = 1000;
  bool record_timing = false;

  void validate() const;
};

struct Transition {
  std::size_t state = 0;
  std::size_t action = 0;
  double reward = 0.0;
  std::size_t next_state = 0;
  bool terminal = false;
};

struct StepOutcome {
  double loss = 0.0;
  std::vector<double> predicted;
  std::vector<double> targets;
};

/// Action maximising policy_value(table.row(s, a), metric); ties go to the
/// lowest index.
std::size_t greedy_action(const QuantileTable& table, std::size_t state, RiskMetric metric);

/// One quantile TD update of row (s, a) against targets bootstrapped from
/// `target_table`. The next action follows config.fixed_policy when set,
/// otherwise it is greedy on the target table.
StepOutcome td_step(QuantileTable& table, const QuantileTable& target_table, const Transition& transition,
                    const TrainConfig& config, const LossSpec& loss);

/// Reference distribution used for the W1-to-oracle column.
struct OracleTarget {
  std::size_t state = 0;
  std::size_t action = 0;
  std::vector<double> quantiles;  // midpoint quantiles, ascending, one per learned quantile
};

struct TrainResult {
  QuantileTable table;
  std::vector<RunRecord> records;
  NoiseStats stats;
};

/// Thrown when the loss becomes non-finite; carries the records completed so far.
class TrainingDiverged : public std::runtime_error {
 public:
  TrainingDiverged(const std::string& what, std::vector<RunRecord> partial)
      : std::runtime_error(what), records(std::move(partial)) {}
  std::vector<RunRecord> records;
};

/// Tabular distributional TD learning on `env`. The target table is a frozen
/// copy of the online table refreshed at the start of every epoch; adaptive
/// loss thresholds are refreshed at the same time from `stats`.
TrainResult train(const Environment& env, const TrainConfig& config, NoiseStats stats,
                  const std::optional<OracleTarget>& oracle = std::nullopt);

/// Discounted returns of `episodes` rollouts of the policy implied by
/// (table, config) with no exploration.
std::vector<double> rollout_returns(const Environment& env, const QuantileTable& table, const TrainConfig& config,
                                    std::size_t episodes, std::uint64_t seed);

/// Returns of a fixed per-state action table.
std::vector<double> rollout_returns(const Environment& env, std::span<const std::size_t> policy,
                                    std::size_t episodes, std::uint64_t seed, std::size_t max_steps = 1000);

/// Mean or CVaR95 of a sample of returns.
double empirical_risk(std::vector<double> returns, RiskMetric metric);

}  // namespace gqh
