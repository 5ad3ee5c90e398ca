#include "gqh/agent.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <string>

#include "gqh/gaussian_w1.hpp"

namespace gqh {

namespace {

constexpr std::uint64_t kEvalStream = 0x9E3779B97F4A7C15ULL;

std::size_t acting_action(const QuantileTable& table, std::size_t s, const TrainConfig& config) {
  if (!config.fixed_policy.empty()) return config.fixed_policy[s];
  return greedy_action(table, s, config.risk_metric);
}

std::vector<double> rollouts(const Environment& env, std::size_t episodes, std::uint64_t seed,
                             std::size_t max_steps, const std::function<std::size_t(std::size_t)>& policy) {
  auto sim = env.clone();
  Rng rng(seed);
  std::vector<double> out;
  out.reserve(episodes);
  for (std::size_t e = 0; e < episodes; ++e) {
    std::size_t s = sim->reset(rng);
    double ret = 0.0;
    double scale = 1.0;
    for (std::size_t t = 0; t < max_steps; ++t) {
      const auto step = sim->step(policy(s), rng);
      ret += scale * step.reward;
      scale *= sim->discount();
      if (step.terminal) break;
      s = step.next_state;
    }
    out.push_back(ret);
  }
  return out;
}

}  // namespace

QuantileTable::QuantileTable(std::size_t n_states, std::size_t n_actions, std::size_t n_quantiles)
    : n_states_(n_states), n_actions_(n_actions), n_quantiles_(n_quantiles),
      data_(n_states * n_actions * n_quantiles, 0.0) {
  if (n_states == 0 || n_actions == 0 || n_quantiles == 0) {
    throw std::invalid_argument("QuantileTable: dimensions must be positive");
  }
}

std::span<double> QuantileTable::row(std::size_t s, std::size_t a) {
  if (s >= n_states_ || a >= n_actions_) throw std::out_of_range("QuantileTable: index out of range");
  return {data_.data() + (s * n_actions_ + a) * n_quantiles_, n_quantiles_};
}

std::span<const double> QuantileTable::row(std::size_t s, std::size_t a) const {
  if (s >= n_states_ || a >= n_actions_) throw std::out_of_range("QuantileTable: index out of range");
  return {data_.data() + (s * n_actions_ + a) * n_quantiles_, n_quantiles_};
}

std::size_t QuantileTable::crossing_rows() const {
  std::size_t n = 0;
  for (std::size_t s = 0; s < n_states_; ++s) {
    for (std::size_t a = 0; a < n_actions_; ++a) {
      const auto r = row(s, a);
      if (!std::is_sorted(r.begin(), r.end())) ++n;
    }
  }
  return n;
}

void TrainConfig::validate() const {
  loss.validate();
  auto bad = [](const std::string& what) { throw std::invalid_argument("TrainConfig: " + what); };
  if (quantiles == 0) bad("quantiles must be >= 1");
  if (risk_metric == RiskMetric::CVaR95 && quantiles < 20) bad("CVaR95 needs quantiles >= 20");
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) bad("learning_rate must be finite and >= 0");
  if (!(discount > 0.0 && discount <= 1.0)) bad("discount must lie in (0, 1]");
  if (!(exploration_epsilon >= 0.0 && exploration_epsilon <= 1.0)) bad("exploration_epsilon must lie in [0, 1]");
  if (max_episode_steps == 0) bad("max_episode_steps must be >= 1");
}

std::size_t greedy_action(const QuantileTable& table, std::size_t state, RiskMetric metric) {
  std::size_t best = 0;
  double best_value = policy_value(table.row(state, 0), metric);
  for (std::size_t a = 1; a < table.num_actions(); ++a) {
    const double v = policy_value(table.row(state, a), metric);
    if (v > best_value) {
      best = a;
      best_value = v;
    }
  }
  return best;
}

StepOutcome td_step(QuantileTable& table, const QuantileTable& target_table, const Transition& tr,
                    const TrainConfig& config, const LossSpec& loss) {
  if (tr.state >= table.num_states() || tr.next_state >= table.num_states() || tr.action >= table.num_actions()) {
    throw std::out_of_range("td_step: transition index out of range");
  }
  auto theta = table.row(tr.state, tr.action);
  StepOutcome out;
  if (tr.terminal) {
    out.targets = bellman_target(tr.reward, theta, config.discount, true);
  } else {
    std::size_t next_action = 0;
    if (!config.fixed_policy.empty()) {
      next_action = config.fixed_policy.at(tr.next_state);
    } else {
      next_action = greedy_action(target_table, tr.next_state, config.risk_metric);
    }
    out.targets = bellman_target(tr.reward, target_table.row(tr.next_state, next_action), config.discount, false);
  }
  out.predicted.assign(theta.begin(), theta.end());
  out.loss = pairwise_loss(out.predicted, out.targets, loss);
  const auto grad = pairwise_grad(out.predicted, out.targets, loss);
  for (std::size_t i = 0; i < theta.size(); ++i) theta[i] -= config.learning_rate * grad[i];
  return out;
}

double empirical_risk(std::vector<double> returns, RiskMetric metric) {
  if (returns.empty()) throw std::invalid_argument("empirical_risk: no returns");
  if (metric == RiskMetric::Mean) {
    double s = 0.0;
    for (double r : returns) s += r;
    return s / static_cast<double>(returns.size());
  }
  std::sort(returns.begin(), returns.end());
  return lower_tail_mean(returns, 0.05);
}

std::vector<double> rollout_returns(const Environment& env, const QuantileTable& table, const TrainConfig& config,
                                    std::size_t episodes, std::uint64_t seed) {
  return rollouts(env, episodes, seed, config.max_episode_steps,
                  [&](std::size_t s) { return acting_action(table, s, config); });
}

std::vector<double> rollout_returns(const Environment& env, std::span<const std::size_t> policy,
                                    std::size_t episodes, std::uint64_t seed, std::size_t max_steps) {
  if (policy.size() != env.num_states()) throw std::invalid_argument("rollout_returns: policy must cover every state");
  return rollouts(env, episodes, seed, max_steps, [&](std::size_t s) { return policy[s]; });
}

TrainResult train(const Environment& env, const TrainConfig& config, NoiseStats stats,
                  const std::optional<OracleTarget>& oracle) {
  config.validate();
  if (!config.fixed_policy.empty()) {
    if (config.fixed_policy.size() != env.num_states()) {
      throw std::invalid_argument("train: fixed_policy must have one action per state");
    }
    for (auto a : config.fixed_policy) {
      if (a >= env.num_actions()) throw std::invalid_argument("train: fixed_policy action out of range");
    }
  }
  if (oracle && oracle->quantiles.size() != config.quantiles) {
    throw std::invalid_argument("train: oracle quantile count must match config.quantiles");
  }

  auto sim = env.clone();
  Rng rng(config.seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::uniform_int_distribution<std::size_t> random_action(0, env.num_actions() - 1);

  TrainResult result{QuantileTable(env.num_states(), env.num_actions(), config.quantiles), {}, stats};
  QuantileTable& table = result.table;
  LossSpec active = config.loss;

  std::size_t state = sim->reset(rng);
  const std::size_t start_state = state;
  std::size_t episode_steps = 0;

  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    const QuantileTable target = table;
    if (active.adaptive) active.threshold = current_b(result.stats);

    double loss_sum = 0.0;
    for (std::size_t k = 0; k < config.steps_per_epoch; ++k) {
      std::size_t action = acting_action(table, state, config);
      if (config.exploration_epsilon > 0.0 && unif(rng) < config.exploration_epsilon) action = random_action(rng);
      const auto step = sim->step(action, rng);
      ++episode_steps;
      const Transition tr{state, action, step.reward, step.next_state, step.terminal};
      StepOutcome outcome;
      try {
        outcome = td_step(table, target, tr, config, active);
      } catch (const std::domain_error& e) {
        throw TrainingDiverged("train: " + std::string(e.what()) + " at epoch " + std::to_string(epoch),
                               std::move(result.records));
      }
      if (!std::isfinite(outcome.loss)) {
        throw TrainingDiverged("train: non-finite loss at epoch " + std::to_string(epoch) + ", step " +
                                   std::to_string(k + 1) + " (" + active.label() + ")",
                               std::move(result.records));
      }
      loss_sum += outcome.loss;
      if (config.quantiles >= 2) result.stats = observe_batch(result.stats, outcome.predicted, outcome.targets);

      if (step.terminal || episode_steps >= config.max_episode_steps) {
        state = sim->reset(rng);
        episode_steps = 0;
      } else {
        state = step.next_state;
      }
    }

    RunRecord rec;
    rec.seed = config.seed;
    rec.epoch = epoch;
    rec.loss = config.steps_per_epoch > 0 ? loss_sum / static_cast<double>(config.steps_per_epoch) : 0.0;
    if (oracle) {
      std::vector<double> learned(table.row(oracle->state, oracle->action).begin(),
                                  table.row(oracle->state, oracle->action).end());
      std::sort(learned.begin(), learned.end());
      rec.w1_oracle = w1_empirical(learned, oracle->quantiles);
    }
    if (config.eval_episodes > 0) {
      rec.risk = empirical_risk(rollout_returns(env, table, config, config.eval_episodes, config.seed ^ kEvalStream),
                                config.risk_metric);
    } else {
      rec.risk = policy_value(table.row(start_state, acting_action(table, start_state, config)), config.risk_metric);
    }
    rec.b = current_b(result.stats);
    if (config.record_timing) {
      rec.ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    }
    if (!std::isfinite(rec.loss) || !std::isfinite(rec.risk) || (rec.w1_oracle && !std::isfinite(*rec.w1_oracle))) {
      throw TrainingDiverged("train: non-finite metric at epoch " + std::to_string(epoch), std::move(result.records));
    }
    result.records.push_back(std::move(rec));
  }
  return result;
}

}  // namespace gqh
