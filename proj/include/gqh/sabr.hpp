#pragma once

#include <cstddef>
#include <memory>
#include <vector>

#include "gqh/environment.hpp"

namespace gqh {

enum class OptionKind { Call, Linear };

/// Parameters of the miniature hedging task: a trader is short `contracts`
/// European options on a SABR underlying (zero rates) and picks a hedge
/// position in the underlying from a discrete grid at each of `steps` dates.
struct SabrConfig {
  double spot0 = 100.0;
  double strike = 100.0;
  double alpha0 = 0.2;  // initial SABR volatility
  double beta = 1.0;
  double rho = -0.3;
  double nu = 0.5;  // vol of vol
  double maturity = 0.25;  // years
  std::size_t steps = 10;
  double transaction_cost_rate = 0.005;
  double contracts = 1.0;
  OptionKind option = OptionKind::Call;
  /// Hedge positions in units of the underlying; empty means 21 evenly spaced
  /// positions from 0 to `contracts`.
  std::vector<double> positions;
  /// Log-moneyness buckets used for the tabular state, spanning
  /// +/- `bucket_range` standard deviations of terminal log-spot.
  std::size_t spot_buckets = 9;
  double bucket_range = 2.0;

  void validate() const;
};

/// Observable market and book state.
struct SabrMarketState {
  double spot = 0.0;
  double volatility = 0.0;
  double time_to_maturity = 0.0;
  double position = 0.0;
};

/// Hagan et al. lognormal implied volatility of the SABR model.
double sabr_implied_vol(double forward, double strike, double tau, double alpha, double beta, double rho, double nu);

/// Undiscounted Black call price.
double black_call(double forward, double strike, double tau, double vol);

/// rate * |next - prev| * price.
double transaction_cost(double rate, double prev_position, double next_position, double price);

/// Episodic hedging environment. State index = step * spot_buckets + bucket;
/// index steps * spot_buckets is the absorbing terminal state. Each step the
/// reward is the hedged P&L h (S' - S) - contracts (V' - V) minus the
/// transaction cost of moving to h. Spot uses a log-Euler step with local vol
/// alpha S^(beta-1); vol uses an Euler step floored at zero.
class SabrHedgingEnv final : public Environment {
 public:
  explicit SabrHedgingEnv(SabrConfig config);

  std::size_t num_states() const override;
  std::size_t num_actions() const override { return positions_.size(); }
  double discount() const override { return 1.0; }
  std::size_t reset(Rng& rng) override;
  StepResult step(std::size_t action, Rng& rng) override;
  std::unique_ptr<Environment> clone() const override { return std::make_unique<SabrHedgingEnv>(*this); }

  const SabrConfig& config() const { return config_; }
  const std::vector<double>& positions() const { return positions_; }
  SabrMarketState market() const;

  /// Action index of the zero position (the do-nothing policy).
  std::size_t flat_action() const;

  /// Value of the short book's option leg at the current state.
  double option_value(double spot, double vol, double tau) const;

 private:
  std::size_t state_index() const;

  SabrConfig config_;
  std::vector<double> positions_;
  double spot_ = 0.0;
  double vol_ = 0.0;
  double position_ = 0.0;
  std::size_t step_ = 0;
};

}  // namespace gqh
