#include "gqh/sabr.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "gqh/normal.hpp"

namespace gqh {

void SabrConfig::validate() const {
  auto bad = [](const char* what) { throw std::invalid_argument(std::string("SabrConfig: ") + what); };
  if (!(spot0 > 0.0) || !(strike > 0.0)) bad("spot0 and strike must be positive");
  if (!(alpha0 >= 0.0)) bad("alpha0 must be >= 0");
  if (!(beta >= 0.0 && beta <= 1.0)) bad("beta must lie in [0, 1]");
  if (!(std::fabs(rho) < 1.0)) bad("|rho| must be < 1");
  if (!(nu >= 0.0)) bad("nu must be >= 0");
  if (!(maturity > 0.0)) bad("maturity must be positive");
  if (steps == 0) bad("steps must be >= 1");
  if (!(transaction_cost_rate >= 0.0)) bad("transaction_cost_rate must be >= 0");
  if (!(contracts > 0.0)) bad("contracts must be positive");
  if (spot_buckets == 0) bad("spot_buckets must be >= 1");
  if (!(bucket_range > 0.0)) bad("bucket_range must be positive");
  for (double p : positions) {
    if (!std::isfinite(p)) bad("positions must be finite");
  }
}

double black_call(double forward, double strike, double tau, double vol) {
  const double intrinsic = std::max(forward - strike, 0.0);
  if (tau <= 0.0 || vol <= 0.0) return intrinsic;
  const double sd = vol * std::sqrt(tau);
  const double d1 = (std::log(forward / strike) + 0.5 * sd * sd) / sd;
  const double d2 = d1 - sd;
  return forward * normal_cdf(d1) - strike * normal_cdf(d2);
}

double sabr_implied_vol(double forward, double strike, double tau, double alpha, double beta, double rho,
                        double nu) {
  if (alpha <= 0.0) return 0.0;
  const double omb = 1.0 - beta;
  const double log_fk = std::log(forward / strike);
  const double fk_pow = std::pow(forward * strike, 0.5 * omb);
  const double denom = fk_pow * (1.0 + omb * omb / 24.0 * log_fk * log_fk +
                                 std::pow(omb, 4) / 1920.0 * std::pow(log_fk, 4));
  const double z = nu / alpha * fk_pow * log_fk;
  double z_over_x = 1.0;
  if (std::fabs(z) > 1e-8) {
    const double x = std::log((std::sqrt(1.0 - 2.0 * rho * z + z * z) + z - rho) / (1.0 - rho));
    z_over_x = z / x;
  } else {
    z_over_x = 1.0 - 0.5 * rho * z;
  }
  const double correction = 1.0 + (omb * omb / 24.0 * alpha * alpha / (fk_pow * fk_pow) +
                                   0.25 * rho * beta * nu * alpha / fk_pow + (2.0 - 3.0 * rho * rho) / 24.0 * nu * nu) *
                                      tau;
  return alpha / denom * z_over_x * correction;
}

double transaction_cost(double rate, double prev_position, double next_position, double price) {
  return rate * std::fabs(next_position - prev_position) * price;
}

SabrHedgingEnv::SabrHedgingEnv(SabrConfig config) : config_(std::move(config)) {
  config_.validate();
  positions_ = config_.positions;
  if (positions_.empty()) {
    positions_.resize(21);
    for (std::size_t i = 0; i < positions_.size(); ++i) positions_[i] = config_.contracts * static_cast<double>(i) / 20.0;
  }
  spot_ = config_.spot0;
  vol_ = config_.alpha0;
}

std::size_t SabrHedgingEnv::num_states() const { return config_.steps * config_.spot_buckets + 1; }

std::size_t SabrHedgingEnv::flat_action() const {
  for (std::size_t i = 0; i < positions_.size(); ++i) {
    if (positions_[i] == 0.0) return i;
  }
  throw std::logic_error("SabrHedgingEnv: position grid does not contain 0");
}

double SabrHedgingEnv::option_value(double spot, double vol, double tau) const {
  if (config_.option == OptionKind::Linear) return spot - config_.strike;
  if (tau <= 0.0) return std::max(spot - config_.strike, 0.0);
  const double iv = sabr_implied_vol(spot, config_.strike, tau, vol, config_.beta, config_.rho, config_.nu);
  return black_call(spot, config_.strike, tau, iv);
}

SabrMarketState SabrHedgingEnv::market() const {
  const double dt = config_.maturity / static_cast<double>(config_.steps);
  return {spot_, vol_, config_.maturity - static_cast<double>(step_) * dt, position_};
}

std::size_t SabrHedgingEnv::state_index() const {
  if (step_ >= config_.steps) return config_.steps * config_.spot_buckets;
  const double scale = config_.alpha0 > 0.0 ? config_.alpha0 * std::sqrt(config_.maturity) : 1.0;
  const double x = std::log(spot_ / config_.strike) / scale;
  const auto m = static_cast<double>(config_.spot_buckets);
  const double pos = (x + config_.bucket_range) / (2.0 * config_.bucket_range) * m;
  const auto bucket = static_cast<std::size_t>(std::clamp(std::floor(pos), 0.0, m - 1.0));
  return step_ * config_.spot_buckets + bucket;
}

std::size_t SabrHedgingEnv::reset(Rng&) {
  spot_ = config_.spot0;
  vol_ = config_.alpha0;
  position_ = 0.0;
  step_ = 0;
  return state_index();
}

StepResult SabrHedgingEnv::step(std::size_t action, Rng& rng) {
  if (action >= positions_.size()) throw std::out_of_range("SabrHedgingEnv::step: action out of range");
  if (step_ >= config_.steps) throw std::logic_error("SabrHedgingEnv::step: episode already finished");
  const double dt = config_.maturity / static_cast<double>(config_.steps);
  const double tau = config_.maturity - static_cast<double>(step_) * dt;
  const double next_tau = step_ + 1 == config_.steps ? 0.0 : tau - dt;

  const double h = positions_[action];
  const double cost = transaction_cost(config_.transaction_cost_rate, position_, h, spot_);
  const double value_before = option_value(spot_, vol_, tau);

  std::normal_distribution<double> gauss(0.0, 1.0);
  const double z1 = gauss(rng);
  const double z2 = config_.rho * z1 + std::sqrt(1.0 - config_.rho * config_.rho) * gauss(rng);
  const double local_vol = vol_ * std::pow(spot_, config_.beta - 1.0);
  const double sqdt = std::sqrt(dt);
  const double next_spot = spot_ * std::exp(-0.5 * local_vol * local_vol * dt + local_vol * sqdt * z1);
  const double next_vol = std::max(0.0, vol_ + config_.nu * vol_ * sqdt * z2);

  const double value_after = option_value(next_spot, next_vol, next_tau);
  const double reward = h * (next_spot - spot_) - config_.contracts * (value_after - value_before) - cost;

  spot_ = next_spot;
  vol_ = next_vol;
  position_ = h;
  ++step_;
  return {state_index(), reward, step_ >= config_.steps};
}

}  // namespace gqh
