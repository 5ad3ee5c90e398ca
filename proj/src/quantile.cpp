#include "gqh/quantile.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace gqh {

namespace {

void check_dims(std::span<const double> predicted, std::span<const double> targets) {
  if (predicted.empty() || predicted.size() != targets.size()) {
    throw std::invalid_argument("pairwise loss: predicted and target sets must have equal nonzero size");
  }
}

// |tau - [u < 0]|; the indicator is 0 at u == 0.
double asym_weight(double tau, double u) { return u < 0.0 ? 1.0 - tau : tau; }

double row_loss(double theta, double tau, std::span<const double> targets, const LossSpec& loss) {
  double s = 0.0;
  for (double y : targets) {
    const double u = y - theta;
    s += asym_weight(tau, u) * cost(loss, u);
  }
  return s;
}

double row_grad(double theta, double tau, std::span<const double> targets, const LossSpec& loss, double n) {
  double s = 0.0;
  for (double y : targets) {
    const double u = y - theta;
    s -= asym_weight(tau, u) * cost_grad(loss, u);
  }
  return s / n;
}

}  // namespace

QuantileDistribution::QuantileDistribution(std::vector<double> values) : values_(std::move(values)) {
  if (values_.empty()) throw std::invalid_argument("QuantileDistribution: N must be >= 1");
}

std::vector<double> QuantileDistribution::fractions_mid() const {
  std::vector<double> out(values_.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = fraction_mid(i);
  return out;
}

bool QuantileDistribution::monotone() const { return std::is_sorted(values_.begin(), values_.end()); }

std::vector<double> bellman_target(double reward, std::span<const double> next_values, double discount,
                                   bool terminal) {
  if (!std::isfinite(reward)) throw std::domain_error("bellman_target: non-finite reward");
  if (next_values.empty()) throw std::invalid_argument("bellman_target: empty next distribution");
  std::vector<double> y(next_values.size(), reward);
  if (!terminal) {
    for (std::size_t j = 0; j < y.size(); ++j) y[j] = reward + discount * next_values[j];
  }
  return y;
}

std::vector<double> bellman_target(double reward, const QuantileDistribution& next, double discount,
                                   bool terminal) {
  return bellman_target(reward, next.values(), discount, terminal);
}

double pairwise_loss(std::span<const double> predicted, std::span<const double> targets, const LossSpec& loss) {
  check_dims(predicted, targets);
  const auto n = static_cast<std::ptrdiff_t>(predicted.size());
  std::vector<double> rows(predicted.size());
  // Exceptions must not escape an OpenMP region; kernel errors are rethrown below.
  bool failed = false;
#pragma omp parallel for schedule(static) if (n >= static_cast<std::ptrdiff_t>(kParallelMinQuantiles))
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const auto k = static_cast<std::size_t>(i);
    try {
      rows[k] = row_loss(predicted[k], midpoint_fraction(k, predicted.size()), targets, loss);
    } catch (...) {
#pragma omp atomic write
      failed = true;
    }
  }
  if (failed) return reference::pairwise_loss(predicted, targets, loss);
  double total = 0.0;
  for (double r : rows) total += r;
  return total / static_cast<double>(n);
}

double pairwise_loss(const QuantileDistribution& predicted, std::span<const double> targets,
                     const LossSpec& loss) {
  return pairwise_loss(predicted.values(), targets, loss);
}

std::vector<double> pairwise_grad(std::span<const double> predicted, std::span<const double> targets,
                                  const LossSpec& loss) {
  check_dims(predicted, targets);
  const auto n = static_cast<std::ptrdiff_t>(predicted.size());
  const double nd = static_cast<double>(n);
  std::vector<double> grad(predicted.size());
  bool failed = false;
#pragma omp parallel for schedule(static) if (n >= static_cast<std::ptrdiff_t>(kParallelMinQuantiles))
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const auto k = static_cast<std::size_t>(i);
    try {
      grad[k] = row_grad(predicted[k], midpoint_fraction(k, predicted.size()), targets, loss, nd);
    } catch (...) {
#pragma omp atomic write
      failed = true;
    }
  }
  if (failed) return reference::pairwise_grad(predicted, targets, loss);
  return grad;
}

std::vector<double> pairwise_grad(const QuantileDistribution& predicted, std::span<const double> targets,
                                  const LossSpec& loss) {
  return pairwise_grad(predicted.values(), targets, loss);
}

double reference::pairwise_loss(std::span<const double> predicted, std::span<const double> targets,
                                const LossSpec& loss) {
  check_dims(predicted, targets);
  const std::size_t n = predicted.size();
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double tau = midpoint_fraction(i, n);
    for (std::size_t j = 0; j < n; ++j) {
      const double u = targets[j] - predicted[i];
      total += asym_weight(tau, u) * cost(loss, u);
    }
  }
  return total / static_cast<double>(n);
}

std::vector<double> reference::pairwise_grad(std::span<const double> predicted, std::span<const double> targets,
                                             const LossSpec& loss) {
  check_dims(predicted, targets);
  const std::size_t n = predicted.size();
  std::vector<double> grad(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const double tau = midpoint_fraction(i, n);
    double s = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      const double u = targets[j] - predicted[i];
      s -= asym_weight(tau, u) * cost_grad(loss, u);
    }
    grad[i] = s / static_cast<double>(n);
  }
  return grad;
}

std::string_view to_string(RiskMetric m) { return m == RiskMetric::Mean ? "Mean" : "CVaR95"; }

std::optional<RiskMetric> parse_risk_metric(std::string_view name) {
  if (name == "Mean") return RiskMetric::Mean;
  if (name == "CVaR95") return RiskMetric::CVaR95;
  return std::nullopt;
}

double lower_tail_mean(std::span<const double> sorted, double alpha) {
  if (sorted.empty()) throw std::invalid_argument("lower_tail_mean: empty sample");
  if (!(alpha > 0.0 && alpha <= 1.0)) throw std::invalid_argument("lower_tail_mean: alpha must be in (0, 1]");
  const double tail = alpha * static_cast<double>(sorted.size());
  auto full = static_cast<std::size_t>(std::floor(tail + 1e-9));
  full = std::min(full, sorted.size());
  double frac = tail - static_cast<double>(full);
  if (frac < 1e-9) frac = 0.0;
  double s = 0.0;
  for (std::size_t i = 0; i < full; ++i) s += sorted[i];
  if (frac > 0.0 && full < sorted.size()) s += frac * sorted[full];
  return s / tail;
}

double policy_value(std::span<const double> values, RiskMetric metric) {
  if (values.empty()) throw std::invalid_argument("policy_value: empty distribution");
  if (metric == RiskMetric::Mean) {
    double s = 0.0;
    for (double v : values) s += v;
    return s / static_cast<double>(values.size());
  }
  if (values.size() < 20) throw std::invalid_argument("policy_value: CVaR95 needs at least 20 quantiles");
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  return lower_tail_mean(sorted, 0.05);
}

double policy_value(const QuantileDistribution& dist, RiskMetric metric) {
  return policy_value(dist.values(), metric);
}

}  // namespace gqh
