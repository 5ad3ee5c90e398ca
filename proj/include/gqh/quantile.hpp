#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "gqh/loss_kernels.hpp"

namespace gqh {

/// Midpoint fraction (2i + 1) / (2n) of the i-th of n quantiles (0-based).
inline double midpoint_fraction(std::size_t i, std::size_t n) {
  return (2.0 * static_cast<double>(i) + 1.0) / (2.0 * static_cast<double>(n));
}

/// Return distribution represented as a uniform mixture of N Diracs located at
/// the quantile values for the midpoint fractions (2i+1)/(2N).
class QuantileDistribution {
 public:
  explicit QuantileDistribution(std::vector<double> values);
  static QuantileDistribution zeros(std::size_t n) { return QuantileDistribution(std::vector<double>(n, 0.0)); }

  std::size_t size() const { return values_.size(); }
  std::span<const double> values() const { return values_; }
  std::span<double> values() { return values_; }
  double fraction_mid(std::size_t i) const { return midpoint_fraction(i, values_.size()); }
  std::vector<double> fractions_mid() const;

  /// False when learned quantiles cross (diagnostic only).
  bool monotone() const;

 private:
  std::vector<double> values_;
};

/// y_j = reward + discount * theta_j, or reward everywhere when terminal.
std::vector<double> bellman_target(double reward, std::span<const double> next_values, double discount,
                                   bool terminal);
std::vector<double> bellman_target(double reward, const QuantileDistribution& next, double discount,
                                   bool terminal);

/// (1/N) sum_i sum_j |tau_i - [u_ij < 0]| cost(u_ij), u_ij = y_j - theta_i.
/// Rows are evaluated in parallel once N reaches kParallelMinQuantiles.
double pairwise_loss(std::span<const double> predicted, std::span<const double> targets, const LossSpec& loss);
double pairwise_loss(const QuantileDistribution& predicted, std::span<const double> targets,
                     const LossSpec& loss);

/// Gradient of pairwise_loss with respect to each theta_i.
std::vector<double> pairwise_grad(std::span<const double> predicted, std::span<const double> targets,
                                  const LossSpec& loss);
std::vector<double> pairwise_grad(const QuantileDistribution& predicted, std::span<const double> targets,
                                  const LossSpec& loss);

inline constexpr std::size_t kParallelMinQuantiles = 256;

namespace reference {

// Serial double loops; the parallel kernels are tested against these.
double pairwise_loss(std::span<const double> predicted, std::span<const double> targets, const LossSpec& loss);
std::vector<double> pairwise_grad(std::span<const double> predicted, std::span<const double> targets,
                                  const LossSpec& loss);

}  // namespace reference

enum class RiskMetric { Mean, CVaR95 };

std::string_view to_string(RiskMetric m);
std::optional<RiskMetric> parse_risk_metric(std::string_view name);

/// Mean of the lowest `alpha` fraction of an equally weighted sample, with a
/// fractional weight on the boundary value. Input must be sorted ascending.
double lower_tail_mean(std::span<const double> sorted, double alpha);

/// Mean: mixture mean. CVaR95: mean of the lowest 5% of quantile values
/// (requires N >= 20).
double policy_value(std::span<const double> values, RiskMetric metric);
double policy_value(const QuantileDistribution& dist, RiskMetric metric);

}  // namespace gqh
