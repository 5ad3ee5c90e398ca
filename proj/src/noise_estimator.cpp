#include "gqh/noise_estimator.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace gqh {

namespace {

std::vector<double> sorted_copy(std::span<const double> xs) {
  std::vector<double> v(xs.begin(), xs.end());
  std::sort(v.begin(), v.end());
  return v;
}

double batch_std(const std::vector<double>& v) {
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

double fold(NoiseStats::Accumulator& acc, NoiseCentering centering, std::size_t batches,
            std::span<const double> values) {
  const auto v = sorted_copy(values);
  if (centering == NoiseCentering::BatchMean) {
    acc.sum_std += batch_std(v);
    return acc.sum_std / static_cast<double>(batches);
  }
  for (double x : v) {
    ++acc.count;
    const double d = x - acc.mean;
    acc.mean += d / static_cast<double>(acc.count);
    acc.m2 += d * (x - acc.mean);
  }
  return std::sqrt(std::max(0.0, acc.m2) / static_cast<double>(acc.count - 1));
}

}  // namespace

NoiseStats observe_batch(NoiseStats stats, std::span<const double> predicted,
                         std::span<const double> target) {
  if (predicted.size() < 2 || target.size() < 2) {
    throw std::invalid_argument("observe_batch: each batch needs at least two values");
  }
  for (double x : predicted) {
    if (!std::isfinite(x)) throw std::domain_error("observe_batch: non-finite predicted value");
  }
  for (double x : target) {
    if (!std::isfinite(x)) throw std::domain_error("observe_batch: non-finite target value");
  }
  ++stats.batches_seen;
  stats.sigma_pred = fold(stats.pred_acc, stats.centering, stats.batches_seen, predicted);
  stats.sigma_target = fold(stats.target_acc, stats.centering, stats.batches_seen, target);
  stats.b = std::fabs(stats.sigma_pred - stats.sigma_target);
  return stats;
}

double current_b(const NoiseStats& stats) {
  return stats.batches_seen == 0 ? stats.fallback_b : stats.b;
}

}  // namespace gqh
