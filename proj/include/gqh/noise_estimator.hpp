#pragma once

#include <cstddef>
#include <span>

namespace gqh {

/// How a batch's spread is measured.
///   BatchMean    sample std of the batch about its own mean, averaged over batches
///   RunningMean  pooled sample std of every value seen so far, about the running mean
enum class NoiseCentering { BatchMean, RunningMean };

/// Running estimates of the predicted-quantile noise (sigma_pred), the
/// target-quantile noise (sigma_target) and their gap b = |sigma_pred - sigma_target|.
struct NoiseStats {
  double sigma_pred = 0.0;
  double sigma_target = 0.0;
  double b = 0.0;
  std::size_t batches_seen = 0;

  /// Returned by current_b before any batch has been observed.
  double fallback_b = 1.0;
  NoiseCentering centering = NoiseCentering::BatchMean;

  struct Accumulator {
    double sum_std = 0.0;  // BatchMean
    std::size_t count = 0;  // RunningMean (Welford)
    double mean = 0.0;
    double m2 = 0.0;
  };
  Accumulator pred_acc;
  Accumulator target_acc;
};

/// Folds one batch of predicted and target quantile values into the estimate.
/// Each batch needs at least two values. Within-batch order does not matter:
/// values are summed in sorted order.
NoiseStats observe_batch(NoiseStats stats, std::span<const double> predicted,
                         std::span<const double> target);

double current_b(const NoiseStats& stats);

}  // namespace gqh
