#pragma once

#include <optional>
#include <string>
#include <string_view>

namespace gqh {

/// Members of the quantile loss family.
///   QR            plain quantile regression, cost |u|
///   QuantileHuber Huber kernel scaled by 1/k
///   GL            Gaussian 1-Wasserstein kernel with std gap b, shifted to vanish at 0
///   GLA           two-branch Taylor approximation of GL
enum class LossVariant { QR, QuantileHuber, GL, GLA };

std::string_view to_string(LossVariant v);
std::optional<LossVariant> parse_loss_variant(std::string_view name);

struct LossSpec {
  LossVariant variant = LossVariant::QR;
  /// k for QuantileHuber, b for GL/GLA. Ignored by QR.
  double threshold = 1.0;
  /// When set, the training loop overwrites `threshold` with the noise
  /// estimate once per epoch.
  bool adaptive = false;

  static LossSpec qr() { return {LossVariant::QR, 0.0, false}; }
  static LossSpec quantile_huber(double k, bool adaptive = false) {
    return {LossVariant::QuantileHuber, k, adaptive};
  }
  static LossSpec gl(double b, bool adaptive = false) { return {LossVariant::GL, b, adaptive}; }
  static LossSpec gla(double b, bool adaptive = false) { return {LossVariant::GLA, b, adaptive}; }

  /// Throws std::invalid_argument when the threshold is negative or non-finite.
  void validate() const;

  /// Short human-readable label, e.g. "GLA(b=0.5)" or "GL(adaptive)".
  std::string label() const;
};

// Scalar kernels. All reject non-finite u and non-positive thresholds with
// std::domain_error.

/// Huber loss: u^2/2 inside |u| < k, k(|u| - k/2) outside.
double huber(double u, double k);
double huber_grad(double u, double k);

/// Gaussian 1-Wasserstein kernel:
///   |u| erf(|u| / (b sqrt 2)) + b sqrt(2/pi) (exp(-u^2 / 2b^2) - 1)
/// Nonnegative, zero only at u = 0, bounded above by |u|.
double c_gl(double u, double b);

/// dC_GL/du. The CDF and exponential terms cancel in the derivative, leaving
/// erf(u / (b sqrt 2)); the slope is therefore bounded by 1 in magnitude.
double c_gl_grad(double u, double b);

/// u^2 / (b sqrt(2 pi)) inside |u| < b, |u| - b sqrt(2/pi) outside. Note that
/// the two branches do not meet at |u| = b.
double c_gla(double u, double b);

/// Subgradient of c_gla; the breakpoint |u| = b takes the quadratic-branch slope.
double c_gla_grad(double u, double b);

/// Dispatch over the family: |u|, huber(u,k)/k, c_gl or c_gla. A zero threshold
/// for QuantileHuber, GL or GLA yields the analytic limit |u|.
double cost(const LossSpec& spec, double u);
double cost_grad(const LossSpec& spec, double u);

}  // namespace gqh
