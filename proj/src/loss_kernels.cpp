#include "gqh/loss_kernels.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "gqh/normal.hpp"

namespace gqh {

namespace {

void check_finite(double u, const char* who) {
  if (!std::isfinite(u)) {
    throw std::domain_error(std::string(who) + ": non-finite error value");
  }
}

void check_positive(double t, const char* who) {
  if (!(t > 0.0) || !std::isfinite(t)) {
    throw std::domain_error(std::string(who) + ": threshold must be positive and finite");
  }
}

double sign(double u) { return u > 0.0 ? 1.0 : (u < 0.0 ? -1.0 : 0.0); }

// Scale-free GL kernel g(x) = x erf(x/sqrt2) + sqrt(2/pi)(exp(-x^2/2) - 1), x >= 0.
// Below x = 0.05 the two O(x^2) terms cancel badly; use the Taylor series
//   sqrt(2/pi) * sum_n (-1)^n x^(2n+2) / (2^n n! (2n+1)(2n+2)).
double gl_unit(double x) {
  if (x < 0.05) {
    const double x2 = x * x;
    return kSqrtTwoOverPi * x2 * (0.5 + x2 * (-1.0 / 24.0 + x2 * (1.0 / 240.0 - x2 / 2688.0)));
  }
  return x * std::erf(x / kSqrtTwo) + kSqrtTwoOverPi * std::expm1(-0.5 * x * x);
}

}  // namespace

std::string_view to_string(LossVariant v) {
  switch (v) {
    case LossVariant::QR: return "QR";
    case LossVariant::QuantileHuber: return "QuantileHuber";
    case LossVariant::GL: return "GL";
    case LossVariant::GLA: return "GLA";
  }
  return "?";
}

std::optional<LossVariant> parse_loss_variant(std::string_view name) {
  if (name == "QR") return LossVariant::QR;
  if (name == "QuantileHuber") return LossVariant::QuantileHuber;
  if (name == "GL") return LossVariant::GL;
  if (name == "GLA") return LossVariant::GLA;
  return std::nullopt;
}

void LossSpec::validate() const {
  if (!std::isfinite(threshold) || threshold < 0.0) {
    throw std::invalid_argument("LossSpec: threshold must be finite and >= 0");
  }
}

std::string LossSpec::label() const {
  std::string out(to_string(variant));
  if (variant == LossVariant::QR) return out;
  if (adaptive) return out + "(adaptive)";
  const char* name = variant == LossVariant::QuantileHuber ? "k" : "b";
  char buf[64];
  std::snprintf(buf, sizeof buf, "(%s=%g)", name, threshold);
  return out + buf;
}

double huber(double u, double k) {
  check_finite(u, "huber");
  check_positive(k, "huber");
  const double a = std::fabs(u);
  return a < k ? 0.5 * u * u : k * (a - 0.5 * k);
}

double huber_grad(double u, double k) {
  check_finite(u, "huber_grad");
  check_positive(k, "huber_grad");
  return std::fabs(u) < k ? u : k * sign(u);
}

double c_gl(double u, double b) {
  check_finite(u, "c_gl");
  check_positive(b, "c_gl");
  const double x = std::fabs(u) / b;
  if (!std::isfinite(x)) return std::fabs(u) - b * kSqrtTwoOverPi;
  return std::fmax(0.0, b * gl_unit(x));
}

double c_gl_grad(double u, double b) {
  check_finite(u, "c_gl_grad");
  check_positive(b, "c_gl_grad");
  return std::erf(u / (b * kSqrtTwo));
}

double c_gla(double u, double b) {
  check_finite(u, "c_gla");
  check_positive(b, "c_gla");
  const double a = std::fabs(u);
  return a < b ? u * u * kInvSqrtTwoPi / b : a - b * kSqrtTwoOverPi;
}

double c_gla_grad(double u, double b) {
  check_finite(u, "c_gla_grad");
  check_positive(b, "c_gla_grad");
  return std::fabs(u) <= b ? 2.0 * u * kInvSqrtTwoPi / b : sign(u);
}

double cost(const LossSpec& spec, double u) {
  check_finite(u, "cost");
  const double t = spec.threshold;
  if (spec.variant == LossVariant::QR || t == 0.0) return std::fabs(u);
  switch (spec.variant) {
    case LossVariant::QuantileHuber: return huber(u, t) / t;
    case LossVariant::GL: return c_gl(u, t);
    case LossVariant::GLA: return c_gla(u, t);
    case LossVariant::QR: break;
  }
  return std::fabs(u);
}

double cost_grad(const LossSpec& spec, double u) {
  check_finite(u, "cost_grad");
  const double t = spec.threshold;
  if (spec.variant == LossVariant::QR || t == 0.0) return sign(u);
  switch (spec.variant) {
    case LossVariant::QuantileHuber: return huber_grad(u, t) / t;
    case LossVariant::GL: return c_gl_grad(u, t);
    case LossVariant::GLA: return c_gla_grad(u, t);
    case LossVariant::QR: break;
  }
  return sign(u);
}

}  // namespace gqh
