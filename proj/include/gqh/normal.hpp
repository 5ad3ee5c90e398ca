#pragma once

namespace gqh {

inline constexpr double kSqrtTwoOverPi = 0.79788456080286535588;  // sqrt(2/pi)
inline constexpr double kInvSqrtTwoPi = 0.39894228040143267794;   // 1/sqrt(2*pi)
inline constexpr double kSqrtTwo = 1.41421356237309504880;

/// Standard normal CDF, evaluated through erfc so the lower tail keeps full
/// relative precision.
double normal_cdf(double x);

double normal_pdf(double x);

/// Inverse of normal_cdf on (0, 1).
double normal_quantile(double p);

}  // namespace gqh
