#pragma once

#include <cstddef>
#include <span>

namespace gqh {

/// Univariate normal N(mean, std). std == 0 is a Dirac delta at `mean`.
struct Gaussian {
  double mean = 0.0;
  double std = 0.0;
};

/// Closed-form 1-Wasserstein distance between two Gaussians:
///   |dm| (1 - 2 Phi(-|dm|/|ds|)) + |ds| sqrt(2/pi) exp(-dm^2 / (2 ds^2))
/// with dm, ds the differences of means and stds. Equal stds give |dm|.
double w1_closed(const Gaussian& p, const Gaussian& q);

/// Oracle: integral over t in [eps, 1-eps] of |F_p^-1(t) - F_q^-1(t)|, with
/// eps = 1e-7, by a composite midpoint rule on a grid graded toward both
/// endpoints. `points` >= 1000. Parallel over fixed blocks, so the result does
/// not depend on the thread count.
double w1_quadrature(const Gaussian& p, const Gaussian& q, std::size_t points);

/// Mean absolute difference of two equal-length ascending sample sets.
double w1_empirical(std::span<const double> xs, std::span<const double> ys);

namespace reference {

/// Single-threaded, single-accumulator version of w1_quadrature.
double w1_quadrature(const Gaussian& p, const Gaussian& q, std::size_t points);

}  // namespace reference

}  // namespace gqh
