#include "gqh/normal.hpp"

#include <cmath>
#include <stdexcept>

#include <boost/math/special_functions/erf.hpp>

namespace gqh {

double normal_cdf(double x) { return 0.5 * std::erfc(-x / kSqrtTwo); }

double normal_pdf(double x) { return kInvSqrtTwoPi * std::exp(-0.5 * x * x); }

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    throw std::domain_error("normal_quantile: p must lie in (0, 1)");
  }
  return -kSqrtTwo * boost::math::erfc_inv(2.0 * p);
}

}  // namespace gqh
