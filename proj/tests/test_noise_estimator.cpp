#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>
#include <vector>

#include "gqh/loss_kernels.hpp"
#include "gqh/noise_estimator.hpp"

using namespace gqh;

namespace {

using Vec = std::vector<double>;

// One batch: a random location shared by the batch plus i.i.d. N(0, sd^2) noise,
// so the only spread inside a batch is the injected noise.
Vec noisy_batch(std::mt19937_64& rng, std::size_t n, double sd) {
  std::normal_distribution<double> loc(0.0, 3.0), noise(0.0, sd);
  const double c = loc(rng);
  Vec v(n);
  for (double& x : v) x = c + noise(rng);
  return v;
}

// E[s] / sigma for a Bessel-corrected std of n normal draws.
double c4(std::size_t n) {
  const double k = static_cast<double>(n);
  return std::sqrt(2.0 / (k - 1.0)) * std::exp(std::lgamma(k / 2.0) - std::lgamma((k - 1.0) / 2.0));
}

}  // namespace

TEST_CASE("observe_batch examples") {
  NoiseStats s = observe_batch(NoiseStats{}, Vec{1, 1, 1, 1}, Vec{2, 2, 2, 2});
  CHECK(s.sigma_pred == 0.0);
  CHECK(s.sigma_target == 0.0);
  CHECK(s.b == 0.0);
  CHECK(current_b(s) == 0.0);
  // b = 0 sends cost dispatch to |u|.
  CHECK(cost(LossSpec::gl(current_b(s)), -1.5) == 1.5);

  s = observe_batch(NoiseStats{}, Vec{0, 2}, Vec{0, 4});
  CHECK(s.sigma_pred == doctest::Approx(std::sqrt(2.0)).epsilon(1e-15));
  CHECK(s.sigma_target == doctest::Approx(2.0 * std::sqrt(2.0)).epsilon(1e-15));
  CHECK(s.b == doctest::Approx(std::sqrt(2.0)).epsilon(1e-15));
  CHECK(current_b(s) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-15));
  CHECK(s.batches_seen == 1);
}

TEST_CASE("current_b falls back before any batch") {
  CHECK(current_b(NoiseStats{}) == 1.0);
  NoiseStats s;
  s.fallback_b = 0.3;
  CHECK(current_b(s) == 0.3);
}

TEST_CASE("observe_batch errors") {
  CHECK_THROWS_AS(observe_batch(NoiseStats{}, Vec{1}, Vec{1, 2}), std::invalid_argument);
  CHECK_THROWS_AS(observe_batch(NoiseStats{}, Vec{1, 2}, Vec{}), std::invalid_argument);
  CHECK_THROWS_AS(observe_batch(NoiseStats{}, Vec{1, NAN}, Vec{1, 2}), std::domain_error);
}

TEST_CASE("averaging is arithmetic across batches") {
  NoiseStats s = observe_batch(NoiseStats{}, Vec{0, 2}, Vec{0, 0});
  s = observe_batch(s, Vec{0, 4}, Vec{0, 0});
  CHECK(s.sigma_pred == doctest::Approx(1.5 * std::sqrt(2.0)));
  CHECK(s.b == doctest::Approx(1.5 * std::sqrt(2.0)));
}

TEST_CASE("synthetic noise 0.1 vs 0.5 gives b = 0.4") {
  for (auto centering : {NoiseCentering::BatchMean, NoiseCentering::RunningMean}) {
    std::mt19937_64 rng(7);
    NoiseStats s;
    s.centering = centering;
    for (int i = 0; i < 10000; ++i) {
      if (centering == NoiseCentering::RunningMean) {
        // Pooled centering only sees pure noise when locations do not move.
        std::normal_distribution<double> a(0.0, 0.1), b(0.0, 0.5);
        Vec p(32), t(32);
        for (double& x : p) x = 1.0 + a(rng);
        for (double& x : t) x = 1.0 + b(rng);
        s = observe_batch(s, p, t);
      } else {
        s = observe_batch(s, noisy_batch(rng, 32, 0.1), noisy_batch(rng, 32, 0.5));
      }
    }
    CHECK(s.b >= 0.38);
    CHECK(s.b <= 0.42);
    CHECK(s.b == doctest::Approx(std::fabs(s.sigma_pred - s.sigma_target)));
  }
}

TEST_CASE("scale equivariance") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> scale(0.01, 100.0), sd(0.0, 2.0);
  for (int trial = 0; trial < 50; ++trial) {
    const double c = scale(rng);
    NoiseStats a, b;
    for (int k = 0; k < 20; ++k) {
      Vec p = noisy_batch(rng, 8, sd(rng)), t = noisy_batch(rng, 8, sd(rng));
      a = observe_batch(a, p, t);
      for (double& x : p) x *= c;
      for (double& x : t) x *= c;
      b = observe_batch(b, p, t);
    }
    CHECK(std::fabs(b.sigma_pred - c * a.sigma_pred) <= 1e-9 * std::max(1.0, c * a.sigma_pred));
    CHECK(std::fabs(b.sigma_target - c * a.sigma_target) <= 1e-9 * std::max(1.0, c * a.sigma_target));
    CHECK(std::fabs(b.b - c * a.b) <= 1e-9 * std::max(1.0, c * a.sigma_target));
  }
}

TEST_CASE("order within a batch does not matter") {
  std::mt19937_64 rng(9);
  for (auto centering : {NoiseCentering::BatchMean, NoiseCentering::RunningMean}) {
    NoiseStats a, b;
    a.centering = b.centering = centering;
    for (int k = 0; k < 30; ++k) {
      Vec p = noisy_batch(rng, 17, 0.7), t = noisy_batch(rng, 17, 0.2);
      a = observe_batch(a, p, t);
      std::shuffle(p.begin(), p.end(), rng);
      std::shuffle(t.begin(), t.end(), rng);
      b = observe_batch(b, p, t);
      REQUIRE(a.sigma_pred == b.sigma_pred);
      REQUIRE(a.sigma_target == b.sigma_target);
      REQUIRE(a.b == b.b);
    }
  }
}

TEST_CASE("running estimate converges") {
  // Across independent replications the error at checkpoints 100, 1000 and
  // 10000 batches shrinks, and each checkpoint stays within 3 standard errors.
  constexpr std::size_t n = 16;
  constexpr double sigma = 0.5;
  const double expected = c4(n) * sigma;
  const double sd_s = sigma * std::sqrt(1.0 - c4(n) * c4(n));
  const std::vector<std::size_t> checkpoints = {100, 1000, 10000};
  std::vector<double> sq_err(checkpoints.size(), 0.0);
  constexpr int reps = 40;
  int outside = 0;
  std::mt19937_64 rng(21);
  for (int r = 0; r < reps; ++r) {
    NoiseStats s;
    std::size_t next = 0;
    for (std::size_t t = 1; t <= checkpoints.back(); ++t) {
      s = observe_batch(s, noisy_batch(rng, n, sigma), noisy_batch(rng, n, 0.1));
      if (t == checkpoints[next]) {
        const double err = s.sigma_pred - expected;
        const double se = sd_s / std::sqrt(static_cast<double>(t));
        if (std::fabs(err) > 3.0 * se) ++outside;
        sq_err[next] += err * err;
        ++next;
      }
    }
  }
  // 120 checks at 3 SE: expect about 0.3 misses.
  CHECK(outside <= 3);
  for (std::size_t i = 0; i < checkpoints.size(); ++i) {
    const double rmse = std::sqrt(sq_err[i] / reps);
    const double se = sd_s / std::sqrt(static_cast<double>(checkpoints[i]));
    CHECK(rmse <= 1.5 * se);
    if (i > 0) CHECK(rmse < std::sqrt(sq_err[i - 1] / reps));
  }
}
