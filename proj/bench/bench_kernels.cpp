// Serial reference vs OpenMP kernels: pairwise quantile loss/gradient and the
// quadrature W1 oracle.

#include <chrono>
#include <cstdio>
#include <random>
#include <vector>

#include <omp.h>

#include "gqh/gaussian_w1.hpp"
#include "gqh/quantile.hpp"

namespace {

template <class F>
double time_ms(F&& f, int reps) {
  const auto t0 = std::chrono::steady_clock::now();
  for (int r = 0; r < reps; ++r) f();
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count() / reps;
}

volatile double sink = 0.0;

}  // namespace

int main() {
  std::printf("threads: %d\n", omp_get_max_threads());
  std::mt19937_64 rng(7);
  std::normal_distribution<double> g(0.0, 1.0);
  const auto loss = gqh::LossSpec::gl(0.7);

  std::printf("%-28s %8s %12s %12s %8s\n", "kernel", "N", "serial_ms", "omp_ms", "speedup");
  for (std::size_t n : {32, 256, 1024, 4096}) {
    std::vector<double> pred(n), targ(n);
    for (auto& x : pred) x = g(rng);
    for (auto& x : targ) x = g(rng);
    const int reps = n <= 256 ? 200 : 5;
    const double s = time_ms([&] { sink = gqh::reference::pairwise_loss(pred, targ, loss); }, reps);
    const double p = time_ms([&] { sink = gqh::pairwise_loss(pred, targ, loss); }, reps);
    std::printf("%-28s %8zu %12.4f %12.4f %8.2f\n", "pairwise_loss GL", n, s, p, s / p);
    const double sg = time_ms([&] { sink = gqh::reference::pairwise_grad(pred, targ, loss)[0]; }, reps);
    const double pg = time_ms([&] { sink = gqh::pairwise_grad(pred, targ, loss)[0]; }, reps);
    std::printf("%-28s %8zu %12.4f %12.4f %8.2f\n", "pairwise_grad GL", n, sg, pg, sg / pg);
  }
  for (std::size_t points : {100000, 1000000}) {
    const gqh::Gaussian p{1.0, 1.0}, q{0.0, 0.5};
    const double s = time_ms([&] { sink = gqh::reference::w1_quadrature(p, q, points); }, 3);
    const double o = time_ms([&] { sink = gqh::w1_quadrature(p, q, points); }, 3);
    std::printf("%-28s %8zu %12.4f %12.4f %8.2f\n", "w1_quadrature", points, s, o, s / o);
  }
  return 0;
}
