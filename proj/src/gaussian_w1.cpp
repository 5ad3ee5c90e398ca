#include "gqh/gaussian_w1.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "gqh/normal.hpp"

namespace gqh {

namespace {

constexpr double kClip = 1e-7;
constexpr std::size_t kBlocks = 64;

void check(const Gaussian& g, const char* who) {
  if (!std::isfinite(g.mean) || !std::isfinite(g.std) || g.std < 0.0) {
    throw std::domain_error(std::string(who) + ": Gaussian parameters must be finite with std >= 0");
  }
}

void check_points(std::size_t points) {
  if (points < 1000) throw std::invalid_argument("w1_quadrature: points must be >= 1000");
}

// t(v) = eps + (1 - 2 eps)(1 - cos(pi v)) / 2 on v in [0, 1]; the cosine
// grading puts cells of size O(h^2) next to the unbounded tails.
struct Node {
  double z;
  double weight;
};

Node node(std::size_t k, double h) {
  const double v = (static_cast<double>(k) + 0.5) * h;
  const double span = 1.0 - 2.0 * kClip;
  const double t = kClip + span * 0.5 * (1.0 - std::cos(std::numbers::pi * v));
  const double jac = span * 0.5 * std::numbers::pi * std::sin(std::numbers::pi * v);
  return {normal_quantile(t), jac * h};
}

double cell_contribution(const Gaussian& p, const Gaussian& q, const Node& nd) {
  const double fp = p.mean + p.std * nd.z;
  const double fq = q.mean + q.std * nd.z;
  return std::fabs(fp - fq) * nd.weight;
}

// Both quantile functions are affine in the standard normal quantile, so the
// nodes only depend on the point count. Keep the most recent table.
std::shared_ptr<const std::vector<Node>> node_table(std::size_t points) {
  static std::mutex mu;
  static std::shared_ptr<const std::vector<Node>> cached;
  {
    std::lock_guard<std::mutex> lock(mu);
    if (cached && cached->size() == points) return cached;
  }
  auto table = std::make_shared<std::vector<Node>>(points);
  const double h = 1.0 / static_cast<double>(points);
  const auto n = static_cast<std::ptrdiff_t>(points);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t k = 0; k < n; ++k) (*table)[static_cast<std::size_t>(k)] = node(static_cast<std::size_t>(k), h);
  std::lock_guard<std::mutex> lock(mu);
  cached = table;
  return cached;
}

}  // namespace

double w1_closed(const Gaussian& p, const Gaussian& q) {
  check(p, "w1_closed");
  check(q, "w1_closed");
  const double dm = std::fabs(p.mean - q.mean);
  const double ds = std::fabs(p.std - q.std);
  if (ds == 0.0) return dm;
  const double r = dm / ds;
  return dm * (1.0 - 2.0 * normal_cdf(-r)) + ds * kSqrtTwoOverPi * std::exp(-0.5 * r * r);
}

double w1_quadrature(const Gaussian& p, const Gaussian& q, std::size_t points) {
  check(p, "w1_quadrature");
  check(q, "w1_quadrature");
  check_points(points);
  const auto table = node_table(points);
  const std::vector<Node>& nodes = *table;
  std::array<double, kBlocks> partial{};
  const auto n = static_cast<std::ptrdiff_t>(kBlocks);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t blk = 0; blk < n; ++blk) {
    const std::size_t lo = points * static_cast<std::size_t>(blk) / kBlocks;
    const std::size_t hi = points * static_cast<std::size_t>(blk + 1) / kBlocks;
    double s = 0.0;
    for (std::size_t k = lo; k < hi; ++k) s += cell_contribution(p, q, nodes[k]);
    partial[static_cast<std::size_t>(blk)] = s;
  }
  double total = 0.0;
  for (double s : partial) total += s;
  return total;
}

double reference::w1_quadrature(const Gaussian& p, const Gaussian& q, std::size_t points) {
  check(p, "w1_quadrature");
  check(q, "w1_quadrature");
  check_points(points);
  const double h = 1.0 / static_cast<double>(points);
  double total = 0.0;
  for (std::size_t k = 0; k < points; ++k) total += cell_contribution(p, q, node(k, h));
  return total;
}

double w1_empirical(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size() || xs.empty()) {
    throw std::invalid_argument("w1_empirical: inputs must have equal nonzero length");
  }
  if (!std::is_sorted(xs.begin(), xs.end()) || !std::is_sorted(ys.begin(), ys.end())) {
    throw std::invalid_argument("w1_empirical: inputs must be sorted ascending");
  }
  double s = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) s += std::fabs(xs[i] - ys[i]);
  return s / static_cast<double>(xs.size());
}

}  // namespace gqh
