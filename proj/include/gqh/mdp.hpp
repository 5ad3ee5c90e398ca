#pragma once

#include <cstddef>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "gqh/environment.hpp"

namespace gqh {

/// One atom of a finite-support distribution.
struct Atom {
  double value = 0.0;
  double prob = 0.0;
};

/// Finite MDP with stochastic finite-support rewards r(s, a).
struct MdpModel {
  std::size_t n_states = 0;
  std::size_t n_actions = 0;
  /// transition[s][a][s'] = P(s' | s, a). Rows of terminal states are unused.
  std::vector<std::vector<std::vector<double>>> transition;
  std::vector<std::vector<std::vector<Atom>>> reward;
  std::vector<bool> terminal;
  std::size_t start_state = 0;
  double discount = 1.0;

  /// Throws std::invalid_argument on shape errors, rows not summing to 1
  /// (within 1e-12), or empty/negative reward supports.
  void validate() const;
};

/// Linear chain s_0 -> ... -> s_{length-1} -> terminal. Action 0 advances with
/// a reward drawn from `noise`; action 1 is a no-op that stays put with reward 0.
/// The terminal state has index `length`.
MdpModel chain_mdp(std::size_t length, std::vector<Atom> noise, double discount);

/// Symmetric `atoms`-point binomial approximation of N(mean, std^2).
std::vector<Atom> binomial_gaussian_support(double mean, double std, std::size_t atoms);

struct OracleDistribution {
  /// Sorted ascending by value, duplicates merged.
  std::vector<Atom> atoms;
  /// Upper bound on the return mass lost by truncating at the horizon
  /// (0 when every path terminated).
  double truncation_bound = 0.0;
  std::size_t paths = 0;
};

/// Exact return distribution of (start, policy[start]) under a fixed policy by
/// exhaustive path enumeration up to `horizon` transitions. Throws
/// std::runtime_error when more than `max_paths` paths would be needed.
OracleDistribution oracle_return_distribution(const MdpModel& mdp, std::span<const std::size_t> policy,
                                              std::size_t start, std::size_t horizon,
                                              std::size_t max_paths = 10'000'000);

/// Same, but the first action is given explicitly.
OracleDistribution oracle_return_distribution(const MdpModel& mdp, std::span<const std::size_t> policy,
                                              std::size_t start, std::size_t first_action, std::size_t horizon,
                                              std::size_t max_paths);

/// Quantile function of a finite distribution evaluated at the n midpoint fractions.
std::vector<double> midpoint_quantiles(std::span<const Atom> sorted_atoms, std::size_t n);

/// Loads an MDP from the JSON description documented in the README.
MdpModel load_mdp(const std::filesystem::path& path);
MdpModel parse_mdp(const std::string& text);

/// Sampling wrapper around an MdpModel.
class MdpEnvironment final : public Environment {
 public:
  explicit MdpEnvironment(MdpModel model);

  std::size_t num_states() const override { return model_.n_states; }
  std::size_t num_actions() const override { return model_.n_actions; }
  double discount() const override { return model_.discount; }
  std::size_t reset(Rng& rng) override;
  StepResult step(std::size_t action, Rng& rng) override;
  std::unique_ptr<Environment> clone() const override { return std::make_unique<MdpEnvironment>(*this); }

  const MdpModel& model() const { return model_; }

 private:
  MdpModel model_;
  std::size_t state_ = 0;
};

}  // namespace gqh
