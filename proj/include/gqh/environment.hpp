#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <random>

namespace gqh {

using Rng = std::mt19937_64;

struct StepResult {
  std::size_t next_state = 0;
  double reward = 0.0;
  bool terminal = false;
};

/// Episodic environment with finite state and action indices. All randomness
/// comes from the caller's generator, so a seeded stream is reproducible.
class Environment {
 public:
  virtual ~Environment() = default;

  virtual std::size_t num_states() const = 0;
  virtual std::size_t num_actions() const = 0;
  virtual double discount() const = 0;

  virtual std::size_t reset(Rng& rng) = 0;
  virtual StepResult step(std::size_t action, Rng& rng) = 0;

  virtual std::unique_ptr<Environment> clone() const = 0;
};

}  // namespace gqh
