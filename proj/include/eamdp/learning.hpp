#pragma once

// Tabular EA epsilon-greedy Q-learning.

#include <cstddef>
#include <cstdint>
#include <random>
#include <vector>

#include "eamdp/mdp.hpp"

namespace eamdp {

/// Seeded 64-bit generator (std::mt19937_64, whose output sequence is fixed
/// by the standard). Draws are converted without std distributions so the
/// sequence of doubles and indices is identical on every platform.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform double in [0, 1) from the top 53 bits of one engine output.
  double uniform();
  /// Uniform integer in [0, n) by rejection; usually one engine output.
  std::size_t below(std::size_t n);

 private:
  std::mt19937_64 engine_;
};

struct LearningParams {
  double alpha = 0.1;
  double epsilon = 0.1;
  std::size_t episodes = 20000;
  std::size_t max_steps_per_episode = 500;
  std::uint64_t seed = 20240101;
  /// Use alpha = 1 / (1 + visits(s, a)) instead of the constant alpha.
  bool decay_alpha = false;

  /// Throws std::invalid_argument on out-of-range values.
  void validate() const;
};

struct EpisodeLog {
  std::size_t episode_index = 0;
  std::size_t steps = 0;
  double undiscounted_return = 0.0;
  double discounted_return = 0.0;

  friend bool operator==(const EpisodeLog&, const EpisodeLog&) = default;
};

/// Draw order: one uniform() for the explore/exploit coin (always drawn),
/// then one below(#available) only when exploring (coin < epsilon).
/// Exploitation picks the lowest-index maximiser. Throws std::invalid_argument
/// when the state has no available action.
std::size_t epsilon_greedy_action(const QTable& q, std::size_t state, double epsilon, Rng& rng);

struct StepSample {
  std::size_t state;
  std::size_t action;
  double reward;
  std::size_t next_state;
  bool next_terminal;
};

/// Q(s,a) += alpha [r + gamma max_a' Q(s',a') - Q(s,a)], with the max term
/// zero when s' is terminal.
void q_update(QTable& q, const StepSample& step, double alpha, double gamma);

struct LearningResult {
  QTable q;
  std::vector<EpisodeLog> logs;
};

/// Runs params.episodes episodes from start_state. Each episode ends on a
/// terminal state or after max_steps_per_episode steps. Stochastic
/// transition rows consume one uniform() per step; deterministic rows none.
LearningResult ea_q_learning(const EAMDP& mdp, std::size_t start_state, const LearningParams& params);

}  // namespace eamdp
