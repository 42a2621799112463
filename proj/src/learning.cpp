#include "eamdp/learning.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace eamdp {

double Rng::uniform() {
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

std::size_t Rng::below(std::size_t n) {
  if (n == 0) throw std::invalid_argument("Rng::below: empty range");
  const std::uint64_t bound = n;
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % bound;
  std::uint64_t x = engine_();
  while (x >= limit) x = engine_();
  return static_cast<std::size_t>(x % bound);
}

void LearningParams::validate() const {
  if (!(alpha > 0.0 && alpha <= 1.0)) throw std::invalid_argument("alpha must lie in (0, 1]");
  if (!(epsilon >= 0.0 && epsilon <= 1.0)) throw std::invalid_argument("epsilon must lie in [0, 1]");
  if (max_steps_per_episode == 0) throw std::invalid_argument("max_steps_per_episode must be positive");
}

std::size_t epsilon_greedy_action(const QTable& q, std::size_t state, double epsilon, Rng& rng) {
  std::vector<std::size_t> available;
  for (std::size_t a = 0; a < q.n_actions(); ++a)
    if (q.is_available(state, a)) available.push_back(a);
  if (available.empty())
    throw std::invalid_argument("epsilon_greedy_action: state " + std::to_string(state) +
                                " has no available action");

  const double coin = rng.uniform();
  if (coin < epsilon) return available[rng.below(available.size())];
  return *q.best_action(state);
}

void q_update(QTable& q, const StepSample& step, double alpha, double gamma) {
  const double future = step.next_terminal ? 0.0 : q.max_value(step.next_state).value_or(0.0);
  const double current = q(step.state, step.action);
  q.set(step.state, step.action, current + alpha * (step.reward + gamma * future - current));
}

namespace {

std::size_t sample_successor(std::span<const Transition> row, Rng& rng) {
  if (row.size() == 1) return row.front().next;
  const double u = rng.uniform();
  double cumulative = 0.0;
  for (const auto& t : row) {
    cumulative += t.probability;
    if (u < cumulative) return t.next;
  }
  return row.back().next;
}

}  // namespace

LearningResult ea_q_learning(const EAMDP& mdp, std::size_t start_state, const LearningParams& params) {
  params.validate();
  if (start_state >= mdp.n_states()) throw std::out_of_range("ea_q_learning: start state out of range");
  if (mdp.is_terminal(start_state))
    throw std::invalid_argument("ea_q_learning: start state " + std::to_string(start_state) +
                                " is terminal");

  Rng rng(params.seed);
  LearningResult result{QTable(mdp), {}};
  result.logs.reserve(params.episodes);
  std::vector<std::size_t> visits(mdp.n_states() * mdp.n_actions(), 0);
  const auto rewards = mdp.state_rewards();
  const double gamma = mdp.gamma();

  for (std::size_t episode = 0; episode < params.episodes; ++episode) {
    EpisodeLog log{episode, 0, 0.0, 0.0};
    double discount = 1.0;
    std::size_t s = start_state;
    while (log.steps < params.max_steps_per_episode) {
      const std::size_t a = epsilon_greedy_action(result.q, s, params.epsilon, rng);
      const std::size_t next = sample_successor(mdp.transitions(s, a), rng);
      const double r = rewards[next];
      const bool terminal = mdp.is_terminal(next);

      double alpha = params.alpha;
      if (params.decay_alpha) {
        auto& count = visits[s * mdp.n_actions() + a];
        alpha = 1.0 / (1.0 + static_cast<double>(count));
        ++count;
      }
      q_update(result.q, {s, a, r, next, terminal}, alpha, gamma);

      log.undiscounted_return += r;
      log.discounted_return += discount * r;
      discount *= gamma;
      ++log.steps;
      s = next;
      if (terminal) break;
    }
    result.logs.push_back(log);
  }
  return result;
}

}  // namespace eamdp
