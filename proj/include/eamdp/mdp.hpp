#pragma once

// The EA-MDP data model and exact planning: Bellman backups, value
// iteration, policy evaluation and greedy policy extraction.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "eamdp/quantum.hpp"

namespace eamdp {

/// Tolerance on transition and policy row sums.
inline constexpr double kProbabilityTolerance = 1e-12;
/// Two lookahead values closer than this are treated as a tie.
inline constexpr double kTieTolerance = 1e-12;

inline constexpr double kDefaultValueTolerance = 1e-10;
inline constexpr std::size_t kDefaultMaxIterations = 100000;

struct Transition {
  std::size_t next;
  double probability;
};

/// Everything needed to build an EAMDP. Transition rows are indexed by
/// state * n_actions + action; rows of unavailable pairs are ignored.
struct MdpDefinition {
  std::size_t n_states = 0;
  std::size_t n_actions = 0;
  std::vector<bool> available;
  std::vector<std::vector<Transition>> transitions;
  double gamma = 0.0;
  std::vector<StateVector> ea_states;
  std::optional<OutcomeSet> outcomes;
  RewardSpec rewards;
  std::vector<std::size_t> terminals;
};

/// Epistemically-ambivalent MDP. Immutable after construction; the reward
/// of entering each state is measured once at construction.
///
/// Terminal states absorb: they have no available actions and value zero.
class EAMDP {
 public:
  explicit EAMDP(MdpDefinition def);

  std::size_t n_states() const noexcept { return n_states_; }
  std::size_t n_actions() const noexcept { return n_actions_; }
  double gamma() const noexcept { return gamma_; }

  bool is_available(std::size_t s, std::size_t a) const;
  std::vector<std::size_t> available_actions(std::size_t s) const;
  bool is_terminal(std::size_t s) const { return terminal_.at(s); }
  std::span<const Transition> transitions(std::size_t s, std::size_t a) const;

  const StateVector& ea_state(std::size_t s) const { return ea_states_.at(s); }
  const OutcomeSet& outcomes() const noexcept { return outcomes_; }
  const RewardSpec& rewards() const noexcept { return rewards_; }
  std::vector<std::size_t> terminals() const;

  /// r(s~(s')) for every state s'.
  std::span<const double> state_rewards() const noexcept { return state_rewards_; }

 private:
  std::size_t n_states_;
  std::size_t n_actions_;
  std::vector<bool> available_;
  std::vector<std::vector<Transition>> transitions_;
  double gamma_;
  std::vector<StateVector> ea_states_;
  OutcomeSet outcomes_;
  RewardSpec rewards_;
  std::vector<bool> terminal_;
  std::vector<double> state_rewards_;
};

/// Expected reward of entering each state, measured on its EA state.
std::vector<double> state_reward_table(const EAMDP& mdp);

struct ValueFunction {
  std::vector<double> values;

  double operator[](std::size_t s) const { return values.at(s); }
  std::size_t size() const noexcept { return values.size(); }
};

double sup_distance(const ValueFunction& a, const ValueFunction& b);

/// State-action values. Unavailable entries hold -infinity and never win a
/// max or argmax.
class QTable {
 public:
  QTable() = default;
  /// Zero on available entries.
  explicit QTable(const EAMDP& mdp);

  std::size_t n_states() const noexcept { return n_states_; }
  std::size_t n_actions() const noexcept { return n_actions_; }

  bool is_available(std::size_t s, std::size_t a) const { return available_.at(index(s, a)); }
  double operator()(std::size_t s, std::size_t a) const { return values_.at(index(s, a)); }
  void set(std::size_t s, std::size_t a, double value);

  /// Lowest-index action among those within kTieTolerance of the row max.
  std::optional<std::size_t> best_action(std::size_t s) const;
  /// Max over available entries; nullopt when the row has none.
  std::optional<double> max_value(std::size_t s) const;

  friend bool operator==(const QTable&, const QTable&) = default;

 private:
  std::size_t index(std::size_t s, std::size_t a) const { return s * n_actions_ + a; }

  std::size_t n_states_ = 0;
  std::size_t n_actions_ = 0;
  std::vector<bool> available_;
  std::vector<double> values_;
};

/// Stochastic policy pi(a|s). Rows of terminal states are all zero.
class Policy {
 public:
  /// Throws std::invalid_argument when a row puts mass on an unavailable
  /// action or does not sum to one.
  Policy(const EAMDP& mdp, std::vector<std::vector<double>> probs);

  static Policy uniform(const EAMDP& mdp);
  /// actions[s] is ignored for terminal states.
  static Policy deterministic(const EAMDP& mdp, std::span<const std::size_t> actions);

  double operator()(std::size_t s, std::size_t a) const { return probs_.at(s).at(a); }
  std::span<const double> row(std::size_t s) const { return probs_.at(s); }
  std::size_t n_states() const noexcept { return probs_.size(); }

  /// The action with mass one in state s, if the row is deterministic.
  std::optional<std::size_t> action(std::size_t s) const;

 private:
  std::vector<std::vector<double>> probs_;
};

/// sum_{s'} p(s'|s,a) [r(s') + gamma V(s')]; terminal successors add r only.
double lookahead(const EAMDP& mdp, const ValueFunction& v, std::size_t s, std::size_t a);

/// (TV)(s) = max_a lookahead(s, a); terminal states map to 0.
ValueFunction bellman_operator(const ValueFunction& v, const EAMDP& mdp);

class ConvergenceError : public std::runtime_error {
 public:
  ConvergenceError(const std::string& what, ValueFunction last, double residual);
  const ValueFunction& last_iterate() const noexcept { return last_; }
  double residual() const noexcept { return residual_; }

 private:
  ValueFunction last_;
  double residual_;
};

struct ValueIterationResult {
  ValueFunction values;
  std::size_t iterations = 0;
  double residual = 0.0;
};

/// Iterates T from `initial` (zeros by default) until the iterate is within
/// tol of the fixed point in sup norm, i.e. gamma * |V_k+1 - V_k| <=
/// tol * (1 - gamma). This also bounds |TV - V| by tol. Throws
/// ConvergenceError past max_iters.
ValueIterationResult value_iteration(const EAMDP& mdp, double tol = kDefaultValueTolerance,
                                     std::size_t max_iters = kDefaultMaxIterations,
                                     std::optional<ValueFunction> initial = std::nullopt);

/// V_pi by fixed-point iteration of the Bellman expectation operator, with
/// the same stopping rule as value_iteration.
ValueFunction policy_evaluation(const EAMDP& mdp, const Policy& pi,
                                double tol = kDefaultValueTolerance,
                                std::size_t max_iters = kDefaultMaxIterations);

/// V_pi by solving (I - gamma P_pi) V = r_pi directly.
ValueFunction policy_evaluation_direct(const EAMDP& mdp, const Policy& pi);

/// Q_pi(s,a) = lookahead(V_pi, s, a) with V_pi from policy_evaluation.
QTable q_evaluation(const EAMDP& mdp, const Policy& pi, double tol = kDefaultValueTolerance,
                    std::size_t max_iters = kDefaultMaxIterations);

/// Greedy action per state (nullopt on terminals), ties to lowest index.
std::vector<std::optional<std::size_t>> greedy_actions(const ValueFunction& v, const EAMDP& mdp);

Policy greedy_policy(const ValueFunction& v, const EAMDP& mdp);

/// Optimal values of the two-site jump system with rewards r1 = r(s~_1),
/// r2 = r(s~_2). Throws std::domain_error unless 0 <= gamma < 1.
std::pair<double, double> two_site_closed_form(double r1, double r2, double gamma);

}  // namespace eamdp
