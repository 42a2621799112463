#include "eamdp/mdp.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace eamdp {

namespace {

constexpr double kUnavailable = -std::numeric_limits<double>::infinity();

std::string state_action(std::size_t s, std::size_t a) {
  return "(state " + std::to_string(s) + ", action " + std::to_string(a) + ")";
}

}  // namespace

// ---------------------------------------------------------------------------
// EAMDP

EAMDP::EAMDP(MdpDefinition def)
    : n_states_(def.n_states),
      n_actions_(def.n_actions),
      available_(std::move(def.available)),
      transitions_(std::move(def.transitions)),
      gamma_(def.gamma),
      ea_states_(std::move(def.ea_states)),
      outcomes_(def.outcomes ? std::move(*def.outcomes)
                             : throw std::invalid_argument("EAMDP: outcome set required")),
      rewards_(std::move(def.rewards)),
      terminal_(n_states_, false) {
  if (n_states_ == 0 || n_actions_ == 0)
    throw std::invalid_argument("EAMDP: state and action counts must be positive");
  if (!(gamma_ >= 0.0 && gamma_ < 1.0))
    throw std::invalid_argument("EAMDP: gamma must lie in [0, 1)");
  if (available_.size() != n_states_ * n_actions_)
    throw DimensionMismatch("EAMDP availability mask", available_.size(), n_states_ * n_actions_);
  if (transitions_.size() != n_states_ * n_actions_)
    throw DimensionMismatch("EAMDP transition rows", transitions_.size(), n_states_ * n_actions_);
  if (ea_states_.size() != n_states_)
    throw DimensionMismatch("EAMDP EA states", ea_states_.size(), n_states_);
  if (rewards_.size() != outcomes_.size())
    throw DimensionMismatch("EAMDP outcome rewards", rewards_.size(), outcomes_.size());

  for (std::size_t t : def.terminals) {
    if (t >= n_states_) throw std::out_of_range("EAMDP: terminal index out of range");
    terminal_[t] = true;
    for (std::size_t a = 0; a < n_actions_; ++a) {
      available_[t * n_actions_ + a] = false;
      transitions_[t * n_actions_ + a].clear();
    }
  }

  for (std::size_t s = 0; s < n_states_; ++s) {
    const auto& psi = ea_states_[s];
    if (psi.dim() != outcomes_.space_dim())
      throw DimensionMismatch("EAMDP EA state " + std::to_string(s), psi.dim(),
                              outcomes_.space_dim());
    if (!psi.is_normalized())
      throw std::invalid_argument("EAMDP: EA state of state " + std::to_string(s) +
                                  " has squared norm " + std::to_string(psi.squared_norm()));

    bool any = false;
    for (std::size_t a = 0; a < n_actions_; ++a) {
      auto& row = transitions_[s * n_actions_ + a];
      if (!available_[s * n_actions_ + a]) {
        row.clear();
        continue;
      }
      any = true;
      double sum = 0.0;
      for (const auto& t : row) {
        if (t.next >= n_states_)
          throw std::out_of_range("EAMDP: successor out of range at " + state_action(s, a));
        if (!(t.probability >= 0.0))
          throw std::invalid_argument("EAMDP: negative probability at " + state_action(s, a));
        sum += t.probability;
      }
      if (std::abs(sum - 1.0) > kProbabilityTolerance)
        throw std::invalid_argument("EAMDP: transition row " + state_action(s, a) + " sums to " +
                                    std::to_string(sum));
    }
    if (!terminal_[s] && !any)
      throw std::invalid_argument("EAMDP: non-terminal state " + std::to_string(s) +
                                  " has no available action");
  }

  state_rewards_.reserve(n_states_);
  for (const auto& psi : ea_states_)
    state_rewards_.push_back(separated_expected_reward(psi, outcomes_, rewards_));
}

bool EAMDP::is_available(std::size_t s, std::size_t a) const {
  if (s >= n_states_ || a >= n_actions_) throw std::out_of_range("EAMDP: index out of range");
  return available_[s * n_actions_ + a];
}

std::vector<std::size_t> EAMDP::available_actions(std::size_t s) const {
  std::vector<std::size_t> out;
  for (std::size_t a = 0; a < n_actions_; ++a)
    if (is_available(s, a)) out.push_back(a);
  return out;
}

std::span<const Transition> EAMDP::transitions(std::size_t s, std::size_t a) const {
  if (s >= n_states_ || a >= n_actions_) throw std::out_of_range("EAMDP: index out of range");
  return transitions_[s * n_actions_ + a];
}

std::vector<std::size_t> EAMDP::terminals() const {
  std::vector<std::size_t> out;
  for (std::size_t s = 0; s < n_states_; ++s)
    if (terminal_[s]) out.push_back(s);
  return out;
}

std::vector<double> state_reward_table(const EAMDP& mdp) {
  const auto r = mdp.state_rewards();
  return {r.begin(), r.end()};
}

double sup_distance(const ValueFunction& a, const ValueFunction& b) {
  if (a.size() != b.size()) throw DimensionMismatch("sup_distance", a.size(), b.size());
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a.values[i] - b.values[i]));
  return d;
}

// ---------------------------------------------------------------------------
// QTable

QTable::QTable(const EAMDP& mdp)
    : n_states_(mdp.n_states()),
      n_actions_(mdp.n_actions()),
      available_(n_states_ * n_actions_),
      values_(n_states_ * n_actions_, kUnavailable) {
  for (std::size_t s = 0; s < n_states_; ++s) {
    for (std::size_t a = 0; a < n_actions_; ++a) {
      if (mdp.is_available(s, a)) {
        available_[index(s, a)] = true;
        values_[index(s, a)] = 0.0;
      }
    }
  }
}

void QTable::set(std::size_t s, std::size_t a, double value) {
  if (!is_available(s, a)) throw std::invalid_argument("QTable: set on unavailable " + state_action(s, a));
  values_[index(s, a)] = value;
}

std::optional<double> QTable::max_value(std::size_t s) const {
  std::optional<double> best;
  for (std::size_t a = 0; a < n_actions_; ++a) {
    if (!is_available(s, a)) continue;
    const double q = values_[index(s, a)];
    if (!best || q > *best) best = q;
  }
  return best;
}

std::optional<std::size_t> QTable::best_action(std::size_t s) const {
  const auto best = max_value(s);
  if (!best) return std::nullopt;
  for (std::size_t a = 0; a < n_actions_; ++a)
    if (is_available(s, a) && values_[index(s, a)] >= *best - kTieTolerance) return a;
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Policy

Policy::Policy(const EAMDP& mdp, std::vector<std::vector<double>> probs) : probs_(std::move(probs)) {
  if (probs_.size() != mdp.n_states())
    throw DimensionMismatch("Policy rows", probs_.size(), mdp.n_states());
  for (std::size_t s = 0; s < probs_.size(); ++s) {
    const auto& row = probs_[s];
    if (row.size() != mdp.n_actions())
      throw DimensionMismatch("Policy row " + std::to_string(s), row.size(), mdp.n_actions());
    double sum = 0.0;
    for (std::size_t a = 0; a < row.size(); ++a) {
      if (!(row[a] >= 0.0)) throw std::invalid_argument("Policy: negative mass at " + state_action(s, a));
      if (row[a] > 0.0 && !mdp.is_available(s, a))
        throw std::invalid_argument("Policy: mass on unavailable " + state_action(s, a));
      sum += row[a];
    }
    const double expected = mdp.is_terminal(s) ? 0.0 : 1.0;
    if (std::abs(sum - expected) > kProbabilityTolerance)
      throw std::invalid_argument("Policy: row " + std::to_string(s) + " sums to " + std::to_string(sum));
  }
}

Policy Policy::uniform(const EAMDP& mdp) {
  std::vector<std::vector<double>> probs(mdp.n_states(), std::vector<double>(mdp.n_actions(), 0.0));
  for (std::size_t s = 0; s < mdp.n_states(); ++s) {
    const auto actions = mdp.available_actions(s);
    for (std::size_t a : actions) probs[s][a] = 1.0 / static_cast<double>(actions.size());
  }
  return Policy(mdp, std::move(probs));
}

Policy Policy::deterministic(const EAMDP& mdp, std::span<const std::size_t> actions) {
  if (actions.size() != mdp.n_states())
    throw DimensionMismatch("Policy::deterministic", actions.size(), mdp.n_states());
  std::vector<std::vector<double>> probs(mdp.n_states(), std::vector<double>(mdp.n_actions(), 0.0));
  for (std::size_t s = 0; s < mdp.n_states(); ++s)
    if (!mdp.is_terminal(s)) probs[s].at(actions[s]) = 1.0;
  return Policy(mdp, std::move(probs));
}

std::optional<std::size_t> Policy::action(std::size_t s) const {
  const auto& row = probs_.at(s);
  for (std::size_t a = 0; a < row.size(); ++a)
    if (row[a] == 1.0) return a;
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Planning

double lookahead(const EAMDP& mdp, const ValueFunction& v, std::size_t s, std::size_t a) {
  const auto rewards = mdp.state_rewards();
  double q = 0.0;
  for (const auto& t : mdp.transitions(s, a)) {
    const double future = mdp.is_terminal(t.next) ? 0.0 : v.values[t.next];
    q += t.probability * (rewards[t.next] + mdp.gamma() * future);
  }
  return q;
}

ValueFunction bellman_operator(const ValueFunction& v, const EAMDP& mdp) {
  if (v.size() != mdp.n_states()) throw DimensionMismatch("bellman_operator", v.size(), mdp.n_states());
  ValueFunction out{std::vector<double>(mdp.n_states(), 0.0)};
  for (std::size_t s = 0; s < mdp.n_states(); ++s) {
    if (mdp.is_terminal(s)) continue;
    double best = kUnavailable;
    for (std::size_t a = 0; a < mdp.n_actions(); ++a)
      if (mdp.is_available(s, a)) best = std::max(best, lookahead(mdp, v, s, a));
    out.values[s] = best;
  }
  return out;
}

ConvergenceError::ConvergenceError(const std::string& what, ValueFunction last, double residual)
    : std::runtime_error(what + " (residual " + std::to_string(residual) + ")"),
      last_(std::move(last)),
      residual_(residual) {}

namespace {

// A gamma-contraction whose last step moved by `residual` sits within
// gamma / (1 - gamma) * residual of its fixed point.
bool within_tolerance(double residual, double tol, double gamma) {
  return gamma * residual <= tol * (1.0 - gamma);
}

}  // namespace

ValueIterationResult value_iteration(const EAMDP& mdp, double tol, std::size_t max_iters,
                                     std::optional<ValueFunction> initial) {
  if (!(tol > 0.0)) throw std::invalid_argument("value_iteration: tol must be positive");
  ValueFunction v = initial ? std::move(*initial) : ValueFunction{std::vector<double>(mdp.n_states(), 0.0)};
  if (v.size() != mdp.n_states())
    throw DimensionMismatch("value_iteration initial", v.size(), mdp.n_states());

  double residual = std::numeric_limits<double>::infinity();
  for (std::size_t it = 1; it <= max_iters; ++it) {
    ValueFunction next = bellman_operator(v, mdp);
    residual = sup_distance(next, v);
    v = std::move(next);
    if (within_tolerance(residual, tol, mdp.gamma())) return {std::move(v), it, residual};
  }
  throw ConvergenceError("value_iteration: no convergence after " + std::to_string(max_iters) +
                             " iterations",
                         std::move(v), residual);
}

namespace {

double expected_backup(const EAMDP& mdp, const Policy& pi, const ValueFunction& v, std::size_t s) {
  double value = 0.0;
  for (std::size_t a = 0; a < mdp.n_actions(); ++a) {
    const double p = pi(s, a);
    if (p > 0.0) value += p * lookahead(mdp, v, s, a);
  }
  return value;
}

void check_policy(const EAMDP& mdp, const Policy& pi) {
  if (pi.n_states() != mdp.n_states())
    throw DimensionMismatch("policy", pi.n_states(), mdp.n_states());
}

}  // namespace

ValueFunction policy_evaluation(const EAMDP& mdp, const Policy& pi, double tol,
                                std::size_t max_iters) {
  check_policy(mdp, pi);
  if (!(tol > 0.0)) throw std::invalid_argument("policy_evaluation: tol must be positive");
  ValueFunction v{std::vector<double>(mdp.n_states(), 0.0)};
  double residual = std::numeric_limits<double>::infinity();
  for (std::size_t it = 0; it < max_iters; ++it) {
    ValueFunction next{std::vector<double>(mdp.n_states(), 0.0)};
    for (std::size_t s = 0; s < mdp.n_states(); ++s)
      if (!mdp.is_terminal(s)) next.values[s] = expected_backup(mdp, pi, v, s);
    residual = sup_distance(next, v);
    v = std::move(next);
    if (within_tolerance(residual, tol, mdp.gamma())) return v;
  }
  throw ConvergenceError("policy_evaluation: no convergence after " + std::to_string(max_iters) +
                             " iterations",
                         std::move(v), residual);
}

ValueFunction policy_evaluation_direct(const EAMDP& mdp, const Policy& pi) {
  check_policy(mdp, pi);
  const auto n = static_cast<Eigen::Index>(mdp.n_states());
  const auto rewards = mdp.state_rewards();
  Eigen::MatrixXd system = Eigen::MatrixXd::Identity(n, n);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
  for (std::size_t s = 0; s < mdp.n_states(); ++s) {
    if (mdp.is_terminal(s)) continue;
    const auto row = static_cast<Eigen::Index>(s);
    for (std::size_t a = 0; a < mdp.n_actions(); ++a) {
      const double p = pi(s, a);
      if (p == 0.0) continue;
      for (const auto& t : mdp.transitions(s, a)) {
        rhs(row) += p * t.probability * rewards[t.next];
        if (!mdp.is_terminal(t.next))
          system(row, static_cast<Eigen::Index>(t.next)) -= mdp.gamma() * p * t.probability;
      }
    }
  }
  const Eigen::VectorXd solution = system.partialPivLu().solve(rhs);
  return ValueFunction{std::vector<double>(solution.data(), solution.data() + n)};
}

QTable q_evaluation(const EAMDP& mdp, const Policy& pi, double tol, std::size_t max_iters) {
  const ValueFunction v = policy_evaluation(mdp, pi, tol, max_iters);
  QTable q(mdp);
  for (std::size_t s = 0; s < mdp.n_states(); ++s)
    for (std::size_t a = 0; a < mdp.n_actions(); ++a)
      if (mdp.is_available(s, a)) q.set(s, a, lookahead(mdp, v, s, a));
  return q;
}

std::vector<std::optional<std::size_t>> greedy_actions(const ValueFunction& v, const EAMDP& mdp) {
  if (v.size() != mdp.n_states()) throw DimensionMismatch("greedy_actions", v.size(), mdp.n_states());
  std::vector<std::optional<std::size_t>> out(mdp.n_states());
  for (std::size_t s = 0; s < mdp.n_states(); ++s) {
    if (mdp.is_terminal(s)) continue;
    std::vector<double> q(mdp.n_actions(), kUnavailable);
    double best = kUnavailable;
    for (std::size_t a = 0; a < mdp.n_actions(); ++a) {
      if (!mdp.is_available(s, a)) continue;
      q[a] = lookahead(mdp, v, s, a);
      best = std::max(best, q[a]);
    }
    for (std::size_t a = 0; a < mdp.n_actions(); ++a) {
      if (mdp.is_available(s, a) && q[a] >= best - kTieTolerance) {
        out[s] = a;
        break;
      }
    }
  }
  return out;
}

Policy greedy_policy(const ValueFunction& v, const EAMDP& mdp) {
  const auto actions = greedy_actions(v, mdp);
  std::vector<std::size_t> table(actions.size(), 0);
  for (std::size_t s = 0; s < actions.size(); ++s) table[s] = actions[s].value_or(0);
  return Policy::deterministic(mdp, table);
}

std::pair<double, double> two_site_closed_form(double r1, double r2, double gamma) {
  if (!(gamma >= 0.0 && gamma < 1.0))
    throw std::domain_error("two_site_closed_form: gamma must lie in [0, 1)");
  const double denom = 1.0 - gamma * gamma;
  return {(r2 + gamma * r1) / denom, (r1 + gamma * r2) / denom};
}

}  // namespace eamdp
