#pragma once

// Parameter sweeps over the two-site and lattice systems, policy transition
// detection, Q-learning experiments and their CSV output.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "eamdp/environments.hpp"
#include "eamdp/learning.hpp"
#include "eamdp/mdp.hpp"

namespace eamdp {

enum class SweepParameter { Gamma, Reward, Phi1, Phi2, Theta1, Theta2 };

struct SweepAxis {
  SweepParameter parameter = SweepParameter::Gamma;
  /// Outcome index for SweepParameter::Reward.
  std::size_t reward_index = 0;
  std::vector<double> grid;

  /// "gamma", "reward<k>", "phi1", "phi2", "theta1" or "theta2".
  std::string name() const;
};

/// `points` evenly spaced values from `from` to `to` inclusive.
std::vector<double> linspace(double from, double to, std::size_t points);

/// Parses a parameter name; throws std::invalid_argument on unknown names.
SweepAxis make_axis(const std::string& name, std::vector<double> grid);
/// 65 points over [0, 2 pi] for phases, 20 over [0, 0.95] for gamma and
/// 13 over [-3, 3] for rewards.
SweepAxis default_axis(const std::string& name);

enum class Solver { ValueIteration, QLearning };
const char* solver_name(Solver solver);

struct SweepSpec {
  EnvironmentConfig base;
  SweepAxis axis;
  /// Second axis for contour sweeps; rows iterate it fastest.
  std::optional<SweepAxis> axis2;
  Solver solver = Solver::ValueIteration;
  double tol = kDefaultValueTolerance;
  std::size_t max_iters = kDefaultMaxIterations;
  LearningParams learning;

  /// Throws std::invalid_argument for empty or non-increasing grids and
  /// parameters that do not apply to the configured system.
  void validate() const;
};

struct SweepRow {
  std::vector<double> swept;
  std::vector<double> probe_values;
  std::uint64_t fingerprint = 0;
  std::size_t iterations = 0;
  double wall_time_seconds = 0.0;
};

struct SweepResult {
  std::vector<std::string> probe_names;
  std::vector<SweepRow> rows;
};

class SweepError : public std::runtime_error {
 public:
  SweepError(const std::string& parameter, double value, const std::string& cause);
  double value() const noexcept { return value_; }

 private:
  double value_;
};

/// Copy of `config` with one parameter replaced.
EnvironmentConfig apply_parameter(const EnvironmentConfig& config, const SweepAxis& axis, double value);

/// Probed states: both sites for two-site; start plus configured probes for
/// the lattice (duplicates dropped, order kept).
std::vector<std::size_t> probe_states(const EnvironmentConfig& config);
std::vector<std::string> probe_names(const EnvironmentConfig& config);

/// 64-bit FNV-1a over the greedy action table, one little-endian int32 per
/// state, terminal states encoded as -1.
std::uint64_t policy_fingerprint(std::span<const std::optional<std::size_t>> actions);

/// Solves every grid point. Rows come back in grid order whatever `threads`
/// is. A failing grid point raises SweepError carrying its value.
SweepResult run_sweep(const SweepSpec& spec, unsigned threads = 1);

struct TransitionInterval {
  std::size_t left_row;
  double left_value;
  double right_value;
  std::uint64_t left_fingerprint;
  std::uint64_t right_fingerprint;
};

/// Adjacent row pairs of a 1-D sweep whose fingerprints differ.
std::vector<TransitionInterval> detect_policy_transitions(std::span<const SweepRow> rows);

/// Fixed CSV number format: 12 significant digits, '.' separator.
std::string format_number(double value);

/// Writes `# <parameters as compact JSON>`, the column header and one line
/// per row. Wall time is emitted only when include_timing is set because it
/// breaks byte reproducibility.
void write_sweep_csv(std::ostream& out, const nlohmann::json& parameters, const SweepSpec& spec,
                     const SweepResult& result, bool include_timing = false);

struct QLearningReport {
  LearningResult learning;
  std::vector<std::optional<std::size_t>> learned_actions;
  std::vector<std::optional<std::size_t>> oracle_actions;
  /// Non-terminal states visited by the value-iteration greedy policy from
  /// the start state, stopping at a terminal or the first repeated state.
  std::vector<std::size_t> optimal_trajectory;
  std::size_t agreeing_states = 0;
  double agreement_ratio = 0.0;
};

std::vector<std::size_t> greedy_trajectory(const EAMDP& mdp,
                                           std::span<const std::optional<std::size_t>> actions,
                                           std::size_t start);

/// Trains with ea_q_learning and compares the learned greedy policy against
/// the value-iteration greedy policy along the optimal trajectory.
QLearningReport run_q_learning_experiment(const EnvironmentConfig& config, const LearningParams& params);

/// Episode log rows, then a `# policy` section with the learned and oracle
/// action per state, then a `# oracle_agreement` footer.
void write_q_learning_csv(std::ostream& out, const nlohmann::json& parameters,
                          const EnvironmentConfig& config, const QLearningReport& report);

}  // namespace eamdp
