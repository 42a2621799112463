#include "eamdp/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <exception>
#include <numbers>
#include <ostream>
#include <thread>

namespace eamdp {

namespace {

std::string site_label(Site s) { return std::to_string(s.x) + "_" + std::to_string(s.y); }

}  // namespace

std::string SweepAxis::name() const {
  switch (parameter) {
    case SweepParameter::Gamma: return "gamma";
    case SweepParameter::Reward: return "reward" + std::to_string(reward_index);
    case SweepParameter::Phi1: return "phi1";
    case SweepParameter::Phi2: return "phi2";
    case SweepParameter::Theta1: return "theta1";
    case SweepParameter::Theta2: return "theta2";
  }
  return "?";
}

std::vector<double> linspace(double from, double to, std::size_t points) {
  if (points == 0) throw std::invalid_argument("linspace: need at least one point");
  if (points == 1) return {from};
  std::vector<double> grid(points);
  const double step = (to - from) / static_cast<double>(points - 1);
  for (std::size_t i = 0; i < points; ++i) grid[i] = from + step * static_cast<double>(i);
  grid.back() = to;
  return grid;
}

SweepAxis make_axis(const std::string& name, std::vector<double> grid) {
  SweepAxis axis;
  axis.grid = std::move(grid);
  if (name == "gamma") axis.parameter = SweepParameter::Gamma;
  else if (name == "phi1") axis.parameter = SweepParameter::Phi1;
  else if (name == "phi2") axis.parameter = SweepParameter::Phi2;
  else if (name == "theta1") axis.parameter = SweepParameter::Theta1;
  else if (name == "theta2") axis.parameter = SweepParameter::Theta2;
  else if (name.rfind("reward", 0) == 0 && name.size() > 6 &&
           std::all_of(name.begin() + 6, name.end(), [](char c) { return c >= '0' && c <= '9'; })) {
    axis.parameter = SweepParameter::Reward;
    axis.reward_index = std::stoul(name.substr(6));
  } else {
    throw std::invalid_argument("unknown sweep parameter '" + name + "'");
  }
  return axis;
}

SweepAxis default_axis(const std::string& name) {
  SweepAxis axis = make_axis(name, {});
  if (axis.parameter == SweepParameter::Gamma) axis.grid = linspace(0.0, 0.95, 20);
  else if (axis.parameter == SweepParameter::Reward) axis.grid = linspace(-3.0, 3.0, 13);
  else axis.grid = linspace(0.0, 2.0 * std::numbers::pi, 65);
  return axis;
}

const char* solver_name(Solver solver) {
  return solver == Solver::ValueIteration ? "value_iteration" : "q_learning";
}

namespace {

void validate_axis(const SweepAxis& axis, const EnvironmentConfig& config) {
  if (axis.grid.empty()) throw std::invalid_argument("sweep " + axis.name() + ": empty grid");
  for (std::size_t i = 0; i < axis.grid.size(); ++i) {
    if (!std::isfinite(axis.grid[i]))
      throw std::invalid_argument("sweep " + axis.name() + ": non-finite grid value");
    if (i > 0 && !(axis.grid[i] > axis.grid[i - 1]))
      throw std::invalid_argument("sweep " + axis.name() + ": grid must be strictly increasing");
  }
  const bool lattice = config.is_lattice();
  switch (axis.parameter) {
    case SweepParameter::Phi1:
    case SweepParameter::Phi2:
      if (!lattice) throw std::invalid_argument(axis.name() + " applies to the lattice only");
      break;
    case SweepParameter::Theta1:
    case SweepParameter::Theta2:
      if (lattice) throw std::invalid_argument(axis.name() + " applies to the two-site system only");
      break;
    case SweepParameter::Reward: {
      const std::size_t n = lattice ? 4 : 3;
      if (axis.reward_index >= n)
        throw std::invalid_argument(axis.name() + ": reward index out of range");
      break;
    }
    case SweepParameter::Gamma:
      for (double g : axis.grid)
        if (!(g >= 0.0 && g < 1.0)) throw std::invalid_argument("gamma grid must lie in [0, 1)");
      break;
  }
}

}  // namespace

void SweepSpec::validate() const {
  validate_axis(axis, base);
  if (axis2) {
    validate_axis(*axis2, base);
    if (axis2->name() == axis.name())
      throw std::invalid_argument("contour sweep needs two distinct parameters");
  }
  if (!(tol > 0.0)) throw std::invalid_argument("tol must be positive");
  if (solver == Solver::QLearning) learning.validate();
}

SweepError::SweepError(const std::string& parameter, double value, const std::string& cause)
    : std::runtime_error("solver failed at " + parameter + "=" + format_number(value) + ": " + cause),
      value_(value) {}

EnvironmentConfig apply_parameter(const EnvironmentConfig& config, const SweepAxis& axis, double value) {
  EnvironmentConfig out = config;
  std::visit(
      [&](auto& spec) {
        using T = std::decay_t<decltype(spec)>;
        switch (axis.parameter) {
          case SweepParameter::Gamma: spec.gamma = value; break;
          case SweepParameter::Reward: spec.rewards = spec.rewards.with(axis.reward_index, value); break;
          case SweepParameter::Phi1:
            if constexpr (std::is_same_v<T, LatticeSpec>) spec.phi1 = value;
            break;
          case SweepParameter::Phi2:
            if constexpr (std::is_same_v<T, LatticeSpec>) spec.phi2 = value;
            break;
          case SweepParameter::Theta1:
            if constexpr (std::is_same_v<T, TwoSiteSpec>) spec.theta1 = value;
            break;
          case SweepParameter::Theta2:
            if constexpr (std::is_same_v<T, TwoSiteSpec>) spec.theta2 = value;
            break;
        }
      },
      out.system);
  return out;
}

std::vector<std::size_t> probe_states(const EnvironmentConfig& config) {
  const auto* lat = std::get_if<LatticeSpec>(&config.system);
  if (!lat) return {0, 1};
  std::vector<std::size_t> out{lat->index(lat->start)};
  for (const auto& p : config.probes) {
    const std::size_t i = lat->index(p);
    if (std::find(out.begin(), out.end(), i) == out.end()) out.push_back(i);
  }
  return out;
}

std::vector<std::string> probe_names(const EnvironmentConfig& config) {
  const auto* lat = std::get_if<LatticeSpec>(&config.system);
  if (!lat) return {"V_s1", "V_s2"};
  std::vector<std::string> names;
  for (std::size_t i : probe_states(config)) names.push_back("V_" + site_label(lat->site(i)));
  return names;
}

std::uint64_t policy_fingerprint(std::span<const std::optional<std::size_t>> actions) {
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (const auto& a : actions) {
    const auto code = static_cast<std::uint32_t>(a ? static_cast<std::int32_t>(*a) : -1);
    for (int byte = 0; byte < 4; ++byte) {
      hash ^= (code >> (8 * byte)) & 0xffU;
      hash *= 0x100000001b3ULL;
    }
  }
  return hash;
}

namespace {

struct GridPoint {
  std::vector<double> swept;
  EnvironmentConfig config;
};

std::vector<GridPoint> expand_grid(const SweepSpec& spec) {
  std::vector<GridPoint> points;
  for (double v1 : spec.axis.grid) {
    EnvironmentConfig c1 = apply_parameter(spec.base, spec.axis, v1);
    if (!spec.axis2) {
      points.push_back({{v1}, std::move(c1)});
      continue;
    }
    for (double v2 : spec.axis2->grid)
      points.push_back({{v1, v2}, apply_parameter(c1, *spec.axis2, v2)});
  }
  return points;
}

SweepRow solve_point(const SweepSpec& spec, const GridPoint& point) {
  const auto started = std::chrono::steady_clock::now();
  const EAMDP mdp = build_environment(point.config);
  SweepRow row;
  row.swept = point.swept;
  std::vector<std::optional<std::size_t>> actions;
  ValueFunction v;
  if (spec.solver == Solver::ValueIteration) {
    auto solved = value_iteration(mdp, spec.tol, spec.max_iters);
    v = std::move(solved.values);
    row.iterations = solved.iterations;
    actions = greedy_actions(v, mdp);
  } else {
    const auto learned = ea_q_learning(mdp, start_state(point.config), spec.learning);
    v.values.assign(mdp.n_states(), 0.0);
    actions.resize(mdp.n_states());
    for (std::size_t s = 0; s < mdp.n_states(); ++s) {
      if (mdp.is_terminal(s)) continue;
      v.values[s] = learned.q.max_value(s).value_or(0.0);
      actions[s] = learned.q.best_action(s);
    }
    row.iterations = spec.learning.episodes;
  }
  for (std::size_t s : probe_states(point.config)) row.probe_values.push_back(v[s]);
  row.fingerprint = policy_fingerprint(actions);
  row.wall_time_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return row;
}

}  // namespace

SweepResult run_sweep(const SweepSpec& spec, unsigned threads) {
  spec.validate();
  const auto points = expand_grid(spec);
  SweepResult result;
  result.probe_names = probe_names(spec.base);
  result.rows.resize(points.size());

  std::vector<std::exception_ptr> errors(points.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < points.size(); i = next++) {
      try {
        result.rows[i] = solve_point(spec, points[i]);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };

  const unsigned n_workers = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(points.size())));
  if (n_workers == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < n_workers; ++t) pool.emplace_back(worker);
  }

  for (std::size_t i = 0; i < points.size(); ++i) {
    if (!errors[i]) continue;
    const double value = points[i].swept.back();
    const std::string name = spec.axis2 ? spec.axis.name() + "=" + format_number(points[i].swept.front()) +
                                              "," + spec.axis2->name()
                                        : spec.axis.name();
    try {
      std::rethrow_exception(errors[i]);
    } catch (const std::exception& e) {
      throw SweepError(name, value, e.what());
    }
  }
  return result;
}

std::vector<TransitionInterval> detect_policy_transitions(std::span<const SweepRow> rows) {
  std::vector<TransitionInterval> out;
  for (std::size_t i = 0; i + 1 < rows.size(); ++i) {
    if (rows[i].fingerprint == rows[i + 1].fingerprint) continue;
    out.push_back({i, rows[i].swept.at(0), rows[i + 1].swept.at(0), rows[i].fingerprint,
                   rows[i + 1].fingerprint});
  }
  return out;
}

std::string format_number(double value) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, value, std::chars_format::general, 12);
  return std::string(buf, res.ptr);
}

namespace {

std::string hex64(std::uint64_t v) {
  static constexpr char digits[] = "0123456789abcdef";
  std::string s(16, '0');
  for (int i = 15; i >= 0; --i, v >>= 4) s[static_cast<std::size_t>(i)] = digits[v & 0xf];
  return s;
}

void write_parameters(std::ostream& out, const nlohmann::json& parameters) {
  out << "# " << parameters.dump() << '\n';
}

std::string action_label(const std::optional<std::size_t>& a, bool lattice) {
  if (!a) return "terminal";
  return lattice ? move_name(*a) : "jump";
}

}  // namespace

void write_sweep_csv(std::ostream& out, const nlohmann::json& parameters, const SweepSpec& spec,
                     const SweepResult& result, bool include_timing) {
  write_parameters(out, parameters);
  out << spec.axis.name();
  if (spec.axis2) out << ',' << spec.axis2->name();
  for (const auto& name : result.probe_names) out << ',' << name;
  out << ",fingerprint,iterations";
  if (include_timing) out << ",wall_time_s";
  out << '\n';
  for (const auto& row : result.rows) {
    for (std::size_t i = 0; i < row.swept.size(); ++i) out << (i ? "," : "") << format_number(row.swept[i]);
    for (double v : row.probe_values) out << ',' << format_number(v);
    out << ',' << hex64(row.fingerprint) << ',' << row.iterations;
    if (include_timing) out << ',' << format_number(row.wall_time_seconds);
    out << '\n';
  }
}

std::vector<std::size_t> greedy_trajectory(const EAMDP& mdp,
                                           std::span<const std::optional<std::size_t>> actions,
                                           std::size_t start) {
  std::vector<std::size_t> path;
  std::vector<bool> seen(mdp.n_states(), false);
  std::size_t s = start;
  while (!mdp.is_terminal(s) && !seen[s]) {
    seen[s] = true;
    path.push_back(s);
    const auto& a = actions[s];
    if (!a) break;
    // follow the most likely successor
    const auto row = mdp.transitions(s, *a);
    s = std::max_element(row.begin(), row.end(), [](const Transition& l, const Transition& r) {
          return l.probability < r.probability;
        })->next;
  }
  return path;
}

QLearningReport run_q_learning_experiment(const EnvironmentConfig& config, const LearningParams& params) {
  const EAMDP mdp = build_environment(config);
  const std::size_t start = start_state(config);

  QLearningReport report{ea_q_learning(mdp, start, params), {}, {}, {}, 0, 0.0};
  const auto solved = value_iteration(mdp);
  report.oracle_actions = greedy_actions(solved.values, mdp);
  report.learned_actions.resize(mdp.n_states());
  for (std::size_t s = 0; s < mdp.n_states(); ++s)
    if (!mdp.is_terminal(s)) report.learned_actions[s] = report.learning.q.best_action(s);

  report.optimal_trajectory = greedy_trajectory(mdp, report.oracle_actions, start);
  for (std::size_t s : report.optimal_trajectory)
    if (report.learned_actions[s] == report.oracle_actions[s]) ++report.agreeing_states;
  report.agreement_ratio = report.optimal_trajectory.empty()
                               ? 1.0
                               : static_cast<double>(report.agreeing_states) /
                                     static_cast<double>(report.optimal_trajectory.size());
  return report;
}

void write_q_learning_csv(std::ostream& out, const nlohmann::json& parameters,
                          const EnvironmentConfig& config, const QLearningReport& report) {
  write_parameters(out, parameters);
  out << "episode,steps,undiscounted_return,discounted_return\n";
  for (const auto& log : report.learning.logs) {
    out << log.episode_index << ',' << log.steps << ',' << format_number(log.undiscounted_return) << ','
        << format_number(log.discounted_return) << '\n';
  }

  const auto* lat = std::get_if<LatticeSpec>(&config.system);
  out << "# policy\n";
  out << "state,site,learned_action,oracle_action,on_optimal_trajectory\n";
  for (std::size_t s = 0; s < report.learned_actions.size(); ++s) {
    const std::string site = lat ? site_label(lat->site(s)) : "s" + std::to_string(s + 1);
    const bool on_path = std::find(report.optimal_trajectory.begin(), report.optimal_trajectory.end(), s) !=
                         report.optimal_trajectory.end();
    out << s << ',' << site << ',' << action_label(report.learned_actions[s], lat != nullptr) << ','
        << action_label(report.oracle_actions[s], lat != nullptr) << ',' << (on_path ? 1 : 0) << '\n';
  }
  out << "# oracle_agreement=" << format_number(report.agreement_ratio)
      << " agreeing_states=" << report.agreeing_states
      << " trajectory_states=" << report.optimal_trajectory.size() << '\n';
}

}  // namespace eamdp
