// Command-line runner for EA-MDP sweeps, Q-learning experiments and
// configuration validation. Output is CSV on stdout or --output.
//
// Exit codes: 0 success, 1 validation reported a violation,
// 2 configuration or usage error, 3 solver failure.

#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "eamdp/environments.hpp"
#include "eamdp/experiments.hpp"
#include "eamdp/learning.hpp"
#include "eamdp/mdp.hpp"

namespace {

using eamdp::ConfigError;
using nlohmann::json;

constexpr int kExitViolation = 1;
constexpr int kExitConfig = 2;
constexpr int kExitSolver = 3;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct SolverOptions {
  std::string solver = "value_iteration";
  double tol = eamdp::kDefaultValueTolerance;
  std::size_t max_iters = eamdp::kDefaultMaxIterations;
  unsigned threads = 1;
  eamdp::LearningParams learning;
};

struct SweepOptions {
  std::vector<std::string> sweep;
  std::vector<std::string> sweep2d;
  bool timing = false;
};

double parse_double(const std::string& token, const std::string& what) {
  try {
    std::size_t used = 0;
    const double v = std::stod(token, &used);
    if (used != token.size()) throw std::invalid_argument(token);
    return v;
  } catch (const std::exception&) {
    throw UsageError(what + ": '" + token + "' is not a number");
  }
}

std::size_t parse_count(const std::string& token, const std::string& what) {
  const double v = parse_double(token, what);
  if (v < 1 || v != static_cast<double>(static_cast<std::size_t>(v)))
    throw UsageError(what + ": '" + token + "' is not a positive integer");
  return static_cast<std::size_t>(v);
}

eamdp::SweepAxis axis_from_tokens(const std::vector<std::string>& t, std::size_t offset, bool explicit_grid) {
  if (!explicit_grid) return eamdp::default_axis(t.at(offset));
  const auto from = parse_double(t.at(offset + 1), t[offset] + " start");
  const auto to = parse_double(t.at(offset + 2), t[offset] + " end");
  const auto points = parse_count(t.at(offset + 3), t[offset] + " points");
  return eamdp::make_axis(t[offset], eamdp::linspace(from, to, points));
}

json axis_json(const eamdp::SweepAxis& axis) {
  return {{"parameter", axis.name()},
          {"from", axis.grid.front()},
          {"to", axis.grid.back()},
          {"points", axis.grid.size()}};
}

json learning_json(const eamdp::LearningParams& p) {
  return {{"alpha", p.alpha},
          {"epsilon", p.epsilon},
          {"episodes", p.episodes},
          {"max_steps_per_episode", p.max_steps_per_episode},
          {"seed", p.seed},
          {"decay_alpha", p.decay_alpha}};
}

std::ostream& open_output(const std::string& path, std::ofstream& file) {
  if (path.empty() || path == "-") return std::cout;
  file.open(path, std::ios::binary | std::ios::trunc);
  if (!file) throw UsageError("cannot open output file " + path);
  return file;
}

void add_solver_options(CLI::App* cmd, SolverOptions& opts) {
  cmd->add_option("--solver", opts.solver, "value_iteration or q_learning")
      ->check(CLI::IsMember({"value_iteration", "q_learning"}));
  cmd->add_option("--tol", opts.tol, "Value-iteration tolerance");
  cmd->add_option("--max-iters", opts.max_iters, "Value-iteration sweep limit");
  cmd->add_option("--threads", opts.threads, "Worker threads for grid points");
  cmd->add_option("--episodes", opts.learning.episodes, "Q-learning episodes (q_learning solver)");
  cmd->add_option("--seed", opts.learning.seed, "Q-learning seed (q_learning solver)");
}

void add_sweep_options(CLI::App* cmd, SweepOptions& opts, bool with_2d) {
  cmd->add_option("--sweep", opts.sweep, "<param> [<from> <to> <points>]")->expected(1, 4);
  if (with_2d)
    cmd->add_option("--sweep2d", opts.sweep2d,
                    "<p1> <p2> | <p1> <from1> <to1> <n1> <p2> <from2> <to2> <n2>")
        ->expected(2, 8);
  cmd->add_flag("--timing", opts.timing, "Append a wall-time column (not byte reproducible)");
}

int run_sweep_command(const std::string& command, const eamdp::EnvironmentConfig& base,
                      const SweepOptions& sweep_opts, const SolverOptions& solver_opts,
                      const std::string& output) {
  eamdp::SweepSpec spec;
  spec.base = base;
  spec.solver = solver_opts.solver == "q_learning" ? eamdp::Solver::QLearning : eamdp::Solver::ValueIteration;
  spec.tol = solver_opts.tol;
  spec.max_iters = solver_opts.max_iters;
  spec.learning = solver_opts.learning;

  if (!sweep_opts.sweep.empty() && !sweep_opts.sweep2d.empty())
    throw UsageError("--sweep and --sweep2d are mutually exclusive");
  const auto& s1 = sweep_opts.sweep;
  const auto& s2 = sweep_opts.sweep2d;
  if (!s1.empty()) {
    if (s1.size() != 1 && s1.size() != 4) throw UsageError("--sweep takes 1 or 4 values");
    spec.axis = axis_from_tokens(s1, 0, s1.size() == 4);
  } else if (!s2.empty()) {
    if (s2.size() == 2) {
      spec.axis = axis_from_tokens(s2, 0, false);
      spec.axis2 = axis_from_tokens(s2, 1, false);
    } else if (s2.size() == 8) {
      spec.axis = axis_from_tokens(s2, 0, true);
      spec.axis2 = axis_from_tokens(s2, 4, true);
    } else {
      throw UsageError("--sweep2d takes 2 or 8 values");
    }
  } else {
    // a single point: sweep gamma over its current value
    const double gamma = std::visit([](const auto& spec) { return spec.gamma; }, base.system);
    spec.axis = eamdp::make_axis("gamma", {gamma});
  }

  json params{{"command", command},
              {"config", eamdp::serialize_config(base)},
              {"solver", solver_opts.solver},
              {"sweep", json::array({axis_json(spec.axis)})}};
  if (spec.axis2) params["sweep"].push_back(axis_json(*spec.axis2));
  if (spec.solver == eamdp::Solver::ValueIteration) {
    params["tol"] = spec.tol;
    params["max_iters"] = spec.max_iters;
  } else {
    params["learning"] = learning_json(spec.learning);
  }

  try {
    spec.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  const auto result = eamdp::run_sweep(spec, solver_opts.threads);

  std::ofstream file;
  std::ostream& out = open_output(output, file);
  eamdp::write_sweep_csv(out, params, spec, result, sweep_opts.timing);
  if (!spec.axis2 && spec.axis.grid.size() > 1) {
    const auto transitions = eamdp::detect_policy_transitions(result.rows);
    out << "# policy_transitions=" << transitions.size();
    for (const auto& t : transitions)
      out << " [" << eamdp::format_number(t.left_value) << "," << eamdp::format_number(t.right_value) << "]";
    out << '\n';
  }
  return 0;
}

eamdp::EnvironmentConfig config_or_default(const std::string& path, bool lattice_default) {
  if (!path.empty()) return eamdp::load_config(path).config;
  eamdp::EnvironmentConfig config;
  if (lattice_default) config.system = eamdp::default_lattice_spec();
  else config.system = eamdp::default_two_site_spec();
  return config;
}

void print_report(std::ostream& out, const std::string& label, const eamdp::ValidationReport& r) {
  out << label << ": " << (r.ok() ? "valid" : "INVALID") << " (" << r.describe() << ")\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"EA-MDP experiment runner"};
  app.require_subcommand(1);

  std::string output;
  SolverOptions solver_opts;
  SweepOptions sweep_opts;

  // two-site
  auto* two = app.add_subcommand("two-site", "Two-site jump system");
  std::string two_config;
  double gamma = 0.8, reward2 = 2.0, theta1 = 0.0, theta2 = 0.0;
  two->add_option("--config", two_config, "two_site JSON configuration");
  auto* two_gamma = two->add_option("--gamma", gamma, "Discount factor");
  auto* two_reward2 = two->add_option("--reward2", reward2, "Reward of the third outcome");
  auto* two_theta1 = two->add_option("--theta1", theta1, "Phase on the second amplitude of c1");
  auto* two_theta2 = two->add_option("--theta2", theta2, "Phase on the second amplitude of c2");
  two->add_option("-o,--output", output, "Output CSV path (stdout by default)");
  add_solver_options(two, solver_opts);
  add_sweep_options(two, sweep_opts, false);

  // lattice
  auto* lat = app.add_subcommand("lattice", "Obstacle lattice");
  std::string lat_config;
  double phi1 = 0.0, phi2 = 0.0, lat_gamma = 0.9;
  lat->add_option("--config", lat_config, "lattice JSON configuration (built-in default otherwise)");
  auto* lat_phi1 = lat->add_option("--phi1", phi1, "Outcome rotation of the |0>,|1> block");
  auto* lat_phi2 = lat->add_option("--phi2", phi2, "Outcome rotation of the |2>,|3> block");
  auto* lat_gamma_opt = lat->add_option("--gamma", lat_gamma, "Discount factor");
  lat->add_option("-o,--output", output, "Output CSV path (stdout by default)");
  add_solver_options(lat, solver_opts);
  add_sweep_options(lat, sweep_opts, true);

  // qlearn
  auto* ql = app.add_subcommand("qlearn", "EA epsilon-greedy Q-learning experiment");
  std::string ql_config;
  eamdp::LearningParams learning;
  ql->add_option("--config", ql_config, "JSON configuration (built-in lattice otherwise)");
  ql->add_option("--alpha", learning.alpha, "Learning rate");
  ql->add_option("--epsilon", learning.epsilon, "Exploration probability");
  ql->add_option("--episodes", learning.episodes, "Number of episodes");
  ql->add_option("--max-steps", learning.max_steps_per_episode, "Step cap per episode");
  ql->add_option("--seed", learning.seed, "RNG seed");
  ql->add_flag("--decay-alpha", learning.decay_alpha, "Use alpha = 1/(1+visits)");
  ql->add_option("-o,--output", output, "Output CSV path (stdout by default)");

  // validate
  auto* val = app.add_subcommand("validate", "Validate outcome sets and a configuration");
  std::string val_config;
  double val_phi1 = 0.0, val_phi2 = 0.0;
  bool scaled = false;
  val->add_option("--config", val_config, "JSON configuration to validate");
  val->add_option("--phi1", val_phi1, "phi1 for the lattice outcome family");
  val->add_option("--phi2", val_phi2, "phi2 for the lattice outcome family");
  val->add_flag("--scaled", scaled, "Validate the lattice family with the extra 1/sqrt2 factor");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    if (*two) {
      auto config = config_or_default(two_config, false);
      auto& spec = std::get<eamdp::TwoSiteSpec>(config.system);
      if (two_config.empty() || two_gamma->count()) spec.gamma = gamma;
      if (two_config.empty() || two_reward2->count()) spec.rewards = spec.rewards.with(2, reward2);
      if (two_config.empty() || two_theta1->count()) spec.theta1 = theta1;
      if (two_config.empty() || two_theta2->count()) spec.theta2 = theta2;
      return run_sweep_command("two-site", config, sweep_opts, solver_opts, output);
    }
    if (*lat) {
      auto config = config_or_default(lat_config, true);
      if (!config.is_lattice()) throw ConfigError("kind", "lattice command needs a lattice configuration");
      auto& spec = std::get<eamdp::LatticeSpec>(config.system);
      if (lat_phi1->count()) spec.phi1 = phi1;
      if (lat_phi2->count()) spec.phi2 = phi2;
      if (lat_gamma_opt->count()) spec.gamma = lat_gamma;
      return run_sweep_command("lattice", config, sweep_opts, solver_opts, output);
    }
    if (*ql) {
      const auto config = config_or_default(ql_config, true);
      try {
        learning.validate();
      } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
      }
      const auto report = eamdp::run_q_learning_experiment(config, learning);
      json params{{"command", "qlearn"},
                  {"config", eamdp::serialize_config(config)},
                  {"learning", learning_json(learning)}};
      std::ofstream file;
      eamdp::write_q_learning_csv(open_output(output, file), params, config, report);
      return 0;
    }
    if (*val) {
      bool ok = true;
      const auto two_site = eamdp::two_site_outcomes();
      print_report(std::cout, "two-site outcomes", eamdp::validate_outcome_set(two_site.outcomes()));
      if (scaled) {
        const auto family = eamdp::lattice_outcome_family_scaled(val_phi1, val_phi2);
        const auto report = eamdp::validate_outcome_set(family);
        print_report(std::cout, "lattice outcomes (scaled by 1/sqrt2)", report);
        ok = ok && report.ok();
      } else {
        const auto family = eamdp::lattice_outcome_family(val_phi1, val_phi2);
        print_report(std::cout, "lattice outcomes", eamdp::validate_outcome_set(family.outcomes()));
      }
      if (!val_config.empty()) {
        const auto loaded = eamdp::load_config(val_config);
        std::cout << "config " << val_config << ": valid ("
                  << loaded.mdp.n_states() << " states, " << loaded.mdp.n_actions() << " actions)\n";
      }
      return ok ? 0 : kExitViolation;
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const eamdp::SweepError& e) {
    std::cerr << "solver failure: " << e.what() << '\n';
    return kExitSolver;
  } catch (const eamdp::ConvergenceError& e) {
    std::cerr << "solver failure: " << e.what() << '\n';
    return kExitSolver;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "solver failure: " << e.what() << '\n';
    return kExitSolver;
  }
  return 0;
}
