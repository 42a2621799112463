#include <cmath>
#include <numbers>
#include <sstream>

#include "doctest.h"
#include "json.hpp"

#include "eamdp/experiments.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace eamdp;
using doctest::Approx;

namespace {

EnvironmentConfig two_site_config() {
  EnvironmentConfig c;
  c.system = default_two_site_spec();
  return c;
}

EnvironmentConfig lattice_config() {
  EnvironmentConfig c;
  c.system = default_lattice_spec();
  return c;
}

SweepSpec sweep(EnvironmentConfig base, const std::string& name, std::vector<double> grid) {
  SweepSpec spec;
  spec.base = std::move(base);
  spec.axis = make_axis(name, std::move(grid));
  return spec;
}

std::string csv(const SweepSpec& spec, const SweepResult& result) {
  std::ostringstream out;
  write_sweep_csv(out, nlohmann::json{{"test", true}}, spec, result);
  return out.str();
}

}  // namespace

TEST_CASE("grids") {
  const auto g = linspace(0.0, 0.9, 10);
  REQUIRE(g.size() == 10);
  CHECK(g.front() == 0.0);
  CHECK(g.back() == 0.9);
  CHECK(g[3] == Approx(0.3));
  CHECK(linspace(2.0, 5.0, 1) == std::vector<double>{2.0});
  CHECK_THROWS(linspace(0.0, 1.0, 0));

  const auto phase = default_axis("phi1");
  CHECK(phase.grid.size() == 65);
  CHECK(phase.grid.back() == 2 * std::numbers::pi);
  CHECK(default_axis("gamma").grid.size() == 20);
  CHECK(default_axis("gamma").grid.back() == 0.95);
  const auto reward = default_axis("reward2");
  CHECK(reward.parameter == SweepParameter::Reward);
  CHECK(reward.reward_index == 2);
  CHECK(reward.name() == "reward2");
  CHECK_THROWS(make_axis("omega", {}));
  CHECK_THROWS(make_axis("reward", {}));
}

TEST_CASE("sweep specification checks") {
  auto spec = sweep(two_site_config(), "gamma", {0.1, 0.1});
  CHECK_THROWS(spec.validate());
  spec.axis.grid = {};
  CHECK_THROWS(spec.validate());
  spec.axis.grid = {0.5, 0.2};
  CHECK_THROWS(spec.validate());
  spec.axis.grid = {0.5, 1.0};
  CHECK_THROWS(spec.validate());
  CHECK_THROWS(sweep(two_site_config(), "phi1", {0.0}).validate());
  CHECK_THROWS(sweep(lattice_config(), "theta1", {0.0}).validate());
  CHECK_THROWS(sweep(two_site_config(), "reward3", {0.0}).validate());
  CHECK_NOTHROW(sweep(lattice_config(), "reward3", {0.0}).validate());
}

TEST_CASE("two-site gamma sweep follows the closed form") {
  const auto spec = sweep(two_site_config(), "gamma", linspace(0.0, 0.9, 10));
  const auto result = run_sweep(spec);
  REQUIRE(result.rows.size() == 10);
  CHECK(result.probe_names == std::vector<std::string>{"V_s1", "V_s2"});
  CHECK(result.rows[0].probe_values[0] == Approx(8.0 / 9).epsilon(1e-14));
  for (const auto& row : result.rows) {
    const auto [v1, v2] = oracle::two_site_values(2.0 / 9, 8.0 / 9, row.swept[0]);
    CHECK(std::abs(row.probe_values[0] - v1) <= 1e-9);
    CHECK(std::abs(row.probe_values[1] - v2) <= 1e-9);
  }
  CHECK(detect_policy_transitions(result.rows).empty());
}

TEST_CASE("two-site reward sweep is affine") {
  auto base = two_site_config();
  std::get<TwoSiteSpec>(base.system).gamma = 0.8;
  const auto result = run_sweep(sweep(base, "reward2", linspace(-3.0, 3.0, 13)));
  for (std::size_t col = 0; col < 2; ++col) {
    // least-squares line through the column
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double n = static_cast<double>(result.rows.size());
    for (const auto& row : result.rows) {
      const double x = row.swept[0], y = row.probe_values[col];
      sx += x;
      sy += y;
      sxx += x * x;
      sxy += x * y;
    }
    const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    const double intercept = (sy - slope * sx) / n;
    double residual = 0.0;
    for (const auto& row : result.rows)
      residual = std::max(residual, std::abs(row.probe_values[col] - (slope * row.swept[0] + intercept)));
    CHECK(residual < 1e-9);
  }
  for (const auto& row : result.rows) {
    const auto [v1, v2] = oracle::two_site_values(row.swept[0] / 9, 4 * row.swept[0] / 9, 0.8);
    CHECK(std::abs(row.probe_values[0] - v1) <= 1e-9);
    CHECK(std::abs(row.probe_values[1] - v2) <= 1e-9);
  }
  CHECK(detect_policy_transitions(result.rows).empty());
}

TEST_CASE("two-site phase sweep oscillates with period 2 pi") {
  const auto result = run_sweep(sweep(two_site_config(), "theta1", default_axis("theta1").grid));
  double lo = 1e300, hi = -1e300;
  for (const auto& row : result.rows) {
    lo = std::min(lo, row.probe_values[0]);
    hi = std::max(hi, row.probe_values[0]);
  }
  CHECK(hi - lo > 0.01);
  const auto [v1, v2] = oracle::two_site_values(2.0 / 9, 8.0 / 9, 0.8);
  CHECK(std::abs(result.rows.front().probe_values[0] - v1) <= 1e-9);
  CHECK(std::abs(result.rows.back().probe_values[0] - v1) <= 1e-9);
  CHECK(std::abs(result.rows.back().probe_values[1] - v2) <= 1e-9);
}

TEST_CASE("lattice phase sweep is 2 pi periodic") {
  for (const char* name : {"phi1", "phi2"}) {
    const auto result = run_sweep(sweep(lattice_config(), name, default_axis(name).grid), 4);
    REQUIRE(result.rows.size() == 65);
    CHECK(result.probe_names == std::vector<std::string>{"V_1_1"});
    CHECK(std::abs(result.rows.front().probe_values[0] - result.rows.back().probe_values[0]) <= 1e-9);
    CHECK(result.rows.front().fingerprint == result.rows.back().fingerprint);
  }
}

TEST_CASE("policy transitions on the lattice reward sweep") {
  auto base = lattice_config();
  std::get<LatticeSpec>(base.system).gamma = 0.9;
  const auto coarse = run_sweep(sweep(base, "reward3", linspace(-1.0, 3.0, 17)), 4);
  const auto fine = run_sweep(sweep(base, "reward3", linspace(-1.0, 3.0, 65)), 4);
  const auto coarse_t = detect_policy_transitions(coarse.rows);
  const auto fine_t = detect_policy_transitions(fine.rows);
  REQUIRE_FALSE(coarse_t.empty());
  for (const auto& t : coarse_t) {
    INFO("coarse interval [" << t.left_value << ", " << t.right_value << "]");
    bool bracketed = false;
    for (const auto& f : fine_t)
      bracketed = bracketed || (f.left_value >= t.left_value - 1e-12 && f.right_value <= t.right_value + 1e-12);
    CHECK(bracketed);
  }
  // shared grid points carry the same policy at both resolutions
  for (std::size_t i = 0; i < coarse.rows.size(); ++i) CHECK(coarse.rows[i].fingerprint == fine.rows[4 * i].fingerprint);
}

TEST_CASE("transition detection") {
  std::vector<SweepRow> rows(5);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    rows[i].swept = {static_cast<double>(i)};
    rows[i].fingerprint = 42;
  }
  CHECK(detect_policy_transitions(rows).empty());
  rows[3].fingerprint = rows[4].fingerprint = 7;
  const auto t = detect_policy_transitions(rows);
  REQUIRE(t.size() == 1);
  CHECK(t[0].left_row == 2);
  CHECK(t[0].left_value == 2.0);
  CHECK(t[0].right_value == 3.0);
  CHECK(t[0].left_fingerprint == 42);
  CHECK(t[0].right_fingerprint == 7);
}

TEST_CASE("policy fingerprint") {
  CHECK(policy_fingerprint({}) == 0xcbf29ce484222325ULL);
  // FNV-1a over the bytes 00 00 00 00
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (int i = 0; i < 4; ++i) h = (h ^ 0u) * 0x100000001b3ULL;
  std::vector<std::optional<std::size_t>> one{0};
  CHECK(policy_fingerprint(one) == h);
  // a terminal encodes as ff ff ff ff
  std::uint64_t t = 0xcbf29ce484222325ULL;
  for (int i = 0; i < 4; ++i) t = (t ^ 0xffu) * 0x100000001b3ULL;
  std::vector<std::optional<std::size_t>> terminal{std::nullopt};
  CHECK(policy_fingerprint(terminal) == t);
  std::vector<std::optional<std::size_t>> ab{0, 1}, ba{1, 0};
  CHECK(policy_fingerprint(ab) != policy_fingerprint(ba));
}

TEST_CASE("contour sweep covers the grid") {
  auto spec = sweep(lattice_config(), "phi1", linspace(0.0, std::numbers::pi, 5));
  spec.axis2 = make_axis("phi2", linspace(0.0, std::numbers::pi, 4));
  const auto result = run_sweep(spec, 3);
  REQUIRE(result.rows.size() == 20);
  for (std::size_t i = 0; i < 5; ++i) {
    for (std::size_t j = 0; j < 4; ++j) {
      const auto& row = result.rows[i * 4 + j];
      CHECK(row.swept[0] == spec.axis.grid[i]);
      CHECK(row.swept[1] == spec.axis2->grid[j]);
    }
  }
  spec.axis2 = make_axis("phi1", {0.0});
  CHECK_THROWS(spec.validate());
}

TEST_CASE("sweeps are deterministic and independent of thread count") {
  auto base = lattice_config();
  base.probes = {{3, 3}, {5, 4}};
  const auto spec = sweep(base, "phi2", default_axis("phi2").grid);
  const auto one = run_sweep(spec, 1);
  const auto many = run_sweep(spec, 8);
  CHECK(one.probe_names == std::vector<std::string>{"V_1_1", "V_3_3", "V_5_4"});
  CHECK(csv(spec, one) == csv(spec, many));
  CHECK(csv(spec, one) == csv(spec, run_sweep(spec, 1)));
}

TEST_CASE("csv layout") {
  const auto spec = sweep(two_site_config(), "gamma", {0.0, 0.8});
  const auto result = run_sweep(spec);
  const auto text = csv(spec, result);
  std::istringstream in(text);
  std::string line;
  std::getline(in, line);
  CHECK(line == "# {\"test\":true}");
  std::getline(in, line);
  CHECK(line == "gamma,V_s1,V_s2,fingerprint,iterations");
  std::getline(in, line);
  CHECK(line.rfind("0,0.888888888889,0.222222222222,", 0) == 0);
  std::getline(in, line);
  CHECK(line.rfind("0.8,2.962962962", 0) == 0);
  CHECK(text.find('\r') == std::string::npos);

  std::ostringstream timed;
  write_sweep_csv(timed, nlohmann::json::object(), spec, result, true);
  CHECK(timed.str().find(",wall_time_s\n") != std::string::npos);
}

TEST_CASE("number format") {
  CHECK(format_number(0.0) == "0");
  CHECK(format_number(8.0 / 9) == "0.888888888889");
  CHECK(format_number(-1.5) == "-1.5");
  CHECK(format_number(1e-20) == "1e-20");
  CHECK(format_number(123456789012345.0) == "1.23456789012e+14");
}

TEST_CASE("solver failure names the grid value") {
  auto spec = sweep(two_site_config(), "gamma", {0.1, 0.5, 0.9});
  spec.max_iters = 20;
  try {
    (void)run_sweep(spec, 2);
    FAIL("expected SweepError");
  } catch (const SweepError& e) {
    CHECK(e.value() == 0.5);
    CHECK(std::string(e.what()).find("gamma=0.5") != std::string::npos);
  }
}

TEST_CASE("q-learning sweep") {
  auto spec = sweep(lattice_config(), "gamma", {0.9});
  spec.solver = Solver::QLearning;
  spec.learning.episodes = 3000;
  const auto a = run_sweep(spec);
  const auto b = run_sweep(spec);
  CHECK(a.rows[0].fingerprint == b.rows[0].fingerprint);
  CHECK(a.rows[0].probe_values == b.rows[0].probe_values);
  CHECK(a.rows[0].iterations == 3000);
}

TEST_CASE("q-learning experiment") {
  const auto config = lattice_config();
  const auto report = run_q_learning_experiment(config, LearningParams{});
  CHECK(report.agreement_ratio == 1.0);
  CHECK(report.agreeing_states == report.optimal_trajectory.size());
  REQUIRE_FALSE(report.optimal_trajectory.empty());
  const auto& spec = std::get<LatticeSpec>(config.system);
  CHECK(report.optimal_trajectory.front() == spec.index(spec.start));

  SUBCASE("another seed reaches the same trajectory") {
    LearningParams p;
    p.seed = 99;
    const auto other = run_q_learning_experiment(config, p);
    const auto lat = build_environment(config);
    const auto path_a = greedy_trajectory(lat, report.learned_actions, spec.index(spec.start));
    const auto path_b = greedy_trajectory(lat, other.learned_actions, spec.index(spec.start));
    CHECK(path_a == path_b);
    CHECK(path_a == report.optimal_trajectory);
    CHECK_FALSE(report.learning.logs == other.learning.logs);
  }
  SUBCASE("zero episodes write a header-only log") {
    LearningParams p;
    p.episodes = 0;
    const auto empty = run_q_learning_experiment(config, p);
    std::ostringstream out;
    write_q_learning_csv(out, nlohmann::json::object(), config, empty);
    std::istringstream in(out.str());
    std::string line;
    std::getline(in, line);
    CHECK(line == "# {}");
    std::getline(in, line);
    CHECK(line == "episode,steps,undiscounted_return,discounted_return");
    std::getline(in, line);
    CHECK(line == "# policy");
  }
  SUBCASE("report footer") {
    std::ostringstream out;
    write_q_learning_csv(out, nlohmann::json::object(), config, report);
    CHECK(out.str().find("# oracle_agreement=1 ") != std::string::npos);
  }
}
