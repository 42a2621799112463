#include "eamdp/environments.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace eamdp {

using nlohmann::json;

namespace {

const double kInvSqrt2 = 1.0 / std::sqrt(2.0);
const Complex kI{0.0, 1.0};

std::string site_str(Site s) {
  return "(" + std::to_string(s.x) + "," + std::to_string(s.y) + ")";
}

}  // namespace

// ---------------------------------------------------------------------------
// Two-site system

TwoSiteSpec default_two_site_spec() {
  TwoSiteSpec spec{
      .c1 = StateVector{2.0 / 3.0, 2.0 / 3.0, 1.0 / 3.0},
      .c2 = StateVector{2.0 / 3.0, 1.0 / 3.0, 2.0 / 3.0},
      .theta1 = 0.0,
      .theta2 = 0.0,
      .rewards = RewardSpec{-1.0, 1.0, 2.0},
      .gamma = 0.8,
  };
  return spec;
}

OutcomeSet two_site_outcomes() {
  return OutcomeSet({
      StateVector{kInvSqrt2, kI * kInvSqrt2, 0.0},
      StateVector{kInvSqrt2, -kI * kInvSqrt2, 0.0},
      StateVector{0.0, 0.0, 1.0},
  });
}

EAMDP build_two_site(const TwoSiteSpec& spec) {
  const StateVector c1 = spec.phased_c1();
  const StateVector c2 = spec.phased_c2();
  if (c1.dim() != 3 || c2.dim() != 3)
    throw std::invalid_argument("two-site amplitudes must have dimension 3");
  if (!c1.is_normalized())
    throw std::invalid_argument("two-site c1 has squared norm " + std::to_string(c1.squared_norm()));
  if (!c2.is_normalized())
    throw std::invalid_argument("two-site c2 has squared norm " + std::to_string(c2.squared_norm()));

  MdpDefinition def;
  def.n_states = 2;
  def.n_actions = 1;
  def.available = {true, true};
  def.transitions = {{{1, 1.0}}, {{0, 1.0}}};
  def.gamma = spec.gamma;
  def.ea_states = {c1, c2};
  def.outcomes = two_site_outcomes();
  def.rewards = spec.rewards;
  return EAMDP(std::move(def));
}

// ---------------------------------------------------------------------------
// Lattice

const char* move_name(std::size_t action) {
  static constexpr const char* names[] = {"up", "down", "left", "right"};
  return action < kLatticeActions ? names[action] : "?";
}

std::size_t LatticeSpec::index(Site s) const {
  if (!contains(s)) throw std::out_of_range("site " + site_str(s) + " outside the lattice");
  return static_cast<std::size_t>(s.y - 1) * width + static_cast<std::size_t>(s.x - 1);
}

Site LatticeSpec::site(std::size_t i) const {
  if (i >= n_sites()) throw std::out_of_range("lattice index out of range");
  return Site{static_cast<int>(i % width) + 1, static_cast<int>(i / width) + 1};
}

bool LatticeSpec::contains(Site s) const {
  return s.x >= 1 && s.x <= width && s.y >= 1 && s.y <= height;
}

bool LatticeSpec::is_obstacle(Site s) const {
  return std::find(obstacles.begin(), obstacles.end(), s) != obstacles.end();
}

StateVector LatticeSpec::ea_state(Site s) const {
  const auto it = ea_assignments.find(s);
  return it != ea_assignments.end() ? it->second : StateVector::basis(4, 0);
}

void LatticeSpec::validate() const {
  if (width <= 0 || height <= 0) throw std::invalid_argument("lattice dimensions must be positive");
  if (!contains(goal)) throw std::invalid_argument("goal " + site_str(goal) + " outside the lattice");
  if (!contains(start)) throw std::invalid_argument("start " + site_str(start) + " outside the lattice");
  if (start == goal) throw std::invalid_argument("start and goal coincide");
  std::set<Site> seen;
  for (const auto& o : obstacles) {
    if (!contains(o)) throw std::invalid_argument("obstacle " + site_str(o) + " outside the lattice");
    if (o == goal) throw std::invalid_argument("goal " + site_str(o) + " lies on an obstacle");
    if (o == start) throw std::invalid_argument("start " + site_str(o) + " lies on an obstacle");
    if (!seen.insert(o).second) throw std::invalid_argument("duplicate obstacle " + site_str(o));
  }
  for (const auto& [s, psi] : ea_assignments) {
    if (!contains(s)) throw std::invalid_argument("EA site " + site_str(s) + " outside the lattice");
    if (psi.dim() != 4) throw std::invalid_argument("EA state at " + site_str(s) + " must have dimension 4");
    if (!psi.is_normalized())
      throw std::invalid_argument("EA state at " + site_str(s) + " has squared norm " +
                                  std::to_string(psi.squared_norm()));
  }
  if (rewards.size() != 4) throw std::invalid_argument("lattice rewards must have length 4");
  if (!(gamma >= 0.0 && gamma < 1.0)) throw std::invalid_argument("gamma must lie in [0, 1)");
}

LatticeSpec default_lattice_spec() {
  const double h = kInvSqrt2;
  const double f = 1.0 / std::sqrt(5.0);
  LatticeSpec spec;
  spec.width = 5;
  spec.height = 5;
  spec.obstacles = {{2, 2}, {4, 4}};
  spec.goal = {5, 5};
  spec.start = {1, 1};
  spec.ea_assignments = {
      {{4, 1}, StateVector{0.0, h, 0.0, h}},
      {{3, 3}, StateVector{0.0, 0.0, h, kI * h}},
      {{5, 4}, StateVector{2.0 / 5.0, 4.0 / 5.0, 1.0 / 5.0, 2.0 / 5.0}},
      {{1, 5}, StateVector{0.0, h, kI * h, 0.0}},
      {{5, 5}, StateVector{f, f, kI * f, std::sqrt(2.0 / 5.0)}},
  };
  spec.phi1 = 0.0;
  spec.phi2 = 0.0;
  spec.rewards = RewardSpec{-1.0, -2.0, -3.0, 1.0};
  spec.gamma = 0.9;
  return spec;
}

std::vector<StateVector> lattice_outcome_family_scaled(double phi1, double phi2) {
  auto family = lattice_outcome_family(phi1, phi2);
  std::vector<StateVector> out;
  for (const auto& w : family.outcomes()) out.push_back(w.scaled(kInvSqrt2));
  return out;
}

OutcomeSet lattice_outcome_family(double phi1, double phi2) {
  const double c1 = std::cos(phi1), s1 = std::sin(phi1);
  const double c2 = std::cos(phi2), s2 = std::sin(phi2);
  return OutcomeSet({
      StateVector{c1, kI * s1, 0.0, 0.0},
      StateVector{kI * s1, c1, 0.0, 0.0},
      StateVector{0.0, 0.0, c2, kI * s2},
      StateVector{0.0, 0.0, kI * s2, c2},
  });
}

EAMDP build_lattice(const LatticeSpec& spec) {
  spec.validate();
  const std::size_t n = spec.n_sites();

  MdpDefinition def;
  def.n_states = n;
  def.n_actions = kLatticeActions;
  def.available.assign(n * kLatticeActions, false);
  def.transitions.assign(n * kLatticeActions, {});
  def.gamma = spec.gamma;
  def.outcomes = lattice_outcome_family(spec.phi1, spec.phi2);
  def.rewards = spec.rewards;

  static constexpr int dx[] = {0, 0, -1, 1};
  static constexpr int dy[] = {1, -1, 0, 0};
  for (std::size_t i = 0; i < n; ++i) {
    const Site here = spec.site(i);
    def.ea_states.push_back(spec.ea_state(here));
    if (here == spec.goal || spec.is_obstacle(here)) {
      def.terminals.push_back(i);
      continue;
    }
    bool any = false;
    for (std::size_t a = 0; a < kLatticeActions; ++a) {
      const Site there{here.x + dx[a], here.y + dy[a]};
      if (!spec.contains(there) || spec.is_obstacle(there)) continue;
      def.available[i * kLatticeActions + a] = true;
      def.transitions[i * kLatticeActions + a] = {{spec.index(there), 1.0}};
      any = true;
    }
    if (!any) throw std::invalid_argument("site " + site_str(here) + " has no available move");
  }
  return EAMDP(std::move(def));
}

// ---------------------------------------------------------------------------
// Configuration

ConfigError::ConfigError(const std::string& key, const std::string& message)
    : std::runtime_error("config key '" + key + "': " + message), key_(key) {}

namespace {

void reject_unknown_keys(const json& obj, const std::string& where,
                         std::initializer_list<const char*> allowed) {
  for (const auto& [key, value] : obj.items()) {
    const bool known = std::any_of(allowed.begin(), allowed.end(),
                                   [&](const char* k) { return key == k; });
    if (!known) throw ConfigError(where.empty() ? key : where + "." + key, "unknown key");
  }
}

const json& require(const json& obj, const std::string& key, const std::string& path) {
  if (!obj.contains(key)) throw ConfigError(path, "missing required key");
  return obj.at(key);
}

double number_at(const json& v, const std::string& path) {
  if (!v.is_number()) throw ConfigError(path, "expected a number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) throw ConfigError(path, "expected a finite number");
  return d;
}

double optional_number(const json& obj, const std::string& key, double fallback) {
  return obj.contains(key) ? number_at(obj.at(key), key) : fallback;
}

int integer_at(const json& v, const std::string& path) {
  if (!v.is_number_integer()) throw ConfigError(path, "expected an integer");
  return v.get<int>();
}

double gamma_at(const json& obj) {
  const double g = number_at(require(obj, "gamma", "gamma"), "gamma");
  if (!(g >= 0.0 && g < 1.0)) throw ConfigError("gamma", "must lie in [0, 1)");
  return g;
}

RewardSpec rewards_at(const json& obj, std::size_t expected) {
  const json& arr = require(obj, "rewards", "rewards");
  if (!arr.is_array()) throw ConfigError("rewards", "expected an array");
  if (arr.size() != expected)
    throw ConfigError("rewards", "expected " + std::to_string(expected) + " entries, got " +
                                     std::to_string(arr.size()));
  std::vector<double> r;
  for (std::size_t i = 0; i < arr.size(); ++i)
    r.push_back(number_at(arr[i], "rewards[" + std::to_string(i) + "]"));
  return RewardSpec(std::move(r));
}

StateVector amplitudes_at(const json& arr, const std::string& path, std::size_t expected_dim) {
  if (!arr.is_array()) throw ConfigError(path, "expected an array of [re, im] pairs");
  if (arr.size() != expected_dim)
    throw ConfigError(path, "expected " + std::to_string(expected_dim) + " amplitudes, got " +
                                std::to_string(arr.size()));
  std::vector<Complex> amps;
  for (std::size_t i = 0; i < arr.size(); ++i) {
    const std::string item = path + "[" + std::to_string(i) + "]";
    const json& pair = arr[i];
    if (!pair.is_array() || pair.size() != 2) throw ConfigError(item, "expected an [re, im] pair");
    amps.emplace_back(number_at(pair[0], item + "[0]"), number_at(pair[1], item + "[1]"));
  }
  StateVector psi(std::move(amps));
  if (!psi.is_normalized()) {
    std::ostringstream os;
    os << "amplitudes are not normalized (squared norm " << psi.squared_norm() << ")";
    throw ConfigError(path, os.str());
  }
  return psi;
}

Site site_at(const json& v, const std::string& path) {
  if (!v.is_array() || v.size() != 2) throw ConfigError(path, "expected an [x, y] pair");
  return Site{integer_at(v[0], path + "[0]"), integer_at(v[1], path + "[1]")};
}

json amplitudes_json(const StateVector& psi) {
  json arr = json::array();
  for (const auto& a : psi.amplitudes()) arr.push_back({a.real(), a.imag()});
  return arr;
}

json site_json(Site s) { return json::array({s.x, s.y}); }

TwoSiteSpec parse_two_site(const json& doc) {
  reject_unknown_keys(doc, "", {"kind", "gamma", "rewards", "c1", "c2", "theta1", "theta2"});
  TwoSiteSpec spec;
  spec.gamma = gamma_at(doc);
  spec.rewards = rewards_at(doc, 3);
  spec.c1 = amplitudes_at(require(doc, "c1", "c1"), "c1", 3);
  spec.c2 = amplitudes_at(require(doc, "c2", "c2"), "c2", 3);
  spec.theta1 = optional_number(doc, "theta1", 0.0);
  spec.theta2 = optional_number(doc, "theta2", 0.0);
  return spec;
}

LatticeSpec parse_lattice(const json& doc, std::vector<Site>& probes) {
  reject_unknown_keys(doc, "", {"kind", "width", "height", "gamma", "rewards", "phi1", "phi2",
                                "start", "goal", "obstacles", "ea_states", "probes"});
  LatticeSpec spec;
  spec.width = integer_at(require(doc, "width", "width"), "width");
  spec.height = integer_at(require(doc, "height", "height"), "height");
  if (spec.width <= 0) throw ConfigError("width", "must be positive");
  if (spec.height <= 0) throw ConfigError("height", "must be positive");
  spec.gamma = gamma_at(doc);
  spec.rewards = rewards_at(doc, 4);
  spec.phi1 = optional_number(doc, "phi1", 0.0);
  spec.phi2 = optional_number(doc, "phi2", 0.0);
  spec.start = site_at(require(doc, "start", "start"), "start");
  spec.goal = site_at(require(doc, "goal", "goal"), "goal");
  if (!spec.contains(spec.start)) throw ConfigError("start", "outside the lattice");
  if (!spec.contains(spec.goal)) throw ConfigError("goal", "outside the lattice");
  if (spec.start == spec.goal) throw ConfigError("goal", "coincides with start");

  if (doc.contains("obstacles")) {
    const json& arr = doc.at("obstacles");
    if (!arr.is_array()) throw ConfigError("obstacles", "expected an array");
    for (std::size_t i = 0; i < arr.size(); ++i) {
      const std::string path = "obstacles[" + std::to_string(i) + "]";
      const Site o = site_at(arr[i], path);
      if (!spec.contains(o)) throw ConfigError(path, "outside the lattice");
      if (o == spec.goal) throw ConfigError(path, "goal lies on an obstacle");
      if (o == spec.start) throw ConfigError(path, "start lies on an obstacle");
      if (spec.is_obstacle(o)) throw ConfigError(path, "duplicate obstacle");
      spec.obstacles.push_back(o);
    }
  }

  if (doc.contains("ea_states")) {
    const json& arr = doc.at("ea_states");
    if (!arr.is_array()) throw ConfigError("ea_states", "expected an array");
    for (std::size_t i = 0; i < arr.size(); ++i) {
      const std::string path = "ea_states[" + std::to_string(i) + "]";
      const json& entry = arr[i];
      if (!entry.is_object()) throw ConfigError(path, "expected an object");
      reject_unknown_keys(entry, path, {"site", "amplitudes"});
      const Site s = site_at(require(entry, "site", path + ".site"), path + ".site");
      if (!spec.contains(s)) throw ConfigError(path + ".site", "outside the lattice");
      if (spec.ea_assignments.count(s)) throw ConfigError(path + ".site", "site assigned twice");
      spec.ea_assignments.emplace(
          s, amplitudes_at(require(entry, "amplitudes", path + ".amplitudes"), path + ".amplitudes", 4));
    }
  }

  if (doc.contains("probes")) {
    const json& arr = doc.at("probes");
    if (!arr.is_array()) throw ConfigError("probes", "expected an array");
    for (std::size_t i = 0; i < arr.size(); ++i) {
      const std::string path = "probes[" + std::to_string(i) + "]";
      const Site p = site_at(arr[i], path);
      if (!spec.contains(p)) throw ConfigError(path, "outside the lattice");
      probes.push_back(p);
    }
  }
  return spec;
}

}  // namespace

EnvironmentConfig parse_config(const json& doc) {
  if (!doc.is_object()) throw ConfigError("<root>", "expected a JSON object");
  const json& kind = require(doc, "kind", "kind");
  if (!kind.is_string()) throw ConfigError("kind", "expected a string");
  const auto k = kind.get<std::string>();
  EnvironmentConfig config;
  if (k == "two_site") {
    config.system = parse_two_site(doc);
  } else if (k == "lattice") {
    config.system = parse_lattice(doc, config.probes);
  } else {
    throw ConfigError("kind", "expected \"two_site\" or \"lattice\", got \"" + k + "\"");
  }
  return config;
}

json serialize_config(const EnvironmentConfig& config) {
  json doc;
  if (const auto* two = std::get_if<TwoSiteSpec>(&config.system)) {
    doc["kind"] = "two_site";
    doc["gamma"] = two->gamma;
    doc["rewards"] = std::vector<double>(two->rewards.values().begin(), two->rewards.values().end());
    doc["c1"] = amplitudes_json(two->c1);
    doc["c2"] = amplitudes_json(two->c2);
    doc["theta1"] = two->theta1;
    doc["theta2"] = two->theta2;
    return doc;
  }
  const auto& lat = std::get<LatticeSpec>(config.system);
  doc["kind"] = "lattice";
  doc["width"] = lat.width;
  doc["height"] = lat.height;
  doc["gamma"] = lat.gamma;
  doc["rewards"] = std::vector<double>(lat.rewards.values().begin(), lat.rewards.values().end());
  doc["phi1"] = lat.phi1;
  doc["phi2"] = lat.phi2;
  doc["start"] = site_json(lat.start);
  doc["goal"] = site_json(lat.goal);
  doc["obstacles"] = json::array();
  for (const auto& o : lat.obstacles) doc["obstacles"].push_back(site_json(o));
  doc["ea_states"] = json::array();
  for (const auto& [s, psi] : lat.ea_assignments)
    doc["ea_states"].push_back({{"site", site_json(s)}, {"amplitudes", amplitudes_json(psi)}});
  doc["probes"] = json::array();
  for (const auto& p : config.probes) doc["probes"].push_back(site_json(p));
  return doc;
}

EAMDP build_environment(const EnvironmentConfig& config) {
  if (const auto* two = std::get_if<TwoSiteSpec>(&config.system)) return build_two_site(*two);
  return build_lattice(std::get<LatticeSpec>(config.system));
}

std::size_t start_state(const EnvironmentConfig& config) {
  if (const auto* lat = std::get_if<LatticeSpec>(&config.system)) return lat->index(lat->start);
  return 0;
}

LoadedEnvironment load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("<file>", "cannot open " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("<file>", std::string("malformed JSON in ") + path.string() + ": " + e.what());
  }
  EnvironmentConfig config = parse_config(doc);
  try {
    EAMDP mdp = build_environment(config);
    return LoadedEnvironment{std::move(config), std::move(mdp)};
  } catch (const std::invalid_argument& e) {
    throw ConfigError("<environment>", e.what());
  }
}

}  // namespace eamdp
