#pragma once

// Constructors for the two-site jump system and the obstacle lattice, plus
// the JSON configuration format that describes them.

#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"

#include "eamdp/mdp.hpp"
#include "eamdp/quantum.hpp"

namespace eamdp {

// --- two-site system -------------------------------------------------------

struct TwoSiteSpec {
  /// Base amplitudes; theta1/theta2 multiply the second amplitude of c1/c2
  /// by exp(i*theta).
  StateVector c1;
  StateVector c2;
  double theta1 = 0.0;
  double theta2 = 0.0;
  RewardSpec rewards;
  double gamma = 0.8;

  StateVector phased_c1() const { return c1.with_phase(1, theta1); }
  StateVector phased_c2() const { return c2.with_phase(1, theta2); }

  friend bool operator==(const TwoSiteSpec&, const TwoSiteSpec&) = default;
};

/// c1 = (2/3, 2/3, 1/3), c2 = (2/3, 1/3, 2/3), rewards (-1, 1, 2), gamma 0.8.
TwoSiteSpec default_two_site_spec();

/// {(|0> + i|1>)/sqrt2, (|0> - i|1>)/sqrt2, |2>}.
OutcomeSet two_site_outcomes();

/// Two states, one jump action swapping them, no terminals.
EAMDP build_two_site(const TwoSiteSpec& spec);

// --- lattice -------------------------------------------------------------

/// 1-based lattice coordinate, x to the right and y upward.
struct Site {
  int x = 1;
  int y = 1;

  friend auto operator<=>(const Site&, const Site&) = default;
};

enum class Move : std::size_t { Up = 0, Down = 1, Left = 2, Right = 3 };
inline constexpr std::size_t kLatticeActions = 4;
const char* move_name(std::size_t action);

struct LatticeSpec {
  int width = 5;
  int height = 5;
  std::vector<Site> obstacles;
  Site goal{5, 5};
  Site start{1, 1};
  /// Sites not listed here carry |0>.
  std::map<Site, StateVector> ea_assignments;
  double phi1 = 0.0;
  double phi2 = 0.0;
  RewardSpec rewards;
  double gamma = 0.9;

  std::size_t n_sites() const { return static_cast<std::size_t>(width) * height; }
  /// Row-major from (1,1): (y - 1) * width + (x - 1).
  std::size_t index(Site site) const;
  Site site(std::size_t index) const;
  bool contains(Site site) const;
  bool is_obstacle(Site site) const;
  StateVector ea_state(Site site) const;

  /// Throws std::invalid_argument on bounds, disjointness or normalization
  /// violations.
  void validate() const;

  friend bool operator==(const LatticeSpec&, const LatticeSpec&) = default;
};

/// The 5x5 lattice with the five decorated EA sites, obstacles at (2,2) and
/// (4,4), start (1,1), goal (5,5), rewards (-1, -2, -3, 1), gamma 0.9.
LatticeSpec default_lattice_spec();

/// Block-rotated outcome family, each vector of unit norm.
OutcomeSet lattice_outcome_family(double phi1, double phi2);

/// The same family carrying an extra 1/sqrt2 on every vector. Not a valid
/// outcome set; kept for validation reports.
std::vector<StateVector> lattice_outcome_family_scaled(double phi1, double phi2);

/// One state per site. The goal and obstacle sites are absorbing terminals;
/// obstacles are never entered because moves into them are masked.
EAMDP build_lattice(const LatticeSpec& spec);

// --- configuration ----------------------------------------------------------

class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& key, const std::string& message);
  const std::string& key() const noexcept { return key_; }

 private:
  std::string key_;
};

struct EnvironmentConfig {
  std::variant<TwoSiteSpec, LatticeSpec> system;
  /// Extra lattice sites reported by sweeps besides the start site.
  std::vector<Site> probes;

  bool is_lattice() const { return std::holds_alternative<LatticeSpec>(system); }

  friend bool operator==(const EnvironmentConfig&, const EnvironmentConfig&) = default;
};

/// Parses and validates a configuration document. Throws ConfigError naming
/// the offending key.
EnvironmentConfig parse_config(const nlohmann::json& doc);
nlohmann::json serialize_config(const EnvironmentConfig& config);

EAMDP build_environment(const EnvironmentConfig& config);
/// Index of the state where episodes and value probes start.
std::size_t start_state(const EnvironmentConfig& config);

struct LoadedEnvironment {
  EnvironmentConfig config;
  EAMDP mdp;
};

LoadedEnvironment load_config(const std::filesystem::path& path);

}  // namespace eamdp
