#pragma once

#include <vector>

#include "eamdp/environments.hpp"
#include "eamdp/mdp.hpp"
#include "eamdp/quantum.hpp"
#include "oracles.hpp"

namespace testing {

inline eamdp::StateVector to_state(const oracle::Vec& v) {
  std::vector<eamdp::Complex> amps;
  for (const auto& a : v) amps.emplace_back(a.re, a.im);
  return eamdp::StateVector(std::move(amps));
}

inline oracle::Vec to_vec(const eamdp::StateVector& s) {
  oracle::Vec v;
  for (const auto& a : s.amplitudes()) v.push_back({a.real(), a.imag()});
  return v;
}

inline std::vector<oracle::Vec> to_vecs(const eamdp::OutcomeSet& set) {
  std::vector<oracle::Vec> out;
  for (const auto& w : set.outcomes()) out.push_back(to_vec(w));
  return out;
}

inline std::vector<double> to_doubles(std::span<const double> s) { return {s.begin(), s.end()}; }

inline eamdp::ValueFunction random_values(oracle::SplitMix& rng, std::size_t n, double scale) {
  eamdp::ValueFunction v;
  for (std::size_t i = 0; i < n; ++i) v.values.push_back(rng.uniform(-scale, scale));
  return v;
}

/// Random stochastic MDP over n states, three actions with about two thirds
/// available, EA states over the standard basis of dimension 3.
inline eamdp::EAMDP random_mdp(oracle::SplitMix& rng, std::size_t n, double gamma) {
  eamdp::MdpDefinition def;
  def.n_states = n;
  def.n_actions = 3;
  def.gamma = gamma;
  def.available.assign(n * 3, false);
  def.transitions.resize(n * 3);
  for (std::size_t s = 0; s < n; ++s) {
    for (std::size_t a = 0; a < 3; ++a) {
      if (a != 0 && rng.uniform() < 0.33) continue;
      def.available[s * 3 + a] = true;
      std::vector<double> w(n);
      double total = 0.0;
      for (auto& x : w) total += (x = rng.uniform() < 0.5 ? rng.uniform() : 0.0);
      if (total == 0.0) {
        w[rng.below(n)] = 1.0;
        total = 1.0;
      }
      auto& row = def.transitions[s * 3 + a];
      double assigned = 0.0;
      std::size_t last = 0;
      for (std::size_t t = 0; t < n; ++t) {
        if (w[t] == 0.0) continue;
        row.push_back({t, w[t] / total});
        assigned += w[t] / total;
        last = row.size() - 1;
      }
      row[last].probability += 1.0 - assigned;
    }
    def.ea_states.push_back(to_state(oracle::random_unit(rng, 3)));
  }
  def.outcomes = eamdp::OutcomeSet::standard_basis(3);
  def.rewards = eamdp::RewardSpec{rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(-2, 2)};
  return eamdp::EAMDP(std::move(def));
}

inline eamdp::EAMDP two_site(double gamma = 0.8, double reward2 = 2.0) {
  auto spec = eamdp::default_two_site_spec();
  spec.gamma = gamma;
  spec.rewards = spec.rewards.with(2, reward2);
  return eamdp::build_two_site(spec);
}

inline eamdp::EAMDP lattice() { return eamdp::build_lattice(eamdp::default_lattice_spec()); }

}  // namespace testing
