#include <array>
#include <cmath>
#include <numbers>

#include "doctest.h"

#include "eamdp/environments.hpp"
#include "eamdp/quantum.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace eamdp;
using doctest::Approx;

namespace {

const double kRoot2 = std::sqrt(2.0);
const Complex kI{0.0, 1.0};

StateVector site1_state() { return {2.0 / 3, 2.0 / 3, 1.0 / 3}; }
StateVector site2_state() { return {2.0 / 3, 1.0 / 3, 2.0 / 3}; }

// every outcome-set fixture used by the property tests
std::vector<OutcomeSet> fixture_sets() {
  oracle::SplitMix rng(7);
  std::vector<OutcomeSet> sets{OutcomeSet::standard_basis(3), OutcomeSet::standard_basis(4),
                               two_site_outcomes(), lattice_outcome_family(0.0, 0.0),
                               lattice_outcome_family(0.7, 2.1)};
  for (std::size_t dim : {2, 3, 5}) {
    std::vector<StateVector> basis;
    for (const auto& v : oracle::random_basis(rng, dim)) basis.push_back(testing::to_state(v));
    sets.emplace_back(std::move(basis));
  }
  return sets;
}

}  // namespace

TEST_CASE("inner product of basis vectors") {
  CHECK(inner_product(StateVector::basis(3, 0), StateVector::basis(3, 0)) == Complex(1.0, 0.0));
  CHECK(inner_product(StateVector::basis(3, 0), StateVector::basis(3, 1)) == Complex(0.0, 0.0));
}

TEST_CASE("inner product conjugates the bra") {
  const StateVector bra{1.0 / kRoot2, kI / kRoot2, 0.0};
  const auto got = inner_product(bra, site1_state());
  const auto want = oracle::inner(testing::to_vec(bra), testing::to_vec(site1_state()));
  CHECK(got.real() == Approx(want.re).epsilon(1e-15));
  CHECK(got.imag() == Approx(want.im).epsilon(1e-15));
  CHECK(got.real() == Approx(2.0 / 3 / kRoot2));
  CHECK(got.imag() == Approx(-2.0 / 3 / kRoot2));
  CHECK(std::norm(got) == Approx(4.0 / 9).epsilon(1e-14));
}

TEST_CASE("dimension mismatch is rejected") {
  CHECK_THROWS_AS(inner_product(StateVector::basis(2, 0), StateVector::basis(3, 0)), DimensionMismatch);
  CHECK_THROWS_AS(measurement_probability(StateVector::basis(2, 0), site1_state()), DimensionMismatch);
}

TEST_CASE("state vectors reject empty and non-finite amplitudes") {
  CHECK_THROWS(StateVector(std::vector<Complex>{}));
  CHECK_THROWS(StateVector{1.0, std::nan("")});
  CHECK_THROWS(StateVector{0.0, 0.0}.renormalized());
}

TEST_CASE("tensor product") {
  SUBCASE("basis vectors") {
    for (std::size_t i = 0; i < 3; ++i)
      for (std::size_t j = 0; j < 4; ++j)
        CHECK(tensor_product(StateVector::basis(3, i), StateVector::basis(4, j)) ==
              StateVector::basis(12, i * 4 + j));
  }
  SUBCASE("site state places the EA amplitudes in its block") {
    const auto lifted = tensor_product(StateVector::basis(2, 0), site1_state());
    REQUIRE(lifted.dim() == 6);
    for (std::size_t j = 0; j < 3; ++j) {
      CHECK(lifted[j] == site1_state()[j]);
      CHECK(lifted[3 + j] == Complex(0.0, 0.0));
    }
  }
  SUBCASE("norm is multiplicative") {
    oracle::SplitMix rng(11);
    for (int trial = 0; trial < 100; ++trial) {
      const auto a = testing::to_state(oracle::random_unit(rng, 1 + rng.below(5)));
      const auto b = testing::to_state(oracle::random_unit(rng, 1 + rng.below(5)));
      CHECK(tensor_product(a, b).squared_norm() == Approx(1.0).epsilon(1e-12));
    }
  }
}

TEST_CASE("outcome set validation") {
  SUBCASE("standard basis") {
    const auto basis = OutcomeSet::standard_basis(4);
    const auto report = validate_outcome_set(basis.outcomes());
    CHECK(report.ok());
    CHECK(report.max_violation < 1e-15);
  }
  SUBCASE("two-site outcomes") {
    CHECK(validate_outcome_set(two_site_outcomes().outcomes()).ok());
  }
  SUBCASE("lattice family with the extra 1/sqrt2") {
    const auto scaled = lattice_outcome_family_scaled(0.0, 0.0);
    const auto report = validate_outcome_set(scaled);
    CHECK_FALSE(report.unit_norms);
    CHECK_FALSE(report.complete);
    CHECK(report.orthogonal);
    CHECK(report.max_violation == Approx(0.5));
    for (const auto& w : scaled) CHECK(w.squared_norm() == Approx(0.5).epsilon(1e-15));
  }
  SUBCASE("construction fails fast and carries the report") {
    try {
      OutcomeSet bad(lattice_outcome_family_scaled(0.3, 0.0));
      FAIL("expected InvalidOutcomeSet");
    } catch (const InvalidOutcomeSet& e) {
      CHECK_FALSE(e.report().unit_norms);
    }
  }
  SUBCASE("renormalize repairs the scaled family") {
    const auto repaired = OutcomeSet::renormalize(lattice_outcome_family_scaled(0.3, 1.2));
    CHECK(validate_outcome_set(repaired.outcomes()).ok());
  }
  SUBCASE("incomplete family") {
    std::vector<StateVector> partial{StateVector::basis(3, 0), StateVector::basis(3, 1)};
    const auto report = validate_outcome_set(partial);
    CHECK(report.unit_norms);
    CHECK(report.orthogonal);
    CHECK_FALSE(report.complete);
  }
  SUBCASE("empty and mixed lists") {
    CHECK_THROWS(validate_outcome_set(std::span<const StateVector>{}));
    std::vector<StateVector> mixed{StateVector::basis(2, 0), StateVector::basis(3, 1)};
    CHECK_THROWS(validate_outcome_set(mixed));
  }
}

TEST_CASE("validation does not mutate its input") {
  auto scaled = lattice_outcome_family_scaled(0.4, 0.9);
  const auto copy = scaled;
  (void)validate_outcome_set(scaled);
  CHECK(scaled == copy);
}

TEST_CASE("measurement probability examples") {
  const auto outcomes = two_site_outcomes();
  CHECK(measurement_probability(site1_state(), site1_state()) == Approx(1.0).epsilon(1e-15));
  CHECK(measurement_probability(StateVector::basis(3, 2), site1_state()) == Approx(1.0 / 9).epsilon(1e-15));
  CHECK(measurement_probability(outcomes[0], site2_state()) == Approx(5.0 / 18).epsilon(1e-14));
  CHECK(measurement_probability(outcomes[0], site2_state()) ==
        Approx(oracle::probability(testing::to_vec(outcomes[0]), testing::to_vec(site2_state()))).epsilon(1e-15));
  double total = 0.0;
  for (const auto& w : outcomes.outcomes()) total += measurement_probability(w, site2_state());
  CHECK(total == Approx(1.0).epsilon(1e-14));
}

TEST_CASE("probability closure on random states") {
  oracle::SplitMix rng(2024);
  for (const auto& set : fixture_sets()) {
    for (int trial = 0; trial < 1000; ++trial) {
      const auto psi = testing::to_state(oracle::random_unit(rng, set.space_dim()));
      double total = 0.0;
      for (const auto& w : set.outcomes()) {
        const double p = measurement_probability(w, psi);
        CHECK(p >= -1e-12);
        CHECK(p <= 1.0 + 1e-12);
        total += p;
      }
      CHECK(std::abs(total - 1.0) <= 1e-9);
    }
  }
}

TEST_CASE("reward operator examples") {
  SUBCASE("standard basis gives a diagonal operator") {
    const auto op = build_reward_operator(OutcomeSet::standard_basis(3), RewardSpec{-1.0, 0.5, 4.0});
    for (std::size_t i = 0; i < 3; ++i)
      for (std::size_t j = 0; j < 3; ++j)
        CHECK(op(i, j) == Complex(i == j ? std::array{-1.0, 0.5, 4.0}[i] : 0.0, 0.0));
  }
  SUBCASE("two-site outcomes") {
    const auto set = two_site_outcomes();
    const RewardSpec r{-1.0, 1.0, 2.0};
    const auto op = build_reward_operator(set, r);
    const Complex want[3][3] = {{0.0, kI, 0.0}, {-kI, 0.0, 0.0}, {0.0, 0.0, 2.0}};
    const auto vecs = testing::to_vecs(set);
    const std::vector<double> rv{-1.0, 1.0, 2.0};
    for (std::size_t i = 0; i < 3; ++i) {
      for (std::size_t j = 0; j < 3; ++j) {
        CHECK(std::abs(op(i, j) - want[i][j]) <= 1e-12);
        const auto ref = oracle::reward_operator_entry(vecs, rv, i, j);
        CHECK(std::abs(op(i, j) - Complex(ref.re, ref.im)) <= 1e-15);
      }
    }
  }
  SUBCASE("constant rewards give a multiple of the identity") {
    for (const auto& set : fixture_sets()) {
      const auto op = build_reward_operator(set, RewardSpec(std::vector<double>(set.size(), 1.75)));
      for (std::size_t i = 0; i < op.dim(); ++i)
        for (std::size_t j = 0; j < op.dim(); ++j)
          CHECK(std::abs(op(i, j) - Complex(i == j ? 1.75 : 0.0, 0.0)) <= 1e-12);
    }
  }
  SUBCASE("reward count must match") {
    CHECK_THROWS(build_reward_operator(two_site_outcomes(), RewardSpec{1.0, 2.0}));
  }
}

TEST_CASE("hermitian operator invariant") {
  CHECK_THROWS(HermitianOperator(2, {1.0, kI, kI, 0.0}));
  CHECK_NOTHROW(HermitianOperator(2, {1.0, kI, -kI, 0.0}));
  CHECK_THROWS(HermitianOperator(2, {1.0, 0.0, 0.0}));
  oracle::SplitMix rng(5);
  for (const auto& set : fixture_sets()) {
    std::vector<double> r;
    for (std::size_t k = 0; k < set.size(); ++k) r.push_back(rng.uniform(-3, 3));
    const auto op = build_reward_operator(set, RewardSpec(r));
    for (std::size_t i = 0; i < op.dim(); ++i)
      for (std::size_t j = 0; j < op.dim(); ++j) CHECK(std::abs(op(i, j) - std::conj(op(j, i))) <= 1e-12);
  }
}

TEST_CASE("expected reward examples") {
  const auto set = two_site_outcomes();
  for (double r2 : {-3.0, -1.0, 0.0, 2.0, 2.5}) {
    const RewardSpec r{-1.0, 1.0, r2};
    CHECK(expected_reward(site1_state(), set, r) == Approx(r2 / 9).epsilon(1e-14));
    CHECK(expected_reward(site2_state(), set, r) == Approx(4 * r2 / 9).epsilon(1e-14));
  }
  const RewardSpec r{-1.0, 1.0, 2.0};
  for (std::size_t k = 0; k < set.size(); ++k)
    CHECK(expected_reward(set[k], set, r) == Approx(r[k]).epsilon(1e-14));
  CHECK_THROWS_AS(expected_reward(StateVector::basis(2, 0), set, r), DimensionMismatch);
}

TEST_CASE("expected reward equals the operator expectation") {
  oracle::SplitMix rng(99);
  for (const auto& set : fixture_sets()) {
    std::vector<double> r;
    for (std::size_t k = 0; k < set.size(); ++k) r.push_back(rng.uniform(-3, 3));
    const RewardSpec rewards(r);
    const auto op = build_reward_operator(set, rewards);
    const auto vecs = testing::to_vecs(set);
    for (int trial = 0; trial < 1000; ++trial) {
      const auto v = oracle::random_unit(rng, set.space_dim());
      const auto psi = testing::to_state(v);
      const double sum_route = expected_reward(psi, set, rewards);
      CHECK(std::abs(sum_route - operator_expectation(op, psi)) <= 1e-9);
      CHECK(std::abs(sum_route - oracle::expected_reward(vecs, r, v)) <= 1e-12);
    }
  }
}

TEST_CASE("expected reward ignores a global phase") {
  oracle::SplitMix rng(3);
  const auto set = lattice_outcome_family(1.1, 0.4);
  const RewardSpec r{-1.0, -2.0, -3.0, 1.0};
  for (int trial = 0; trial < 200; ++trial) {
    const auto psi = testing::to_state(oracle::random_unit(rng, 4));
    const double theta = rng.uniform(0, 2 * std::numbers::pi);
    const auto rotated = psi.scaled(std::polar(1.0, theta));
    CHECK(std::abs(expected_reward(rotated, set, r) - expected_reward(psi, set, r)) <= 1e-12);
  }
}

TEST_CASE("w mapping") {
  const auto w1 = w_mapping(StateVector::basis(3, 1));
  CHECK(w1 == std::vector<double>{0.0, 1.0, 0.0});
  const auto w = w_mapping(site1_state());
  CHECK(w[0] == Approx(4.0 / 9).epsilon(1e-15));
  CHECK(w[1] == Approx(4.0 / 9).epsilon(1e-15));
  CHECK(w[2] == Approx(1.0 / 9).epsilon(1e-15));
  const auto half = w_mapping(StateVector{1.0 / kRoot2, kI / kRoot2});
  CHECK(half[0] == Approx(0.5));
  CHECK(half[1] == Approx(0.5));

  oracle::SplitMix rng(17);
  for (int trial = 0; trial < 200; ++trial) {
    const auto psi = testing::to_state(oracle::random_unit(rng, 5));
    const auto base = w_mapping(psi);
    double total = 0.0;
    for (double x : base) total += x;
    CHECK(std::abs(total - 1.0) <= 1e-9);
    const auto phased = w_mapping(psi.with_phase(rng.below(5), rng.uniform(0, 6.3)));
    for (std::size_t j = 0; j < 5; ++j) CHECK(std::abs(phased[j] - base[j]) <= 1e-15);
  }
}

TEST_CASE("bijective reward") {
  const std::vector<double> r{-1.0, -2.0, -3.0, 1.0};
  const StateVector psi41{0.0, 1.0 / kRoot2, 0.0, 1.0 / kRoot2};
  CHECK(bijective_reward(psi41, r) == Approx(-0.5).epsilon(1e-15));
  for (std::size_t j = 0; j < 4; ++j) CHECK(bijective_reward(StateVector::basis(4, j), r) == r[j]);
  CHECK(bijective_reward(StateVector{0.5, 0.5, 0.5, 0.5}, r) == Approx(-1.25).epsilon(1e-15));
  CHECK_THROWS(bijective_reward(psi41, std::vector<double>{1.0, 2.0}));
}

TEST_CASE("separated expected reward") {
  const auto set = two_site_outcomes();
  const RewardSpec r{-1.0, 1.0, 2.0};
  CHECK(separated_expected_reward(site1_state(), set, r) == Approx(2.0 / 9).epsilon(1e-14));

  const StateVector psi33{0.0, 0.0, 1.0 / kRoot2, kI / kRoot2};
  const RewardSpec lattice_r{-1.0, -2.0, -3.0, 1.0};
  CHECK(separated_expected_reward(psi33, lattice_outcome_family(0.0, 0.0), lattice_r) ==
        Approx(-1.0).epsilon(1e-15));

  SUBCASE("lifted operator on the product space") {
    oracle::SplitMix rng(23);
    const auto family = lattice_outcome_family(0.9, 2.2);
    const auto ea_op = build_reward_operator(family, lattice_r);
    for (std::size_t n = 1; n <= 5; ++n) {
      const auto lifted = lift_to_product_space(n, ea_op);
      REQUIRE(lifted.dim() == 4 * n);
      for (int trial = 0; trial < 50; ++trial) {
        const auto psi = testing::to_state(oracle::random_unit(rng, 4));
        const auto full = tensor_product(StateVector::basis(n, rng.below(n)), psi);
        CHECK(std::abs(separated_expected_reward(psi, family, lattice_r) - operator_expectation(lifted, full)) <=
              1e-9);
      }
    }
  }
  SUBCASE("standard basis reduces to the bijective reward") {
    oracle::SplitMix rng(29);
    const auto basis = OutcomeSet::standard_basis(4);
    for (int trial = 0; trial < 200; ++trial) {
      const auto psi = testing::to_state(oracle::random_unit(rng, 4));
      const double sep = separated_expected_reward(psi, basis, lattice_r);
      const double bij = bijective_reward(psi, lattice_r.values());
      const auto w = w_mapping(psi);
      double by_hand = 0.0;
      for (std::size_t j = 0; j < 4; ++j) by_hand += lattice_r[j] * w[j];
      CHECK(sep == bij);
      CHECK(bij == by_hand);
    }
  }
}

TEST_CASE("lift to product space is block diagonal") {
  const auto op = build_reward_operator(two_site_outcomes(), RewardSpec{-1.0, 1.0, 2.0});
  const auto lifted = lift_to_product_space(3, op);
  for (std::size_t i = 0; i < 9; ++i)
    for (std::size_t j = 0; j < 9; ++j)
      CHECK(lifted(i, j) == (i / 3 == j / 3 ? op(i % 3, j % 3) : Complex(0.0, 0.0)));
}
