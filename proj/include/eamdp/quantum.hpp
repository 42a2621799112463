#pragma once

// Finite-dimensional complex state vectors, projective measurement and
// reward operators for epistemically-ambivalent (EA) quantum states.

#include <complex>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace eamdp {

using Complex = std::complex<double>;

/// Tolerance for unit norm, orthogonality and completeness checks.
inline constexpr double kNormTolerance = 1e-9;
/// Tolerance for Hermitian symmetry and imaginary residue of expectations.
inline constexpr double kHermitianTolerance = 1e-12;

class DimensionMismatch : public std::invalid_argument {
 public:
  DimensionMismatch(const std::string& what, std::size_t lhs, std::size_t rhs);
};

/// A complex amplitude vector. Amplitudes are always finite.
class StateVector {
 public:
  StateVector() = default;
  explicit StateVector(std::vector<Complex> amplitudes);
  StateVector(std::initializer_list<Complex> amplitudes);

  /// Unit vector e_index in a space of dimension dim.
  static StateVector basis(std::size_t dim, std::size_t index);

  std::size_t dim() const noexcept { return amps_.size(); }
  std::span<const Complex> amplitudes() const noexcept { return amps_; }
  const Complex& operator[](std::size_t i) const { return amps_.at(i); }

  double squared_norm() const noexcept;
  bool is_normalized(double tol = kNormTolerance) const noexcept;

  /// Returns this vector scaled to unit norm. Throws on the zero vector.
  StateVector renormalized() const;
  StateVector scaled(Complex factor) const;
  /// Returns a copy with amplitude `index` multiplied by exp(i*theta).
  StateVector with_phase(std::size_t index, double theta) const;

  friend bool operator==(const StateVector&, const StateVector&) = default;

 private:
  std::vector<Complex> amps_;
};

/// <bra|ket> = sum_j conj(bra_j) * ket_j.
Complex inner_product(const StateVector& bra, const StateVector& ket);

/// Kronecker product: entry (i * b.dim() + j) = a_i * b_j.
StateVector tensor_product(const StateVector& a, const StateVector& b);

/// Projective measurement probability ||<outcome|state>||^2.
double measurement_probability(const StateVector& outcome, const StateVector& state);

struct ValidationReport {
  bool unit_norms = false;
  bool orthogonal = false;
  bool complete = false;
  double max_violation = 0.0;

  bool ok() const noexcept { return unit_norms && orthogonal && complete; }
  std::string describe() const;
};

/// Checks unit norm, pairwise orthogonality and sum_w |w><w| == I.
/// Throws std::invalid_argument on an empty list or mixed dimensions.
ValidationReport validate_outcome_set(std::span<const StateVector> outcomes);

class InvalidOutcomeSet : public std::runtime_error {
 public:
  explicit InvalidOutcomeSet(ValidationReport report);
  const ValidationReport& report() const noexcept { return report_; }

 private:
  ValidationReport report_;
};

enum class OutcomeMode { FullSpace, EaSeparated };

/// A complete orthonormal family of measurement outcomes. Construction
/// validates the family and throws InvalidOutcomeSet when it fails.
class OutcomeSet {
 public:
  OutcomeSet(std::vector<StateVector> outcomes, OutcomeMode mode = OutcomeMode::EaSeparated);

  static OutcomeSet standard_basis(std::size_t dim, OutcomeMode mode = OutcomeMode::EaSeparated);
  /// Scales every vector to unit norm before validating.
  static OutcomeSet renormalize(std::vector<StateVector> outcomes,
                                OutcomeMode mode = OutcomeMode::EaSeparated);

  std::size_t space_dim() const noexcept { return outcomes_.front().dim(); }
  std::size_t size() const noexcept { return outcomes_.size(); }
  OutcomeMode mode() const noexcept { return mode_; }
  std::span<const StateVector> outcomes() const noexcept { return outcomes_; }
  const StateVector& operator[](std::size_t i) const { return outcomes_.at(i); }

 private:
  std::vector<StateVector> outcomes_;
  OutcomeMode mode_;
};

/// Outcome rewards, index-aligned with an OutcomeSet.
class RewardSpec {
 public:
  RewardSpec() = default;
  explicit RewardSpec(std::vector<double> rewards);
  RewardSpec(std::initializer_list<double> rewards);

  std::size_t size() const noexcept { return rewards_.size(); }
  std::span<const double> values() const noexcept { return rewards_; }
  double operator[](std::size_t i) const { return rewards_.at(i); }
  RewardSpec with(std::size_t index, double value) const;

  friend bool operator==(const RewardSpec&, const RewardSpec&) = default;

 private:
  std::vector<double> rewards_;
};

/// Dense Hermitian matrix, row-major.
class HermitianOperator {
 public:
  /// Throws std::invalid_argument unless entries(i,j) == conj(entries(j,i))
  /// within kHermitianTolerance.
  HermitianOperator(std::size_t dim, std::vector<Complex> entries);

  static HermitianOperator identity(std::size_t dim);

  std::size_t dim() const noexcept { return dim_; }
  const Complex& operator()(std::size_t row, std::size_t col) const {
    return entries_.at(row * dim_ + col);
  }
  std::span<const Complex> entries() const noexcept { return entries_; }

  StateVector apply(const StateVector& ket) const;
  /// <psi|H|psi> as a complex number, imaginary part left untouched.
  Complex sandwich(const StateVector& psi) const;

 private:
  std::size_t dim_;
  std::vector<Complex> entries_;
};

/// I_n (x) op.
HermitianOperator lift_to_product_space(std::size_t n, const HermitianOperator& op);

/// R = sum_w r(w) |w><w|.
HermitianOperator build_reward_operator(const OutcomeSet& outcomes, const RewardSpec& rewards);

/// Real expectation <psi|H|psi>. Throws std::domain_error when the imaginary
/// residue exceeds kHermitianTolerance.
double operator_expectation(const HermitianOperator& op, const StateVector& psi);

/// sum_w P_w(state) r(w).
double expected_reward(const StateVector& state, const OutcomeSet& outcomes,
                       const RewardSpec& rewards);

/// w[j] = |c_j|^2.
std::vector<double> w_mapping(const StateVector& ea_state);

/// sum_j r(j) w[j], the reward when outcomes coincide with the EA basis.
double bijective_reward(const StateVector& ea_state, std::span<const double> basis_rewards);

/// Expected reward of an EA state measured against an outcome set living in
/// the EA space only (separated outcomes).
double separated_expected_reward(const StateVector& ea_state, const OutcomeSet& ea_outcomes,
                                 const RewardSpec& rewards);

}  // namespace eamdp
