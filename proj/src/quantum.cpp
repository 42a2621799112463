#include "eamdp/quantum.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace eamdp {

namespace {

bool is_finite(const Complex& z) { return std::isfinite(z.real()) && std::isfinite(z.imag()); }

void require_same_dim(const char* what, std::size_t lhs, std::size_t rhs) {
  if (lhs != rhs) throw DimensionMismatch(what, lhs, rhs);
}

}  // namespace

DimensionMismatch::DimensionMismatch(const std::string& what, std::size_t lhs, std::size_t rhs)
    : std::invalid_argument(what + ": incompatible dimensions " + std::to_string(lhs) + " and " +
                            std::to_string(rhs)) {}

// ---------------------------------------------------------------------------
// StateVector

StateVector::StateVector(std::vector<Complex> amplitudes) : amps_(std::move(amplitudes)) {
  if (amps_.empty()) throw std::invalid_argument("StateVector: dimension must be positive");
  for (std::size_t i = 0; i < amps_.size(); ++i) {
    if (!is_finite(amps_[i]))
      throw std::invalid_argument("StateVector: non-finite amplitude at index " + std::to_string(i));
  }
}

StateVector::StateVector(std::initializer_list<Complex> amplitudes)
    : StateVector(std::vector<Complex>(amplitudes)) {}

StateVector StateVector::basis(std::size_t dim, std::size_t index) {
  if (index >= dim) throw std::out_of_range("StateVector::basis: index out of range");
  std::vector<Complex> amps(dim, Complex{0.0, 0.0});
  amps[index] = 1.0;
  return StateVector(std::move(amps));
}

double StateVector::squared_norm() const noexcept {
  double sum = 0.0;
  for (const auto& a : amps_) sum += std::norm(a);
  return sum;
}

bool StateVector::is_normalized(double tol) const noexcept {
  return !amps_.empty() && std::abs(squared_norm() - 1.0) <= tol;
}

StateVector StateVector::renormalized() const {
  const double n = std::sqrt(squared_norm());
  if (n == 0.0) throw std::invalid_argument("StateVector::renormalized: zero vector");
  return scaled(Complex{1.0 / n, 0.0});
}

StateVector StateVector::scaled(Complex factor) const {
  std::vector<Complex> out(amps_);
  for (auto& a : out) a *= factor;
  return StateVector(std::move(out));
}

StateVector StateVector::with_phase(std::size_t index, double theta) const {
  std::vector<Complex> out(amps_);
  out.at(index) *= std::polar(1.0, theta);
  return StateVector(std::move(out));
}

// ---------------------------------------------------------------------------
// Free functions on vectors

Complex inner_product(const StateVector& bra, const StateVector& ket) {
  require_same_dim("inner_product", bra.dim(), ket.dim());
  Complex sum{0.0, 0.0};
  for (std::size_t j = 0; j < bra.dim(); ++j) sum += std::conj(bra[j]) * ket[j];
  return sum;
}

StateVector tensor_product(const StateVector& a, const StateVector& b) {
  std::vector<Complex> out;
  out.reserve(a.dim() * b.dim());
  for (const auto& ai : a.amplitudes())
    for (const auto& bj : b.amplitudes()) out.push_back(ai * bj);
  return StateVector(std::move(out));
}

double measurement_probability(const StateVector& outcome, const StateVector& state) {
  return std::norm(inner_product(outcome, state));
}

// ---------------------------------------------------------------------------
// Outcome sets

std::string ValidationReport::describe() const {
  std::ostringstream os;
  os << "unit_norms=" << (unit_norms ? "true" : "false")
     << " orthogonal=" << (orthogonal ? "true" : "false")
     << " complete=" << (complete ? "true" : "false") << " max_violation=" << max_violation;
  return os.str();
}

ValidationReport validate_outcome_set(std::span<const StateVector> outcomes) {
  if (outcomes.empty()) throw std::invalid_argument("validate_outcome_set: empty outcome list");
  const std::size_t dim = outcomes.front().dim();
  for (const auto& w : outcomes) require_same_dim("validate_outcome_set", dim, w.dim());

  double norm_violation = 0.0;
  for (const auto& w : outcomes)
    norm_violation = std::max(norm_violation, std::abs(w.squared_norm() - 1.0));

  double ortho_violation = 0.0;
  for (std::size_t a = 0; a < outcomes.size(); ++a)
    for (std::size_t b = a + 1; b < outcomes.size(); ++b)
      ortho_violation = std::max(ortho_violation, std::abs(inner_product(outcomes[a], outcomes[b])));

  // sum_w |w><w| compared entrywise against the identity
  double completeness_violation = 0.0;
  for (std::size_t i = 0; i < dim; ++i) {
    for (std::size_t j = 0; j < dim; ++j) {
      Complex sum{0.0, 0.0};
      for (const auto& w : outcomes) sum += w[i] * std::conj(w[j]);
      const Complex expected = (i == j) ? Complex{1.0, 0.0} : Complex{0.0, 0.0};
      completeness_violation = std::max(completeness_violation, std::abs(sum - expected));
    }
  }

  ValidationReport report;
  report.unit_norms = norm_violation <= kNormTolerance;
  report.orthogonal = ortho_violation <= kNormTolerance;
  report.complete = completeness_violation <= kNormTolerance;
  report.max_violation = std::max({norm_violation, ortho_violation, completeness_violation});
  return report;
}

InvalidOutcomeSet::InvalidOutcomeSet(ValidationReport report)
    : std::runtime_error("invalid outcome set: " + report.describe()), report_(report) {}

OutcomeSet::OutcomeSet(std::vector<StateVector> outcomes, OutcomeMode mode)
    : outcomes_(std::move(outcomes)), mode_(mode) {
  const auto report = validate_outcome_set(outcomes_);
  if (!report.ok()) throw InvalidOutcomeSet(report);
}

OutcomeSet OutcomeSet::standard_basis(std::size_t dim, OutcomeMode mode) {
  std::vector<StateVector> basis;
  basis.reserve(dim);
  for (std::size_t j = 0; j < dim; ++j) basis.push_back(StateVector::basis(dim, j));
  return OutcomeSet(std::move(basis), mode);
}

OutcomeSet OutcomeSet::renormalize(std::vector<StateVector> outcomes, OutcomeMode mode) {
  for (auto& w : outcomes) w = w.renormalized();
  return OutcomeSet(std::move(outcomes), mode);
}

// ---------------------------------------------------------------------------
// Rewards

RewardSpec::RewardSpec(std::vector<double> rewards) : rewards_(std::move(rewards)) {
  for (std::size_t i = 0; i < rewards_.size(); ++i) {
    if (!std::isfinite(rewards_[i]))
      throw std::invalid_argument("RewardSpec: non-finite reward at index " + std::to_string(i));
  }
}

RewardSpec::RewardSpec(std::initializer_list<double> rewards)
    : RewardSpec(std::vector<double>(rewards)) {}

RewardSpec RewardSpec::with(std::size_t index, double value) const {
  std::vector<double> out(rewards_);
  out.at(index) = value;
  return RewardSpec(std::move(out));
}

// ---------------------------------------------------------------------------
// Operators

HermitianOperator::HermitianOperator(std::size_t dim, std::vector<Complex> entries)
    : dim_(dim), entries_(std::move(entries)) {
  if (dim_ == 0) throw std::invalid_argument("HermitianOperator: dimension must be positive");
  if (entries_.size() != dim_ * dim_)
    throw DimensionMismatch("HermitianOperator entries", entries_.size(), dim_ * dim_);
  for (std::size_t i = 0; i < dim_; ++i) {
    for (std::size_t j = i; j < dim_; ++j) {
      const Complex& a = entries_[i * dim_ + j];
      const Complex& b = entries_[j * dim_ + i];
      if (!is_finite(a) || std::abs(a - std::conj(b)) > kHermitianTolerance) {
        throw std::invalid_argument("HermitianOperator: entry (" + std::to_string(i) + "," +
                                    std::to_string(j) + ") breaks Hermitian symmetry");
      }
    }
  }
}

HermitianOperator HermitianOperator::identity(std::size_t dim) {
  std::vector<Complex> e(dim * dim, Complex{0.0, 0.0});
  for (std::size_t i = 0; i < dim; ++i) e[i * dim + i] = 1.0;
  return HermitianOperator(dim, std::move(e));
}

StateVector HermitianOperator::apply(const StateVector& ket) const {
  require_same_dim("HermitianOperator::apply", dim_, ket.dim());
  std::vector<Complex> out(dim_, Complex{0.0, 0.0});
  for (std::size_t i = 0; i < dim_; ++i)
    for (std::size_t j = 0; j < dim_; ++j) out[i] += entries_[i * dim_ + j] * ket[j];
  return StateVector(std::move(out));
}

Complex HermitianOperator::sandwich(const StateVector& psi) const {
  return inner_product(psi, apply(psi));
}

HermitianOperator lift_to_product_space(std::size_t n, const HermitianOperator& op) {
  const std::size_t m = op.dim();
  const std::size_t dim = n * m;
  std::vector<Complex> e(dim * dim, Complex{0.0, 0.0});
  for (std::size_t block = 0; block < n; ++block)
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < m; ++j) e[(block * m + i) * dim + block * m + j] = op(i, j);
  return HermitianOperator(dim, std::move(e));
}

HermitianOperator build_reward_operator(const OutcomeSet& outcomes, const RewardSpec& rewards) {
  if (rewards.size() != outcomes.size())
    throw DimensionMismatch("build_reward_operator rewards", rewards.size(), outcomes.size());
  const std::size_t dim = outcomes.space_dim();
  std::vector<Complex> e(dim * dim, Complex{0.0, 0.0});
  for (std::size_t k = 0; k < outcomes.size(); ++k) {
    const auto& w = outcomes[k];
    for (std::size_t i = 0; i < dim; ++i)
      for (std::size_t j = 0; j < dim; ++j) e[i * dim + j] += rewards[k] * w[i] * std::conj(w[j]);
  }
  return HermitianOperator(dim, std::move(e));
}

double operator_expectation(const HermitianOperator& op, const StateVector& psi) {
  const Complex value = op.sandwich(psi);
  if (std::abs(value.imag()) > kHermitianTolerance) {
    throw std::domain_error("operator_expectation: imaginary residue " +
                            std::to_string(value.imag()) + " exceeds tolerance");
  }
  return value.real();
}

double expected_reward(const StateVector& state, const OutcomeSet& outcomes,
                       const RewardSpec& rewards) {
  require_same_dim("expected_reward state", outcomes.space_dim(), state.dim());
  if (rewards.size() != outcomes.size())
    throw DimensionMismatch("expected_reward rewards", rewards.size(), outcomes.size());
  double sum = 0.0;
  for (std::size_t k = 0; k < outcomes.size(); ++k)
    sum += measurement_probability(outcomes[k], state) * rewards[k];
  return sum;
}

std::vector<double> w_mapping(const StateVector& ea_state) {
  std::vector<double> w;
  w.reserve(ea_state.dim());
  for (const auto& c : ea_state.amplitudes()) w.push_back(std::norm(c));
  return w;
}

double bijective_reward(const StateVector& ea_state, std::span<const double> basis_rewards) {
  require_same_dim("bijective_reward", ea_state.dim(), basis_rewards.size());
  const auto w = w_mapping(ea_state);
  double sum = 0.0;
  for (std::size_t j = 0; j < w.size(); ++j) sum += basis_rewards[j] * w[j];
  return sum;
}

double separated_expected_reward(const StateVector& ea_state, const OutcomeSet& ea_outcomes,
                                 const RewardSpec& rewards) {
  return expected_reward(ea_state, ea_outcomes, rewards);
}

}  // namespace eamdp
