#pragma once

#include <optional>
#include <vector>

#include "projdecomp/decision.hpp"
#include "projdecomp/matcore.hpp"
#include "projdecomp/rational.hpp"

namespace projdecomp {

/// a = head ⊕ α·I on ℓ²; head acts on coordinates 0…d−1, the tail on d, d+1, …
class ScalarTailOperator {
 public:
  ScalarTailOperator() = default;
  ScalarTailOperator(HermitianMatrix head, Rational alpha, const TolerancePolicy& tol = {});

  const HermitianMatrix& head() const noexcept { return head_; }
  std::size_t head_dim() const noexcept { return head_.dim(); }
  const Rational& alpha() const noexcept { return alpha_; }
  double alpha_value() const { return alpha_.to_double(); }

  /// head ⊕ α·I_extra as a dense matrix on the first head_dim()+extra coordinates.
  HermitianMatrix truncate(std::size_t dim) const;

 private:
  HermitianMatrix head_;
  Rational alpha_;
};

enum class Family { PowerDecay, GeometricDecay, FiniteSupport, ScaledHarmonicLog };

std::string_view to_string(Family f);

/// Closed-form nonnegative sequence ξ₁, ξ₂, … .
class RuleSequence {
 public:
  static RuleSequence power(double c, double p);
  static RuleSequence geometric(double c, double r);
  static RuleSequence finite(std::vector<double> values);
  static RuleSequence harmonic_log(double c, double p, double q);

  Family family() const noexcept { return family_; }
  double c() const noexcept { return c_; }
  double p() const noexcept { return p_; }
  double r() const noexcept { return r_; }
  double q() const noexcept { return q_; }
  const std::vector<double>& values() const noexcept { return values_; }

  /// ξₙ for n ≥ 1; throws IndexOutOfRange otherwise.
  double at(long long n) const;
  bool finite_support() const noexcept { return family_ == Family::FiniteSupport; }
  /// Count of nonzero terms for finite support.
  std::size_t support_size() const;
  bool is_zero() const;

 private:
  RuleSequence() = default;
  Family family_ = Family::FiniteSupport;
  double c_ = 0.0, p_ = 0.0, r_ = 0.0, q_ = 0.0;
  std::vector<double> values_;
};

double sequence_at(const RuleSequence& s, long long n);

struct DeltaHalf {
  bool holds = false;
  std::optional<double> sup_ratio;  // sup ξₙ/ξ₂ₙ when finite and attained symbolically
};

DeltaHalf delta_half_check(const RuleSequence& s);

struct TraceValue {
  bool infinite = false;
  double value = 0.0;
  bool exact = true;  // false when the finite value comes from numerical summation
};

TraceValue sequence_trace(const RuleSequence& s);

/// shift = 0: a = diag(plus); shift = 1: a = I + (diag(plus) ⊕ −diag(minus)).
struct DiagonalOperator {
  int shift = 0;
  RuleSequence plus = RuleSequence::finite({});
  std::optional<RuleSequence> minus;

  void validate() const;
};

struct SlotDescriptor {
  std::vector<long long> finite_set;
  bool cofinite = false;

  bool contains(long long coordinate) const;
};

double essential_norm(const ScalarTailOperator& a);
double essential_norm(const DiagonalOperator& a);

/// Coordinates are head eigencoordinates (ascending eigenvalue order) followed by tail coordinates.
SlotDescriptor spectral_slots(const ScalarTailOperator& a, double lo, double hi, bool lo_open, bool hi_open,
                              const TolerancePolicy& tol = {});

DecisionReport poscomb_classify(const ScalarTailOperator& a, const TolerancePolicy& tol = {});
DecisionReport poscomb_classify(const DiagonalOperator& a);

}  // namespace projdecomp
