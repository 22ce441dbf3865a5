#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "projdecomp/decision.hpp"
#include "projdecomp/diagmodel.hpp"
#include "projdecomp/fillmore.hpp"
#include "projdecomp/ii1.hpp"

namespace projdecomp {

enum class FactorKind { TypeIFinite, TypeIInf, TypeII1, TypeIIInf, TypeIII };

enum class TraceSemantics { Normalized, Semifinite, None };

struct FactorModel {
  FactorKind kind = FactorKind::TypeIInf;
  std::size_t n = 0;  // matrix size for TypeIFinite; 0 means "taken from the operator"

  static FactorModel type_i_finite(std::size_t n) { return {FactorKind::TypeIFinite, n}; }
  static FactorModel type_i_inf() { return {FactorKind::TypeIInf, 0}; }
  static FactorModel type_ii1() { return {FactorKind::TypeII1, 0}; }
  static FactorModel type_ii_inf() { return {FactorKind::TypeIIInf, 0}; }
  static FactorModel type_iii() { return {FactorKind::TypeIII, 0}; }

  /// "I_n" (size from the operator), "I_7" etc., "I_inf", "II_1", "II_inf", "III".
  static FactorModel parse(std::string_view s);
  std::string str() const;

  /// Counting trace on type I (normalized to tr(1) = n on I_n), τ(1) = 1 on II₁, semifinite on II∞, none on III.
  TraceSemantics trace_semantics() const;
  bool type_i() const { return kind == FactorKind::TypeIFinite || kind == FactorKind::TypeIInf; }
  bool infinite() const { return kind == FactorKind::TypeIInf || kind == FactorKind::TypeIIInf || kind == FactorKind::TypeIII; }
};

using ModelOperator = std::variant<HermitianMatrix, ScalarTailOperator, DiagonalOperator, SpectralWeightList>;

std::string_view payload_kind(const ModelOperator& a);

DecisionReport strong_sum_classify(const ModelOperator& a, const FactorModel& model, const TolerancePolicy& tol = {});

/// Rejector only: NotFiniteSum with the violated clause, Inconclusive otherwise.
DecisionReport finite_sum_necessary(const ModelOperator& a, const FactorModel& model, const TolerancePolicy& tol = {});

/// diag(ξ) lies in the principal ideal generated by diag(η).
bool ideal_member(const RuleSequence& xi, const RuleSequence& eta);
bool ideal_equivalent(const RuleSequence& xi, const RuleSequence& eta);

/// I + k1 alone, or I + (k1 ⊕ −k2) in B(H).
DecisionReport classify_identity_plus(const RuleSequence& k1, const std::optional<RuleSequence>& k2 = std::nullopt);

struct Prop51Isometry {
  Matrix v;
  double residual = 0.0;           // max_j ‖q_j v a v* q_j − q_j‖_F
  double pinching_residual = 0.0;  // ‖Ψ(va₊v*) − Ψ(va₋v*) − Ψ(I − vv*)‖_F
  double range_residual = 0.0;     // ‖v*v − R_a‖_F
};

Prop51Isometry prop51_isometry(const std::vector<ProjectionMatrix>& p_list, const std::vector<ProjectionMatrix>& q_list,
                               const TolerancePolicy& tol = {});

/// p_j = w_j*w_j with w_j = q_j v a^{1/2}; throws HypothesisFailed naming the violated identity.
FiniteMatrixCert prop51_projections(const HermitianMatrix& a, const Matrix& v, const std::vector<ProjectionMatrix>& q_list,
                                    const TolerancePolicy& tol = {});

struct DecideOptions {
  TolerancePolicy tol;
  int j_max = 20;
};

/// Best available verdict on finite sums of projections for a in the model.
DecisionReport decide(const ModelOperator& a, const FactorModel& model, const DecideOptions& opt = {});

}  // namespace projdecomp
