#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "projdecomp/matcore.hpp"

namespace projdecomp {

struct FillmoreReport {
  double trace = 0.0;
  int rank = 0;
  std::optional<long long> m;
  bool verdict = false;
};

struct FiniteMatrixCert {
  HermitianMatrix target;
  std::vector<ProjectionMatrix> projections;
  double residual = 0.0;
};

/// proj_tol·(1+‖target‖_F), widened by the distance of the trace from its integer part.
double residual_bound(const FiniteMatrixCert& cert, const TolerancePolicy& tol = {});

/// Recomputes the residual and checks every typed invariant; returns an empty string when green.
std::string audit_cert(const FiniteMatrixCert& cert, const TolerancePolicy& tol = {});

FillmoreReport fillmore_check(const HermitianMatrix& a, const TolerancePolicy& tol = {});

/// m unit vectors in ℝⁿ (n = lambdas.size()) with Σ vₖvₖᵀ = diag(lambdas).
std::vector<std::vector<double>> schur_horn_frame(const std::vector<double>& lambdas, long long m,
                                                  const TolerancePolicy& tol = {});

FiniteMatrixCert fillmore_decompose(const HermitianMatrix& a, const TolerancePolicy& tol = {});

struct GadgetResult {
  ProjectionMatrix q_minus;
  ProjectionMatrix q_plus;
  HermitianMatrix remainder_shift;
  double norm_b = 0.0;
};

/// b positive on e = v*v with vv* ⟂ e; one ambient space throughout.
GadgetResult two_projection_gadget(const HermitianMatrix& b, const Matrix& v, const TolerancePolicy& tol = {});

struct SignedCombination {
  std::vector<double> coefficients;
  std::vector<ProjectionMatrix> projections;
};

struct PositiveCombination {
  HermitianMatrix target;
  std::vector<double> coefficients;
  std::vector<ProjectionMatrix> projections;
  double residual = 0.0;
  long long count_bound = 0;
};

struct BackendConstants {
  int N0 = 1;
  double V0 = 1.0;
};

using CombinationFn = std::function<SignedCombination(const HermitianMatrix&, const TolerancePolicy&)>;

struct CombinationBackend {
  BackendConstants constants;
  CombinationFn decompose;
};

/// b = Σ αᵢqᵢ over the distinct nonzero eigenvalues of b.
SignedCombination spectral_backend(const HermitianMatrix& b, const TolerancePolicy& tol = {});

/// spectral_backend with constants valid on matrices of dimension dim.
CombinationBackend default_backend(std::size_t dim);

/// a ≥ ν·R_a; ν defaults to the smallest nonzero eigenvalue, the backend to default_backend(rank a).
PositiveCombination positive_combination_invertible(const HermitianMatrix& a, std::optional<double> nu = std::nullopt,
                                                    const std::optional<CombinationBackend>& backend = std::nullopt,
                                                    const TolerancePolicy& tol = {});

struct RankAudit {
  bool ok = true;
  double delta = 0.0;
  int rank_below_delta = 0;  // rank χ_a(0,δ)
  int rank_range = 0;        // rank R_a
  int rank_above_delta = 0;  // rank χ_a[δ,∞)
  std::vector<int> ranks;
  std::string failure;
};

/// Rank comparisons forced on any positive combination a = Σλⱼpⱼ with δ = min λⱼ.
RankAudit rank_audit(const HermitianMatrix& a, const std::vector<double>& coefficients,
                     const std::vector<ProjectionMatrix>& projections, const TolerancePolicy& tol = {});

}  // namespace projdecomp
