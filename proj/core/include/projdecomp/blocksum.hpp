#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "projdecomp/diagmodel.hpp"
#include "projdecomp/fillmore.hpp"
#include "projdecomp/rational.hpp"

namespace projdecomp {

struct BlockScheduleRecord {
  int j = 0;
  std::int64_t n_prev = 0;
  std::int64_t n_j = 0;
  Rational beta_prev;
  Rational beta_j;
  std::int64_t block_trace = 0;
  std::int64_t block_rank = 0;
  /// Values on slots n_prev … n_j.
  std::vector<Rational> diagonal;
  std::optional<FiniteMatrixCert> block_cert;

  std::int64_t first_support_slot() const { return beta_prev.is_zero() ? n_prev + 1 : n_prev; }
  std::size_t slot_count() const { return static_cast<std::size_t>(n_j - n_prev + 1); }
};

struct ScheduleOptions {
  bool build_certs = true;
  std::size_t max_block_dim = 128;
  TolerancePolicy tol;
};

/// ⌊α²/(α−1)⌋ for α > 1.
std::int64_t block_bound(const Rational& alpha);

std::vector<BlockScheduleRecord> scalar_block_schedule(const Rational& beta, const Rational& alpha, int j_max,
                                                       const ScheduleOptions& opt = {});

struct BlockFootprint {
  std::int64_t first_slot = 0;
  std::int64_t last_slot = 0;
  std::size_t projection_count = 0;
};

BlockFootprint footprint(const BlockScheduleRecord& rec);

/// Stream k of a parity lists (block index, projection index) pairs in block order.
struct ParityAssembly {
  std::vector<std::vector<std::pair<std::size_t, std::size_t>>> odd;
  std::vector<std::vector<std::pair<std::size_t, std::size_t>>> even;

  std::size_t stream_count() const { return odd.size() + even.size(); }
};

/// Block index i (0-based) is the (i+1)-th block; odd blocks are i = 0, 2, 4, …
ParityAssembly interleave_assemble(const std::vector<BlockFootprint>& blocks);
ParityAssembly interleave_assemble(const std::vector<BlockScheduleRecord>& blocks);

struct GadgetTerm {
  double coefficient = 0.0;
  ProjectionMatrix q;
  std::size_t piece = 0;
  bool minus = false;
};

/// One β·p + α·f_family summand; p empty for the pure tail term.
struct ScalarTerm {
  Rational beta;
  std::optional<ProjectionMatrix> p;
  int rank = 1;
  std::size_t family = 0;
  std::string origin;
};

struct ReductionPlan {
  std::size_t head_dim = 0;
  std::size_t reserved = 0;  // tail coordinates receiving the gadget images
  std::size_t pieces = 0;    // equal pieces the head is split into
  double head_norm = 0.0;
  std::vector<GadgetTerm> gadget_terms;
  PositiveCombination residual_combination;
  std::vector<ScalarTerm> terms;

  std::size_t region_dim() const { return head_dim + reserved; }
  /// Ambient coordinate of the i-th member (0-based) of a tail family.
  std::int64_t family_coordinate(std::size_t family, std::int64_t i) const {
    return static_cast<std::int64_t>(region_dim() + family) + static_cast<std::int64_t>(terms.size()) * i;
  }
};

ReductionPlan reduce_to_scalar_terms(const ScalarTailOperator& a, const TolerancePolicy& tol = {});

struct TermCert {
  ScalarTerm term;
  Rational beta_reduced;
  Rational alpha_reduced;
  std::int64_t peeled_beta = 0;
  std::int64_t peeled_alpha = 0;
  std::int64_t bound_n = 0;
  std::vector<BlockScheduleRecord> blocks;
  ParityAssembly assembly;

  std::int64_t projection_count() const {
    return peeled_beta + peeled_alpha + static_cast<std::int64_t>(assembly.stream_count());
  }
  std::int64_t count_bound() const { return peeled_beta + peeled_alpha + 2 * bound_n; }
};

struct BlockStreamCert {
  ScalarTailOperator target;
  ReductionPlan plan;
  std::vector<TermCert> terms;
  int j_max = 32;

  std::int64_t total_count() const;
  std::int64_t count_bound() const;
};

struct BlockSumOptions {
  ScheduleOptions schedule;
};

BlockStreamCert finite_sum_decompose(const ScalarTailOperator& a, int j_max = 32, const BlockSumOptions& opt = {});

struct TruncationReport {
  bool exact_ok = true;
  std::vector<std::string> failures;
  double residual = 0.0;
  double max_idempotency = 0.0;
  std::size_t dim = 0;
  std::size_t covered = 0;
  std::size_t projections = 0;
  bool numeric_checked = false;
};

/// Throws VerificationFailed naming the first violated identity.
TruncationReport verify_truncation(const BlockStreamCert& cert, const ScalarTailOperator& a, int j,
                                   const TolerancePolicy& tol = {});

/// Collect failures without throwing.
TruncationReport audit_block_stream(const BlockStreamCert& cert, int j, const TolerancePolicy& tol = {});

struct MaterializedTruncation {
  std::size_t dim = 0;
  std::vector<std::size_t> covered;
  std::vector<Matrix> projections;
  std::vector<int> blocks_used;  // per term
  double residual = 0.0;
  double max_idempotency = 0.0;
};

/// Restrict every assembled projection to the first dim coordinates, keeping the blocks that fit.
MaterializedTruncation materialize_truncation(const BlockStreamCert& cert, std::size_t dim,
                                              const TolerancePolicy& tol = {});

}  // namespace projdecomp
