#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "projdecomp/blocksum.hpp"
#include "projdecomp/fillmore.hpp"
#include "projdecomp/rational.hpp"

namespace projdecomp {

/// Half-open subinterval [lo, hi) of [0,1); the trace of the projection it models is hi − lo.
struct Interval {
  Rational lo;
  Rational hi;

  Rational length() const { return hi - lo; }
  bool empty() const { return !(lo < hi); }
  bool disjoint(const Interval& o) const { return !(lo < o.hi && o.lo < hi); }
  bool contains(const Interval& o) const { return o.empty() || (lo <= o.lo && o.hi <= hi); }
  friend bool operator==(const Interval&, const Interval&) = default;
};

struct SpectralAtom {
  Rational gamma;
  Rational weight;
};

/// Diagonalizable Σγₙeₙ with τ(eₙ) = weight.
struct SpectralWeightList {
  std::vector<SpectralAtom> atoms;

  Rational total_weight() const;
  Rational trace() const;
  Rational norm() const;
  void validate() const;
  /// Equal coefficients merged, zero weights dropped, ascending γ.
  SpectralWeightList normalized() const;
};

/// a_j = (1−λ)f + (1+μ)e with e, f disjoint intervals; f empty when τ(f) = 0.
struct II1State {
  Rational lambda;
  Rational mu;
  Interval e;
  Interval f;

  Rational tau_e() const { return e.length(); }
  Rational tau_f() const { return f.length(); }
  Rational trace() const;
  bool f_zero() const { return f.empty(); }
  friend bool operator==(const II1State&, const II1State&) = default;
};

enum class Branch {
  TailNonzero,
  TailZero,
  IntegerTerminal,   // f = 0 with integer μ: (1+μ)e
  RationalTerminal,  // f = 0 with μ = p/q: q equal slots of e
  PairShortcut,      // equality case with rational τ(f)/τ(e)
  PeelProjection,    // λ = 0: f split off as one projection
};

std::string_view to_string(Branch b);
Branch branch_from_string(std::string_view s);

/// b_j realized on equal-width slots (or width-compatible slots for TailZero).
struct II1Block {
  std::vector<Interval> slots;
  std::vector<Rational> diagonal;
  FiniteMatrixCert cert;

  Rational trace() const;  // τ(b_j)
  std::int64_t projection_count() const { return static_cast<std::int64_t>(cert.projections.size()); }
};

struct II1StepRecord {
  int j = 0;
  Branch branch = Branch::TailNonzero;
  II1State state;
  std::optional<Rational> delta;
  std::optional<Rational> gamma;
  std::int64_t k = 0;
  std::int64_t n = 0;
  std::int64_t m = 0;
  std::optional<Rational> alpha;
  std::int64_t block_trace = 0;
  std::int64_t block_rank = 0;
  II1Block block;
  std::optional<II1State> next;  // empty for terminal steps
};

struct Lemma61Options {
  bool shortcuts = true;
  std::size_t max_block_dim = 256;
  Rational offset = Rational(0);  // left end of the layout inside [0,1)
  TolerancePolicy tol;
};

/// One run of the recursion on (1−λ)f + (1+μ)e.
struct Lemma61Cert {
  Rational lambda, mu, tau_f, tau_e;
  Rational offset;
  std::optional<II1Block> peeled;
  std::vector<II1StepRecord> steps;
  std::optional<int> j_o;
  bool terminated = false;
  std::optional<II1State> remainder;
  ParityAssembly assembly;  // indices into steps, j_o skipped
  Rational tail_decay;

  std::int64_t block_bound() const;  // max_j N_j
  std::int64_t projection_count() const;
  Rational input_trace() const;
  Rational remainder_trace() const;
};

struct MatchedPiece {
  std::size_t i = 0;  // index into ξ
  std::size_t j = 0;  // index into η
  Rational value;
};

struct Matching {
  std::vector<MatchedPiece> pieces;
};

Matching match_partitions(const std::vector<Rational>& xi, const std::vector<Rational>& eta);

struct RebalancedPair {
  std::size_t e_atom = 0;
  std::optional<std::size_t> f_atom;
  Rational mu;
  Rational lambda;
  Rational piece;  // μ'τ(e') = (λ'+ρ/σ)τ(f')
  Rational tau_e;
  Rational tau_f;
};

struct Theorem65Plan {
  Rational gap;    // Σμτ(e) − Σλτ(f)
  Rational rho;
  Rational sigma;
  Rational ratio;  // ρ/σ, zero when there is no defect
  std::int64_t h = 0;
  Rational norm;
  std::vector<std::size_t> excess_atoms;  // indices into the normalized list
  std::vector<std::size_t> defect_atoms;
  std::vector<std::size_t> unit_atoms;
  std::vector<Rational> xi;
  std::vector<Rational> eta;
  Matching matching;
  std::vector<RebalancedPair> pairs;
  bool equality_shortcut = false;
};

struct II1Cert {
  std::string kind = "lemma61";  // or "theorem65"
  std::optional<SpectralWeightList> atoms;
  std::optional<Theorem65Plan> plan;
  std::vector<Lemma61Cert> runs;
  std::vector<Interval> unit_projections;

  std::int64_t projection_count() const;
  std::int64_t count_bound() const;  // Σ 3N over runs plus unit atoms
};

std::pair<II1StepRecord, std::optional<II1State>> lemma61_step(const II1State& state, int j,
                                                               const Lemma61Options& opt = {});

Lemma61Cert lemma61_run(const Rational& lambda, const Rational& mu, const Rational& tau_f, const Rational& tau_e,
                        int j_max, const Lemma61Options& opt = {});

II1Cert lemma61_decompose(const Rational& lambda, const Rational& mu, const Rational& tau_f, const Rational& tau_e,
                          int j_max = 20, const Lemma61Options& opt = {});

II1Cert theorem65_decompose(const SpectralWeightList& a, int j_max = 20, const Lemma61Options& opt = {});

struct InvariantFailure {
  std::size_t run = 0;
  int j = 0;
  std::string eq;
  std::string detail;
};

struct InvariantReport {
  std::vector<InvariantFailure> failures;
  std::size_t steps_checked = 0;
  bool ok() const { return failures.empty(); }
};

InvariantReport verify_invariants(const Lemma61Cert& cert, const TolerancePolicy& tol = {});
InvariantReport verify_invariants(const II1Cert& cert, const TolerancePolicy& tol = {});

struct MaterializedBlock {
  std::size_t run = 0;
  int j = 0;
  std::size_t slot_rank = 0;  // ambient coordinates per slot
  FiniteMatrixCert cert;      // block-level certificate
  double residual = 0.0;      // lifted residual in M_d
};

struct MaterializeReport {
  std::int64_t denominator = 0;
  std::vector<MaterializedBlock> blocks;
  std::vector<int> steps_used;  // per run
  double max_block_residual = 0.0;
  bool streams_orthogonal = true;
  bool dense_checked = false;
  double dense_residual = 0.0;
  double max_idempotency = 0.0;
  std::size_t stream_count = 0;
  Rational remainder_trace;
  std::vector<std::string> failures;
};

/// Realize every step whose interval endpoints lie on the grid (1/d)ℤ inside M_d.
MaterializeReport materialize(const II1Cert& cert, std::int64_t denominator, const TolerancePolicy& tol = {});

}  // namespace projdecomp
