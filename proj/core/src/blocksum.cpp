#include "projdecomp/blocksum.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "projdecomp/error.hpp"

namespace projdecomp {

namespace {

constexpr std::size_t kNumericDimCap = 320;

std::string tag(std::size_t term, int block) {
  return "term " + std::to_string(term) + ", block " + std::to_string(block);
}

HermitianMatrix diagonal_block(const std::vector<Rational>& diag) {
  std::vector<double> d(diag.size());
  for (std::size_t i = 0; i < diag.size(); ++i) d[i] = diag[i].to_double();
  return HermitianMatrix::diagonal(d);
}

// Orthonormal basis of the range of a projection, as columns.
Matrix range_basis(const ProjectionMatrix& p, const TolerancePolicy& tol) {
  const auto sd = eigh(p.underlying(), tol);
  std::vector<std::size_t> cols;
  for (std::size_t c = 0; c < sd.eigenvalues.size(); ++c)
    if (sd.eigenvalues[c] > 0.5) cols.push_back(c);
  Matrix out(p.dim(), cols.size());
  for (std::size_t k = 0; k < cols.size(); ++k)
    for (std::size_t i = 0; i < p.dim(); ++i) out(i, k) = sd.eigenvectors(i, cols[k]);
  return out;
}

// Embedding of slot columns s·r + ℓ into the ambient truncation.
struct SlotLayout {
  const ReductionPlan* plan = nullptr;
  std::size_t term = 0;
  int rank = 1;
  Matrix slot0;  // dim × rank, zero for the pure tail term
  std::size_t dim = 0;

  std::int64_t coordinate(std::int64_t slot, int l) const {
    return plan->family_coordinate(term, (slot - 1) * rank + l);
  }
  bool fits(std::int64_t last_slot) const { return last_slot == 0 || coordinate(last_slot, rank - 1) < static_cast<std::int64_t>(dim); }

  Matrix block_embedding(std::int64_t first_slot, std::size_t slots) const {
    Matrix w(dim, slots * static_cast<std::size_t>(rank));
    for (std::size_t m = 0; m < slots; ++m) {
      const std::int64_t s = first_slot + static_cast<std::int64_t>(m);
      for (int l = 0; l < rank; ++l) {
        const std::size_t col = m * static_cast<std::size_t>(rank) + static_cast<std::size_t>(l);
        if (s == 0) {
          if (slot0.cols() > static_cast<std::size_t>(l))
            for (std::size_t i = 0; i < dim; ++i) w(i, col) = slot0(i, static_cast<std::size_t>(l));
        } else {
          w(static_cast<std::size_t>(coordinate(s, l)), col) = 1.0;
        }
      }
    }
    return w;
  }

  // W (P ⊗ I_r) W*.
  Matrix lift(const Matrix& p, std::int64_t first_slot) const {
    const std::size_t slots = p.rows();
    const std::size_t r = static_cast<std::size_t>(rank);
    Matrix k(slots * r, slots * r);
    for (std::size_t a = 0; a < slots; ++a)
      for (std::size_t b = 0; b < slots; ++b)
        for (std::size_t l = 0; l < r; ++l) k(a * r + l, b * r + l) = p(a, b);
    const Matrix w = block_embedding(first_slot, slots);
    return (w * k) * w.adjoint();
  }
};

}  // namespace

std::int64_t block_bound(const Rational& alpha) {
  if (!(alpha > Rational(1))) throw Error(ErrorCode::BadRange, "block bound requires α > 1");
  return (alpha * alpha / (alpha - Rational(1))).floor().to_int64();
}

std::vector<BlockScheduleRecord> scalar_block_schedule(const Rational& beta, const Rational& alpha, int j_max,
                                                       const ScheduleOptions& opt) {
  if (beta.sign() < 0 || !(beta < Rational(1))) throw Error(ErrorCode::BadRange, "β must lie in [0,1)");
  if (!(alpha > Rational(1)) || alpha > Rational(2)) throw Error(ErrorCode::BadRange, "α must lie in (1,2]");
  if (j_max < 0) throw Error(ErrorCode::BadRange, "J_max must be nonnegative");
  const std::int64_t bound = block_bound(alpha);
  const Rational one(1);
  const Rational step = alpha - one;
  std::vector<BlockScheduleRecord> out;
  out.reserve(static_cast<std::size_t>(j_max));
  Rational b_prev = beta;
  std::int64_t n_prev = 0;
  for (int j = 1; j <= j_max; ++j) {
    BlockScheduleRecord rec;
    rec.j = j;
    rec.n_prev = n_prev;
    rec.beta_prev = b_prev;
    const std::int64_t gap = ((one - b_prev) / step).ceil().to_int64();
    rec.n_j = n_prev + gap;
    const Rational total = b_prev + Rational(gap) * alpha;
    rec.beta_j = total.frac();
    rec.block_trace = total.floor().to_int64();
    rec.block_rank = gap + (b_prev.is_zero() ? 0 : 1);
    rec.diagonal.assign(static_cast<std::size_t>(gap + 1), alpha);
    rec.diagonal.front() = b_prev;
    rec.diagonal.back() = alpha - rec.beta_j;
    if (gap == 0) throw Error(ErrorCode::InternalBoundFailure, "empty block");
    if (rec.block_rank > rec.block_trace || rec.block_trace > bound) {
      throw Error(ErrorCode::InternalBoundFailure, "block " + std::to_string(j) + " violates rank ≤ trace ≤ N");
    }
    if (opt.build_certs) {
      if (rec.slot_count() > opt.max_block_dim) {
        throw Error(ErrorCode::BlockTooLarge, "block of " + std::to_string(rec.slot_count()) + " slots exceeds the cap");
      }
      rec.block_cert = fillmore_decompose(diagonal_block(rec.diagonal), opt.tol);
    }
    b_prev = rec.beta_j;
    n_prev = rec.n_j;
    out.push_back(std::move(rec));
  }
  return out;
}

BlockFootprint footprint(const BlockScheduleRecord& rec) {
  return {rec.first_support_slot(), rec.n_j, static_cast<std::size_t>(rec.block_trace)};
}

ParityAssembly interleave_assemble(const std::vector<BlockFootprint>& blocks) {
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    if (blocks[i].first_slot > blocks[i].last_slot) throw Error(ErrorCode::AdjacencyViolated, "block with empty support");
    for (std::size_t k = i + 2; k < blocks.size(); ++k) {
      const bool disjoint = blocks[i].last_slot < blocks[k].first_slot || blocks[k].last_slot < blocks[i].first_slot;
      if (!disjoint) {
        throw Error(ErrorCode::AdjacencyViolated,
                    "blocks " + std::to_string(i + 1) + " and " + std::to_string(k + 1) + " overlap");
      }
    }
  }
  ParityAssembly out;
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    auto& streams = (i % 2 == 0) ? out.odd : out.even;
    if (streams.size() < blocks[i].projection_count) streams.resize(blocks[i].projection_count);
    for (std::size_t k = 0; k < blocks[i].projection_count; ++k) streams[k].emplace_back(i, k);
  }
  return out;
}

ParityAssembly interleave_assemble(const std::vector<BlockScheduleRecord>& blocks) {
  std::vector<BlockFootprint> fp;
  fp.reserve(blocks.size());
  for (const auto& b : blocks) fp.push_back(footprint(b));
  return interleave_assemble(fp);
}

ReductionPlan reduce_to_scalar_terms(const ScalarTailOperator& a, const TolerancePolicy& tol) {
  if (!(a.alpha() > Rational(1))) {
    throw Error(ErrorCode::EssentialNormTooSmall, "reduction requires essential norm > 1");
  }
  ReductionPlan plan;
  plan.head_dim = a.head_dim();
  const double alpha = a.alpha_value();

  std::vector<double> lambdas;
  Matrix basis;
  if (plan.head_dim > 0) {
    const auto sd = eigh(a.head(), tol);
    std::vector<std::size_t> pos;
    for (std::size_t c = 0; c < sd.eigenvalues.size(); ++c)
      if (sd.eigenvalues[c] > tol.rank_tol) pos.push_back(c);
    basis = Matrix(plan.head_dim, pos.size());
    for (std::size_t k = 0; k < pos.size(); ++k) {
      lambdas.push_back(sd.eigenvalues[pos[k]]);
      for (std::size_t i = 0; i < plan.head_dim; ++i) basis(i, k) = sd.eigenvectors(i, pos[k]);
    }
  }

  const std::size_t r = lambdas.size();
  if (r > 0) {
    plan.head_norm = *std::max_element(lambdas.begin(), lambdas.end());
    plan.pieces = plan.head_norm < alpha ? 1 : static_cast<std::size_t>(std::floor(plan.head_norm / alpha)) + 1;
    plan.reserved = plan.pieces * r;
    const std::size_t dim = plan.region_dim();
    const double k = static_cast<double>(plan.pieces);

    Matrix piece(dim, dim);
    for (std::size_t i = 0; i < plan.head_dim; ++i)
      for (std::size_t j = 0; j < plan.head_dim; ++j) {
        Complex s = 0.0;
        for (std::size_t l = 0; l < r; ++l) s += lambdas[l] * basis(i, l) * std::conj(basis(j, l));
        piece(i, j) = s / k;
      }
    const auto b_piece = make_hermitian_unchecked(piece);

    std::vector<double> rem(dim, 0.0);
    for (std::size_t p = 0; p < plan.pieces; ++p) {
      Matrix v(dim, dim);
      for (std::size_t l = 0; l < r; ++l) {
        const std::size_t target = plan.head_dim + p * r + l;
        for (std::size_t h = 0; h < plan.head_dim; ++h) v(target, h) = std::conj(basis(h, l));
        rem[target] = alpha - plan.head_norm / k + lambdas[l] / k;
      }
      auto g = two_projection_gadget(b_piece, v, tol);
      const double c = g.norm_b / 2.0;
      plan.gadget_terms.push_back({c, std::move(g.q_minus), p, true});
      plan.gadget_terms.push_back({c, std::move(g.q_plus), p, false});
    }
    const auto remainder = HermitianMatrix::diagonal(rem);
    const auto sc = spectral_backend(remainder, tol);
    plan.residual_combination.target = remainder;
    plan.residual_combination.coefficients = sc.coefficients;
    plan.residual_combination.projections = sc.projections;
    plan.residual_combination.count_bound = static_cast<long long>(sc.coefficients.size());
    Matrix sum(dim, dim);
    for (std::size_t i = 0; i < sc.coefficients.size(); ++i) sum += sc.projections[i].matrix() * Complex(sc.coefficients[i]);
    plan.residual_combination.residual = frobenius_distance(sum, remainder.matrix());
  }

  for (const auto& g : plan.gadget_terms) {
    plan.terms.push_back({Rational::from_double(g.coefficient), g.q, g.q.nominal_rank(), 0,
                          g.minus ? "gadget_minus" : "gadget_plus"});
  }
  const auto& rc = plan.residual_combination;
  for (std::size_t i = 0; i < rc.coefficients.size(); ++i) {
    plan.terms.push_back({Rational::from_double(rc.coefficients[i]), rc.projections[i], rc.projections[i].nominal_rank(),
                          0, "residual"});
  }
  plan.terms.push_back({Rational(0), std::nullopt, 1, 0, "tail"});
  for (std::size_t f = 0; f < plan.terms.size(); ++f) plan.terms[f].family = f;
  return plan;
}

std::int64_t BlockStreamCert::total_count() const {
  std::int64_t s = 0;
  for (const auto& t : terms) s += t.projection_count();
  return s;
}

std::int64_t BlockStreamCert::count_bound() const {
  std::int64_t s = 0;
  for (const auto& t : terms) s += t.count_bound();
  return s;
}

BlockStreamCert finite_sum_decompose(const ScalarTailOperator& a, int j_max, const BlockSumOptions& opt) {
  if (!(a.alpha() > Rational(1))) {
    nlohmann::json report = {{"verdict", "Inconclusive"},
                             {"condition", "Cor4.4"},
                             {"witness", {{"essential_norm", a.alpha().str()}, {"reason", "essential norm ≤ 1"}}}};
    throw Error(ErrorCode::EssentialNormTooSmall, "essential norm ≤ 1: the sufficient condition does not apply",
                report);
  }
  BlockStreamCert cert;
  cert.target = a;
  cert.j_max = j_max;
  cert.plan = reduce_to_scalar_terms(a, opt.schedule.tol);
  const Rational alpha = a.alpha();
  const Rational peel_alpha = (alpha - Rational(2)).ceil();
  const Rational alpha_r = alpha - peel_alpha;
  for (const auto& term : cert.plan.terms) {
    TermCert tc;
    tc.term = term;
    tc.peeled_beta = term.beta.floor().to_int64();
    tc.beta_reduced = term.beta.frac();
    tc.peeled_alpha = peel_alpha.to_int64();
    tc.alpha_reduced = alpha_r;
    tc.bound_n = block_bound(alpha_r);
    tc.blocks = scalar_block_schedule(tc.beta_reduced, alpha_r, j_max, opt.schedule);
    tc.assembly = interleave_assemble(tc.blocks);
    cert.terms.push_back(std::move(tc));
  }
  return cert;
}

MaterializedTruncation materialize_truncation(const BlockStreamCert& cert, std::size_t dim, const TolerancePolicy& tol) {
  const auto& plan = cert.plan;
  const std::size_t region = plan.region_dim();
  if (dim < region) throw Error(ErrorCode::IndexOutOfRange, "truncation smaller than the finite region");
  MaterializedTruncation out;
  out.dim = dim;
  std::vector<bool> covered(dim, false);
  for (std::size_t i = 0; i < region; ++i) covered[i] = true;

  auto embed_region = [&](const Matrix& m) {
    Matrix e(dim, dim);
    for (std::size_t i = 0; i < m.rows(); ++i)
      for (std::size_t j = 0; j < m.cols(); ++j) e(i, j) = m(i, j);
    return e;
  };

  for (std::size_t t = 0; t < cert.terms.size(); ++t) {
    const auto& tc = cert.terms[t];
    SlotLayout lay;
    lay.plan = &plan;
    lay.term = t;
    lay.rank = tc.term.rank;
    lay.dim = dim;
    lay.slot0 = Matrix(dim, static_cast<std::size_t>(tc.term.rank));
    if (tc.term.p) {
      const Matrix rb = range_basis(*tc.term.p, tol);
      for (std::size_t i = 0; i < rb.rows(); ++i)
        for (std::size_t l = 0; l < rb.cols() && l < lay.slot0.cols(); ++l) lay.slot0(i, l) = rb(i, l);
    }
    int used = 0;
    while (used < static_cast<int>(tc.blocks.size()) && lay.fits(tc.blocks[static_cast<std::size_t>(used)].n_j)) ++used;
    out.blocks_used.push_back(used);
    const std::int64_t last = used == 0 ? 0 : tc.blocks[static_cast<std::size_t>(used - 1)].n_j;
    const Rational beta_last = used == 0 ? tc.beta_reduced : tc.blocks[static_cast<std::size_t>(used - 1)].beta_j;
    // The slot n_J carries α − β_J until the next block lands.
    const std::int64_t full = beta_last.is_zero() ? last : last - 1;
    for (std::int64_t s = 1; s <= full; ++s)
      for (int l = 0; l < lay.rank; ++l) covered[static_cast<std::size_t>(lay.coordinate(s, l))] = true;

    if (tc.term.p) {
      const Matrix p = embed_region(tc.term.p->matrix());
      for (std::int64_t c = 0; c < tc.peeled_beta; ++c) out.projections.push_back(p);
    }
    if (tc.peeled_alpha > 0) {
      Matrix f(dim, dim);
      for (std::int64_t s = 1; s <= last; ++s)
        for (int l = 0; l < lay.rank; ++l) {
          const auto c = static_cast<std::size_t>(lay.coordinate(s, l));
          f(c, c) = 1.0;
        }
      for (std::int64_t c = 0; c < tc.peeled_alpha; ++c) out.projections.push_back(f);
    }
    for (const auto* streams : {&tc.assembly.odd, &tc.assembly.even}) {
      for (const auto& stream : *streams) {
        Matrix sp(dim, dim);
        bool any = false;
        for (const auto& [bi, pi] : stream) {
          if (static_cast<int>(bi) >= used) continue;
          const auto& blk = tc.blocks[bi];
          if (!blk.block_cert) throw Error(ErrorCode::VerificationFailed, "block certificate missing for " + tag(t, blk.j));
          sp += lay.lift(blk.block_cert->projections.at(pi).matrix(), blk.n_prev);
          any = true;
        }
        if (any) out.projections.push_back(std::move(sp));
      }
    }
  }

  for (std::size_t i = 0; i < dim; ++i)
    if (covered[i]) out.covered.push_back(i);

  Matrix sum(dim, dim);
  for (const auto& p : out.projections) {
    sum += p;
    out.max_idempotency = std::max(out.max_idempotency, frobenius_distance(p * p, p));
  }
  const Matrix expected = cert.target.truncate(dim).matrix();
  double acc = 0.0;
  for (std::size_t i : out.covered)
    for (std::size_t j : out.covered) acc += std::norm(sum(i, j) - expected(i, j));
  out.residual = std::sqrt(acc);
  return out;
}

TruncationReport audit_block_stream(const BlockStreamCert& cert, int j, const TolerancePolicy& tol) {
  TruncationReport rep;
  auto fail = [&](std::string msg) {
    rep.exact_ok = false;
    rep.failures.push_back(std::move(msg));
  };
  if (j < 0) throw Error(ErrorCode::IndexOutOfRange, "negative truncation depth");
  const auto& plan = cert.plan;
  const Rational alpha = cert.target.alpha();
  if (!(alpha > Rational(1))) {
    fail("essential norm ≤ 1");
    return rep;
  }
  const Rational peel_alpha = (alpha - Rational(2)).ceil();
  const Rational alpha_r = alpha - peel_alpha;

  // Plan: Σ βₜpₜ reproduces b ⊕ α·I on the finite region.
  const std::size_t region = plan.region_dim();
  if (plan.head_dim != cert.target.head_dim()) fail("plan head dimension differs from the target");
  if (plan.terms.empty() || plan.terms.back().p) fail("plan lacks the pure tail term");
  if (rep.exact_ok && region > 0) {
    Matrix sum(region, region);
    for (const auto& t : plan.terms) {
      if (!t.p) continue;
      if (t.p->dim() != region) {
        fail("term projection has wrong dimension");
        break;
      }
      if (t.p->idempotency_residual() > tol.proj_tol) fail("term projection is not idempotent");
      sum += t.p->matrix() * Complex(t.beta.to_double());
    }
    Matrix expected(region, region);
    for (std::size_t i = 0; i < plan.head_dim; ++i)
      for (std::size_t k = 0; k < plan.head_dim; ++k) expected(i, k) = cert.target.head()(i, k);
    for (std::size_t i = plan.head_dim; i < region; ++i) expected(i, i) = alpha.to_double();
    const double res = frobenius_distance(sum, expected);
    if (res > 1e-9 * (1.0 + expected.frobenius_norm())) fail("reduction plan does not reproduce b + αf' (residual " + std::to_string(res) + ")");
  }

  for (std::size_t t = 0; t < cert.terms.size(); ++t) {
    const auto& tc = cert.terms[t];
    if (tc.term.beta.sign() < 0) fail("term " + std::to_string(t) + ": negative coefficient");
    if (tc.peeled_beta != tc.term.beta.floor().to_int64() || tc.beta_reduced != tc.term.beta.frac()) {
      fail("term " + std::to_string(t) + ": β peeling inconsistent");
    }
    if (tc.alpha_reduced != alpha_r || tc.peeled_alpha != peel_alpha.to_int64()) {
      fail("term " + std::to_string(t) + ": α peeling inconsistent");
    }
    if (!(tc.alpha_reduced > Rational(1)) || tc.alpha_reduced > Rational(2) || tc.beta_reduced.sign() < 0 ||
        !(tc.beta_reduced < Rational(1))) {
      fail("term " + std::to_string(t) + ": reduced parameters out of range");
      continue;
    }
    const std::int64_t bound = block_bound(tc.alpha_reduced);
    if (tc.bound_n != bound) fail("term " + std::to_string(t) + ": stored N differs from ⌊α²/(α−1)⌋");
    if (j > static_cast<int>(tc.blocks.size())) {
      fail("term " + std::to_string(t) + ": fewer stored blocks than the requested depth");
      continue;
    }
    ScheduleOptions replay_opt;
    replay_opt.build_certs = false;
    const auto ref = scalar_block_schedule(tc.beta_reduced, tc.alpha_reduced, static_cast<int>(tc.blocks.size()), replay_opt);

    // Running partial sum Σ_{i≤J} a_i over slots 0…n_J.
    std::vector<Rational> partial;
    for (std::size_t i = 0; i < tc.blocks.size(); ++i) {
      const auto& b = tc.blocks[i];
      const auto& r = ref[i];
      const std::string where = tag(t, b.j);
      if (b.j != r.j || b.n_prev != r.n_prev || b.n_j != r.n_j) fail(where + ": slot boundaries differ from the recursion");
      if (b.beta_prev != r.beta_prev || b.beta_j != r.beta_j) fail(where + ": β_j differs from the recursion");
      if (b.block_trace != r.block_trace || b.block_rank != r.block_rank) fail(where + ": trace or rank differs");
      if (b.diagonal != r.diagonal) fail(where + ": block diagonal differs from the recursion");
      if (b.diagonal.size() != b.slot_count()) {
        fail(where + ": diagonal length mismatch");
        continue;
      }
      Rational tr(0);
      std::int64_t nonzero = 0;
      for (const auto& x : b.diagonal) {
        tr += x;
        if (!x.is_zero()) ++nonzero;
      }
      if (tr != Rational(b.block_trace)) fail(where + ": block trace is not the sum of its diagonal");
      if (nonzero != b.block_rank) fail(where + ": block rank is not the number of nonzero slots");
      if (b.block_rank > b.block_trace || b.block_trace > bound) fail(where + ": rank ≤ trace ≤ N fails");
      if (b.beta_j.sign() < 0 || !(b.beta_j < Rational(1))) fail(where + ": β_j outside [0,1)");
      const std::int64_t gap = b.n_j - b.n_prev;
      const Rational mid = b.beta_prev + Rational(gap) * tc.alpha_reduced;
      const Rational top = (tc.alpha_reduced * tc.alpha_reduced - b.beta_prev) / (tc.alpha_reduced - Rational(1));
      if (!(Rational(gap + 1) <= mid && mid < top &&
            top <= tc.alpha_reduced * tc.alpha_reduced / (tc.alpha_reduced - Rational(1)))) {
        fail(where + ": chain inequality fails");
      }
      if (i + 1 < tc.blocks.size() && tc.blocks[i + 1].beta_prev != b.beta_j) fail(where + ": next block does not start at β_j");
      if (static_cast<int>(i) < j) {
        if (partial.size() < static_cast<std::size_t>(b.n_j + 1)) partial.resize(static_cast<std::size_t>(b.n_j + 1), Rational(0));
        for (std::size_t s = 0; s < b.diagonal.size(); ++s) partial[static_cast<std::size_t>(b.n_prev) + s] += b.diagonal[s];
        // Expected β₀e₀ + αΣ_{0<k<n_J} e_k + (α−β_J)e_{n_J}.
        std::vector<Rational> expected(partial.size(), tc.alpha_reduced);
        expected.front() = tc.beta_reduced;
        expected.back() = tc.alpha_reduced - b.beta_j;
        if (partial != expected) fail(where + ": partial-sum identity fails");
      }
      if (b.block_cert) {
        const auto why = audit_cert(*b.block_cert, tol);
        if (!why.empty()) fail(where + ": " + why);
        if (static_cast<std::int64_t>(b.block_cert->projections.size()) != b.block_trace) {
          fail(where + ": certificate count differs from the block trace");
        }
        if (b.block_cert->target.dim() != b.slot_count()) fail(where + ": certificate dimension mismatch");
      }
    }
    try {
      const auto expected = interleave_assemble(tc.blocks);
      if (expected.odd != tc.assembly.odd || expected.even != tc.assembly.even) {
        fail("term " + std::to_string(t) + ": parity assembly differs from the block footprints");
      }
      if (static_cast<std::int64_t>(expected.odd.size()) > bound || static_cast<std::int64_t>(expected.even.size()) > bound) {
        fail("term " + std::to_string(t) + ": more than N streams in one parity");
      }
    } catch (const Error& e) {
      fail("term " + std::to_string(t) + ": " + e.what());
    }
  }

  if (!rep.exact_ok) return rep;

  // Numeric replay on a truncation deep enough for J blocks of every term.
  std::size_t need = region;
  for (std::size_t t = 0; t < cert.terms.size(); ++t) {
    const auto& tc = cert.terms[t];
    if (j == 0 || tc.blocks.empty()) continue;
    const std::int64_t last = tc.blocks[static_cast<std::size_t>(j - 1)].n_j;
    const auto coord = plan.family_coordinate(t, last * tc.term.rank - 1);
    need = std::max(need, static_cast<std::size_t>(coord + 1));
  }
  const bool all_certs = std::all_of(cert.terms.begin(), cert.terms.end(), [&](const TermCert& tc) {
    return std::all_of(tc.blocks.begin(), tc.blocks.begin() + std::min<std::size_t>(tc.blocks.size(), static_cast<std::size_t>(j)),
                       [](const BlockScheduleRecord& b) { return b.block_cert.has_value(); });
  });
  if (all_certs) {
    const std::size_t dim = std::min(need, std::max(kNumericDimCap, region));
    const auto mat = materialize_truncation(cert, dim, tol);
    rep.numeric_checked = true;
    rep.dim = dim;
    rep.covered = mat.covered.size();
    rep.projections = mat.projections.size();
    rep.residual = mat.residual;
    rep.max_idempotency = mat.max_idempotency;
    const double scale = 1.0 + cert.target.truncate(dim).frobenius_norm();
    if (mat.residual > 1e-8 * scale) fail("materialized truncation residual " + std::to_string(mat.residual) + " too large");
    if (mat.max_idempotency > 1e-8) fail("materialized stream is not idempotent");
  }
  return rep;
}

TruncationReport verify_truncation(const BlockStreamCert& cert, const ScalarTailOperator& a, int j,
                                   const TolerancePolicy& tol) {
  TruncationReport rep;
  const bool same_head = a.head_dim() == cert.target.head_dim() &&
                         (a.head_dim() == 0 || frobenius_distance(a.head().matrix(), cert.target.head().matrix()) <=
                                                   tol.sym_tol * (1.0 + a.head().frobenius_norm()));
  if (!same_head || a.alpha() != cert.target.alpha()) {
    rep.exact_ok = false;
    rep.failures.push_back("certificate target differs from the operator");
  } else {
    rep = audit_block_stream(cert, j, tol);
  }
  if (!rep.exact_ok) {
    throw Error(ErrorCode::VerificationFailed, rep.failures.front(), nlohmann::json(rep.failures));
  }
  return rep;
}

}  // namespace projdecomp
