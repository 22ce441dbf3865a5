// One line per acceptance criterion; exit status is the number of failed criteria.
#include <chrono>
#include <cstdio>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>

#include "projdecomp/blocksum.hpp"
#include "projdecomp/conditions.hpp"
#include "projdecomp/error.hpp"
#include "projdecomp/fillmore.hpp"
#include "projdecomp/ii1.hpp"
#include "../support/random_inputs.hpp"

using namespace projdecomp;
using projdecomp::testing::random_isometry;
using projdecomp::testing::random_psd;
using projdecomp::testing::random_rational;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

struct Ledger {
  std::ostringstream note;
  bool pass = true;

  void require(bool ok, const std::string& what) {
    if (!ok && pass) note << what;
    pass = pass && ok;
  }
};

std::mt19937_64 rng(20261014);

// Consistency findings for criterion 8, accumulated while the other criteria run.
struct CrossCheck {
  std::size_t certificates = 0;
  std::size_t inconsistencies = 0;
  std::string first;

  void flag(const std::string& what) {
    if (inconsistencies++ == 0) first = what;
  }
} cross;

void cross_check_matrix(const HermitianMatrix& a, const FiniteMatrixCert& cert) {
  ++cross.certificates;
  const auto nec = finite_sum_necessary(a, FactorModel::type_i_finite(a.dim()));
  if (nec.verdict == Verdict::NotFiniteSum) cross.flag("finite_sum_necessary rejected a matrix certificate");
  const auto ra = rank_audit(a, std::vector<double>(cert.projections.size(), 1.0), cert.projections);
  if (!ra.ok) cross.flag("rank audit: " + ra.failure);
  const auto why = audit_cert(cert);
  if (!why.empty()) cross.flag("audit_cert: " + why);
}

void cross_check_block_stream(const BlockStreamCert& cert, int depth) {
  ++cross.certificates;
  const auto nec = finite_sum_necessary(cert.target, FactorModel::type_i_inf());
  if (nec.verdict == Verdict::NotFiniteSum) cross.flag("finite_sum_necessary rejected a block stream");
  for (const auto& t : cert.terms) {
    for (const auto& b : t.blocks) {
      if (!b.block_cert) continue;
      const auto& bc = *b.block_cert;
      const auto ra = rank_audit(bc.target, std::vector<double>(bc.projections.size(), 1.0), bc.projections);
      if (!ra.ok) cross.flag("block rank audit: " + ra.failure);
    }
  }
  const auto rep = audit_block_stream(cert, depth);
  if (!rep.exact_ok) cross.flag("block stream audit: " + rep.failures.front());
}

void cross_check_ii1(const II1Cert& cert, const SpectralWeightList& atoms) {
  ++cross.certificates;
  const auto nec = finite_sum_necessary(atoms, FactorModel::type_ii1());
  if (nec.verdict == Verdict::NotFiniteSum) cross.flag("finite_sum_necessary rejected a II1 certificate");
  for (const auto& run : cert.runs) {
    for (const auto& s : run.steps) {
      const auto& bc = s.block.cert;
      if (bc.projections.empty()) continue;
      const auto ra = rank_audit(bc.target, std::vector<double>(bc.projections.size(), 1.0), bc.projections);
      if (!ra.ok) cross.flag("II1 block rank audit: " + ra.failure);
    }
  }
  const auto inv = verify_invariants(cert);
  if (!inv.ok()) cross.flag("II1 invariants: " + inv.failures.front().eq + " " + inv.failures.front().detail);
}

Outcome fillmore_round_trip() {
  Ledger l;
  const auto t0 = std::chrono::steady_clock::now();
  double worst_sum = 0.0, worst_idem = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 2 + static_cast<std::size_t>(rng() % 11);
    const std::size_t r = 1 + static_cast<std::size_t>(rng() % n);
    const long long m = static_cast<long long>(r) + static_cast<long long>(rng() % 6);
    const auto a = random_psd(rng, n, r, static_cast<double>(m));
    const auto cert = fillmore_decompose(a);
    l.require(static_cast<long long>(cert.projections.size()) == m, "wrong projection count");
    Matrix sum(n, n);
    for (const auto& p : cert.projections) {
      const Matrix& pm = p.matrix();
      worst_idem = std::max(worst_idem, frobenius_distance(pm * pm, pm));
      l.require(std::abs(pm.trace().real() - 1.0) < 1e-8, "projection is not rank one");
      sum += pm;
    }
    worst_sum = std::max(worst_sum, frobenius_distance(sum, a.matrix()));
    cross_check_matrix(a, cert);
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  l.require(worst_idem <= 1e-8, "idempotency residual too large");
  l.require(worst_sum <= 1e-8, "sum residual too large");
  l.require(secs < 10.0, "too slow");
  std::ostringstream d;
  d << "200 matrices, max idempotency " << worst_idem << ", max sum residual " << worst_sum << ", " << secs << " s";
  return {l.pass, l.pass ? d.str() : l.note.str() + "; " + d.str()};
}

Outcome gadget_identity() {
  Ledger l;
  double worst_idem = 0.0, worst_id = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t r = 1 + static_cast<std::size_t>(rng() % 4);
    const std::size_t extra = static_cast<std::size_t>(rng() % 3);
    const std::size_t n = 2 * r + extra;
    // e spans columns U, f' spans columns W, with U ⟂ W.
    const Matrix basis = random_isometry(rng, n, 2 * r);
    Matrix u(n, r), w(n, r);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t c = 0; c < r; ++c) {
        u(i, c) = basis(i, c);
        w(i, c) = basis(i, r + c);
      }
    const Matrix v = w * u.adjoint();
    const auto inner = random_psd(rng, r, r, 1.0 + static_cast<double>(rng() % 5));
    const auto b = make_hermitian_unchecked(u * inner.matrix() * u.adjoint());
    const auto g = two_projection_gadget(b, v);
    for (const auto* q : {&g.q_minus, &g.q_plus}) {
      worst_idem = std::max(worst_idem, frobenius_distance(q->matrix() * q->matrix(), q->matrix()));
    }
    const double nb = operator_norm(b);
    const Matrix fprime = v * v.adjoint();
    const Matrix rhs = b.matrix() * Complex(2.0 / nb) + fprime * Complex(2.0) - v * b.matrix() * v.adjoint() * Complex(2.0 / nb);
    worst_id = std::max(worst_id, frobenius_distance(g.q_minus.matrix() + g.q_plus.matrix(), rhs));
  }
  l.require(worst_idem <= 1e-10, "gadget projection not idempotent");
  l.require(worst_id <= 1e-10, "sum identity fails");
  std::ostringstream d;
  d << "100 instances, max idempotency " << worst_idem << ", max identity residual " << worst_id;
  return {l.pass, l.pass ? d.str() : l.note.str() + "; " + d.str()};
}

Outcome scheduler_exact() {
  Ledger l;
  std::size_t blocks_checked = 0;
  for (int bi = 0; bi < 5; ++bi) {
    for (int ai = 1; ai <= 10; ++ai) {
      const Rational beta(bi, 5);
      const Rational alpha = Rational(1) + Rational(ai, 10);
      const Rational a2 = alpha * alpha / (alpha - Rational(1));
      const Rational bound = a2.floor();
      ScheduleOptions opt;
      opt.build_certs = false;
      const auto sched = scalar_block_schedule(beta, alpha, 32, opt);
      l.require(sched.size() == 32, "schedule shorter than requested");
      std::vector<Rational> partial;
      for (std::size_t i = 0; i < sched.size(); ++i) {
        const auto& b = sched[i];
        ++blocks_checked;
        Rational tr(0);
        std::int64_t rank = 0;
        for (const auto& x : b.diagonal) {
          tr += x;
          if (!x.is_zero()) ++rank;
        }
        l.require(tr == Rational(b.block_trace) && tr.is_integer(), "block trace not an integer sum");
        l.require(Rational(rank) <= tr && tr <= bound, "rank ≤ trace ≤ ⌊α²/(α−1)⌋ fails");
        // Partial sum over slots 0…n_J against β₀e₀ + αΣe_k + (α − β_J)e_{n_J}.
        if (partial.size() < static_cast<std::size_t>(b.n_j + 1)) partial.resize(static_cast<std::size_t>(b.n_j + 1));
        for (std::size_t s = 0; s < b.diagonal.size(); ++s) partial[static_cast<std::size_t>(b.n_prev) + s] += b.diagonal[s];
        for (std::size_t s = 0; s < partial.size(); ++s) {
          Rational want = alpha;
          if (s == 0) want = beta;
          if (s + 1 == partial.size()) want = alpha - b.beta_j;
          l.require(partial[s] == want, "partial-sum identity fails");
        }
        if (i >= 2) {
          const auto& far = sched[i - 2];
          std::int64_t far_last = -1, first = b.n_j + 1;
          for (std::size_t s = 0; s < far.diagonal.size(); ++s)
            if (!far.diagonal[s].is_zero()) far_last = far.n_prev + static_cast<std::int64_t>(s);
          for (std::size_t s = 0; s < b.diagonal.size(); ++s)
            if (!b.diagonal[s].is_zero()) {
              first = b.n_prev + static_cast<std::int64_t>(s);
              break;
            }
          l.require(far_last < first, "blocks at distance 2 overlap");
        }
      }
      const auto assembly = interleave_assemble(sched);
      l.require(Rational(static_cast<long long>(assembly.stream_count())) <= Rational(2) * bound, "more than 2N streams");
    }
  }
  std::ostringstream d;
  d << "50 grid points, " << blocks_checked << " blocks, exact";
  return {l.pass, l.pass ? d.str() : l.note.str()};
}

Outcome scalar_tail_end_to_end() {
  Ledger l;
  const ScalarTailOperator a(HermitianMatrix::diagonal({0.5}), Rational(3, 2));
  const auto cert = finite_sum_decompose(a);
  const auto mat = materialize_truncation(cert, 64);
  const auto target = a.truncate(64);
  Matrix sum(64, 64);
  double idem = 0.0;
  for (const auto& p : mat.projections) {
    sum += p;
    idem = std::max(idem, frobenius_distance(p * p, p));
  }
  double res = 0.0;
  for (std::size_t i : mat.covered)
    for (std::size_t k : mat.covered) res += std::norm(sum(i, k) - target(i, k));
  res = std::sqrt(res);
  l.require(mat.covered.size() >= 32, "too few covered slots");
  l.require(res <= 1e-8, "truncation residual too large");
  l.require(idem <= 1e-8, "materialized stream not idempotent");
  l.require(cert.total_count() <= cert.count_bound(), "count exceeds bound");
  cross_check_block_stream(cert, 8);
  // Further random scalar tails feed the consistency check.
  for (int trial = 0; trial < 6; ++trial) {
    const std::size_t d = 1 + static_cast<std::size_t>(rng() % 3);
    const auto head = random_psd(rng, d, d, 0.5 + static_cast<double>(rng() % 3));
    const Rational alpha = Rational(1) + Rational(1 + static_cast<long long>(rng() % 9), 10) + Rational(static_cast<long long>(rng() % 2));
    const ScalarTailOperator s(head, alpha);
    cross_check_block_stream(finite_sum_decompose(s, 12), 6);
  }
  std::ostringstream d;
  d << mat.covered.size() << " covered slots of 64, " << mat.projections.size() << " projections, residual " << res;
  return {l.pass, l.pass ? d.str() : l.note.str() + "; " + d.str()};
}

Outcome lemma61_exact() {
  Ledger l;
  int runs = 0, steps = 0;
  const Rational one(1), two(2), four(4);
  while (runs < 100) {
    const Rational lambda = random_rational(rng, 0, 1, 9);
    const Rational mu = random_rational(rng, 0, 3, 8);
    const Rational tau_e = random_rational(rng, 0, 1, 24) / two;
    const Rational tau_f = random_rational(rng, 0, 1, 24) / two;
    if (mu < Rational(1, 4) || tau_e.is_zero() || !(mu * tau_e > lambda * tau_f)) continue;
    ++runs;
    Lemma61Cert cert;
    try {
      cert = lemma61_run(lambda, mu, tau_f, tau_e, 20);
    } catch (const Error& e) {
      l.require(false, std::string("run failed: ") + e.what());
      continue;
    }
    const auto inv = verify_invariants(cert);
    if (!inv.ok()) l.require(false, "invariant " + inv.failures.front().eq + ": " + inv.failures.front().detail);
    for (const auto& s : cert.steps) {
      ++steps;
      const auto& st = s.state;
      if (s.j >= 1 && s.delta && !st.f_zero()) {
        const Rational delta = st.mu * st.tau_e() / st.tau_f() - st.lambda;
        l.require(delta == *s.delta, "stored δ differs from μτ(e)/τ(f) − λ");
        l.require(Rational(1, 2) <= delta && delta <= two + st.mu, "δ_j outside [1/2, 2+μ]");
      }
      if (s.j >= 1) {
        const Rational cap = four * (two + st.mu) * (two + st.mu) * (two + st.mu) / st.mu;
        l.require(Rational(s.block.projection_count()) <= cap, "N_j > 4(2+μ)³/μ");
      }
      if (s.next && !st.tau_e().is_zero()) {
        l.require(s.next->tau_e() / st.tau_e() <= one - st.mu.frac() / two, "τ(e_j) decays too slowly");
      }
    }
    SpectralWeightList atoms;
    if (tau_f.sign() > 0) atoms.atoms.push_back({one - lambda, tau_f});
    atoms.atoms.push_back({one + mu, tau_e});
    II1Cert wrapped;
    wrapped.runs.push_back(cert);
    cross_check_ii1(wrapped, atoms);
  }
  // Worked fixture, locked by hand.
  const auto fx = lemma61_run(Rational(1, 4), Rational(1, 2), Rational(1, 2), Rational(1, 2), 20);
  const auto& s0 = fx.steps.at(0);
  l.require(s0.k == 20 && s0.n == 14 && s0.m == 3, "fixture k, n, m differ from 20, 14, 3");
  l.require(s0.alpha && *s0.alpha == one, "fixture α differs from 1");
  l.require(fx.steps.size() > 1 && fx.steps[1].delta && *fx.steps[1].delta == two, "fixture δ₁ differs from 2");
  std::ostringstream d;
  d << runs << " runs, " << steps << " steps; fixture k=" << s0.k << " n=" << s0.n << " m=" << s0.m;
  return {l.pass, l.pass ? d.str() : l.note.str()};
}

SpectralWeightList atoms_of(std::initializer_list<std::pair<Rational, Rational>> xs) {
  SpectralWeightList out;
  for (const auto& [g, w] : xs) out.atoms.push_back({g, w});
  return out;
}

Outcome theorem65_driver() {
  Ledger l;
  struct Fixture {
    SpectralWeightList atoms;
    std::int64_t denominator;
  };
  const std::vector<Fixture> fixtures = {
      {atoms_of({{Rational(3, 2), Rational(1, 2)}, {Rational(3, 4), Rational(1, 2)}}), 6000},
      {atoms_of({{Rational(2), Rational(1, 5)}, {Rational(1, 2), Rational(1, 5)}, {Rational(1), Rational(1, 5)}}), 6000},
      {atoms_of({{Rational(3, 2), Rational(1, 3)}, {Rational(2), Rational(1, 6)}, {Rational(1, 2), Rational(1, 3)}}), 3600},
  };
  double worst = 0.0;
  const Rational one(1);
  for (const auto& fx : fixtures) {
    const auto cert = theorem65_decompose(fx.atoms);
    l.require(cert.plan.has_value(), "no plan");
    if (!cert.plan) continue;
    const auto& plan = *cert.plan;
    Rational excess, defect, xi_sum, eta_sum, piece_sum;
    for (const auto& a : fx.atoms.atoms) {
      if (a.gamma > one) excess += (a.gamma - one) * a.weight;
      if (a.gamma < one && a.gamma.sign() > 0) defect += (one - a.gamma) * a.weight;
    }
    for (const auto& x : plan.xi) xi_sum += x;
    for (const auto& x : plan.eta) eta_sum += x;
    for (const auto& p : plan.matching.pieces) piece_sum += p.value;
    l.require(plan.gap == excess - defect, "gap differs from τ(a₊) − τ(a₋)");
    l.require(xi_sum == eta_sum && xi_sum == piece_sum, "matched partitions do not balance");
    Rational trace;
    for (const auto& r : cert.runs) trace += r.input_trace();
    for (const auto& u : cert.unit_projections) trace += u.length();
    l.require(trace == fx.atoms.trace(), "runs do not reassemble τ(a)");
    for (const auto& pr : plan.pairs) {
      const Rational delta = pr.mu * pr.tau_e / (pr.tau_f.is_zero() ? one : pr.tau_f) - pr.lambda;
      if (pr.tau_f.sign() > 0) l.require(delta == plan.ratio && delta.sign() > 0, "rebalanced gap is not ρ/σ");
    }
    const auto inv = verify_invariants(cert);
    if (!inv.ok()) l.require(false, "invariant " + inv.failures.front().eq + ": " + inv.failures.front().detail);
    const auto mat = materialize(cert, fx.denominator);
    l.require(mat.failures.empty(), mat.failures.empty() ? "" : "materialize: " + mat.failures.front());
    worst = std::max(worst, mat.max_block_residual);
    cross_check_ii1(cert, fx.atoms);
  }
  l.require(worst <= 1e-6, "block residual above 1e-6");
  const auto pair = lemma61_decompose(Rational(1, 2), Rational(1, 2), Rational(1, 2), Rational(1, 2));
  l.require(pair.projection_count() == 2, "equality shortcut does not give 2 projections");
  std::ostringstream d;
  d << fixtures.size() << " atom lists, max block residual " << worst << "; shortcut count " << pair.projection_count();
  return {l.pass, l.pass ? d.str() : l.note.str()};
}

Outcome classifier_fixtures() {
  Ledger l;
  DiagonalOperator ipk;
  ipk.shift = 1;
  ipk.plus = RuleSequence::power(1, 1);
  const auto r1 = finite_sum_necessary(ipk, FactorModel::type_i_inf());
  l.require(r1.verdict == Verdict::NotFiniteSum && r1.condition == "Cor5.8(ii)", "I + 1/n not rejected by Cor5.8(ii)");

  DiagonalOperator half;
  half.shift = 1;
  half.plus = RuleSequence::finite({0.75, 0.75});
  const auto r2 = strong_sum_classify(half, FactorModel::type_i_inf());
  l.require(r2.verdict == Verdict::NotStrongSum, "trace 3/2 perturbation accepted as strong sum");

  l.require(!ideal_equivalent(RuleSequence::power(1, 1), RuleSequence::power(1, 0.5)), "1/n ~ 1/√n");
  l.require(!ideal_equivalent(RuleSequence::geometric(1, 0.5), RuleSequence::power(6.0 / (M_PI * M_PI), 2)), "2⁻ⁿ ~ 6/(π²n²)");

  const auto a = HermitianMatrix::diagonal({0.5, 1.5});
  const auto r4 = decide(a, FactorModel::type_i_finite(2));
  l.require(r4.verdict == Verdict::FiniteSum, "diag(1/2, 3/2) not a finite sum");
  const auto cert = fillmore_decompose(a);
  l.require(cert.projections.size() == 2, "diag(1/2, 3/2) does not split into 2 projections");
  cross_check_matrix(a, cert);
  return {l.pass, l.pass ? "5 fixtures reproduce" : l.note.str()};
}

Outcome cross_module() {
  Ledger l;
  l.require(cross.inconsistencies == 0, cross.first);
  std::ostringstream d;
  d << cross.certificates << " certificates, " << cross.inconsistencies << " inconsistencies";
  return {l.pass && cross.certificates > 0, l.pass ? d.str() : l.note.str() + "; " + d.str()};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"Fillmore round-trip", fillmore_round_trip},
      {"gadget identity", gadget_identity},
      {"block scheduler, exact", scheduler_exact},
      {"scalar-tail end-to-end", scalar_tail_end_to_end},
      {"II1 recursion, exact", lemma61_exact},
      {"finite-spectrum II1 driver", theorem65_driver},
      {"classifier fixtures", classifier_fixtures},
      {"cross-module consistency", cross_module},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    failed += o.pass ? 0 : 1;
    std::cout << "criterion " << (i + 1) << " [" << (o.pass ? "PASS" : "FAIL") << "] " << criteria[i].first << ": "
              << o.detail << std::endl;
  }
  return failed;
}
