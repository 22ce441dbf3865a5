#include "projdecomp/ii1.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "projdecomp/error.hpp"

namespace projdecomp {

namespace {

const Rational kZero(0);
const Rational kOne(1);
const Rational kHalf(1, 2);

nlohmann::json inconclusive_detail(const Rational& lhs, const Rational& rhs) {
  return {{"verdict", "Inconclusive"},
          {"condition", "Thm5.4(ii)"},
          {"witness", {{"excess_trace", lhs.str()}, {"defect_trace", rhs.str()}}}};
}

Interval sub(const Rational& lo, const Rational& len) { return {lo, lo + len}; }

FiniteMatrixCert diagonal_cert(const std::vector<Rational>& diag, const TolerancePolicy& tol) {
  std::vector<double> d(diag.size());
  for (std::size_t i = 0; i < diag.size(); ++i) d[i] = diag[i].to_double();
  return fillmore_decompose(HermitianMatrix::diagonal(d), tol);
}

Rational bound_j_ge1(const Rational& mu) {
  const Rational s = Rational(2) + mu;
  return Rational(4) * s * s * s / mu;
}

Rational bound_j0(const Rational& mu, const std::optional<Rational>& delta) {
  if (!delta) return kOne + mu;
  const Rational s = Rational(2) + mu;
  return Rational(4) * s * s / mu * max(*delta, kOne / *delta);
}

bool on_grid(const Rational& x, std::int64_t d) { return (x * Rational(d)).is_integer(); }

std::vector<Interval> support(const II1Block& b) {
  std::vector<Interval> out;
  for (std::size_t s = 0; s < b.slots.size(); ++s)
    if (!b.diagonal[s].is_zero()) out.push_back(b.slots[s]);
  return out;
}

bool supports_disjoint(const std::vector<Interval>& a, const std::vector<Interval>& b) {
  for (const auto& x : a)
    for (const auto& y : b)
      if (!x.disjoint(y)) return false;
  return true;
}

bool is_jo(const II1StepRecord& s) {
  return (s.branch == Branch::TailZero && s.state.mu >= kOne) || s.branch == Branch::IntegerTerminal;
}

}  // namespace

std::string_view to_string(Branch b) {
  switch (b) {
    case Branch::TailNonzero: return "TailNonzero";
    case Branch::TailZero: return "TailZero";
    case Branch::IntegerTerminal: return "IntegerTerminal";
    case Branch::RationalTerminal: return "RationalTerminal";
    case Branch::PairShortcut: return "PairShortcut";
    case Branch::PeelProjection: return "PeelProjection";
  }
  return "TailNonzero";
}

Branch branch_from_string(std::string_view s) {
  for (auto b : {Branch::TailNonzero, Branch::TailZero, Branch::IntegerTerminal, Branch::RationalTerminal,
                 Branch::PairShortcut, Branch::PeelProjection}) {
    if (to_string(b) == s) return b;
  }
  throw Error(ErrorCode::ParseError, "unknown branch '" + std::string(s) + "'");
}

Rational SpectralWeightList::total_weight() const {
  Rational s;
  for (const auto& a : atoms) s += a.weight;
  return s;
}

Rational SpectralWeightList::trace() const {
  Rational s;
  for (const auto& a : atoms) s += a.gamma * a.weight;
  return s;
}

Rational SpectralWeightList::norm() const {
  Rational m;
  for (const auto& a : atoms)
    if (a.weight.sign() > 0) m = max(m, a.gamma);
  return m;
}

void SpectralWeightList::validate() const {
  for (const auto& a : atoms) {
    if (a.gamma.sign() < 0) throw Error(ErrorCode::NotPositive, "negative spectral value " + a.gamma.str());
    if (a.weight.sign() <= 0) throw Error(ErrorCode::BadTrace, "atom weights must be positive");
  }
  if (total_weight() > kOne) throw Error(ErrorCode::BadTrace, "total weight exceeds 1");
}

SpectralWeightList SpectralWeightList::normalized() const {
  std::map<Rational, Rational> merged;
  for (const auto& a : atoms)
    if (a.weight.sign() > 0) merged[a.gamma] += a.weight;
  SpectralWeightList out;
  for (const auto& [g, w] : merged) out.atoms.push_back({g, w});
  return out;
}

Rational II1State::trace() const { return (kOne - lambda) * tau_f() + (kOne + mu) * tau_e(); }

Rational II1Block::trace() const {
  Rational s;
  for (std::size_t i = 0; i < slots.size(); ++i) s += diagonal[i] * slots[i].length();
  return s;
}

std::int64_t Lemma61Cert::block_bound() const {
  std::int64_t n = 0;
  for (const auto& s : steps) n = std::max(n, s.block.projection_count());
  return n;
}

std::int64_t Lemma61Cert::projection_count() const {
  std::int64_t n = static_cast<std::int64_t>(assembly.stream_count());
  if (j_o) n += steps[static_cast<std::size_t>(*j_o)].block.projection_count();
  if (peeled) n += peeled->projection_count();
  return n;
}

Rational Lemma61Cert::input_trace() const { return (kOne - lambda) * tau_f + (kOne + mu) * tau_e; }

Rational Lemma61Cert::remainder_trace() const { return remainder ? remainder->trace() : kZero; }

std::int64_t II1Cert::projection_count() const {
  std::int64_t n = static_cast<std::int64_t>(unit_projections.size());
  for (const auto& r : runs) n += r.projection_count();
  return n;
}

std::int64_t II1Cert::count_bound() const {
  std::int64_t n = static_cast<std::int64_t>(unit_projections.size());
  for (const auto& r : runs) n += 3 * r.block_bound() + (r.peeled ? r.peeled->projection_count() : 0);
  return n;
}

std::pair<II1StepRecord, std::optional<II1State>> lemma61_step(const II1State& s, int j, const Lemma61Options& opt) {
  II1StepRecord rec;
  rec.j = j;
  rec.state = s;
  const Rational& mu = s.mu;
  const Rational& lambda = s.lambda;
  if (!(mu.sign() > 0) || s.e.empty()) throw Error(ErrorCode::InequalityViolated, "step requires μ > 0 and e ≠ 0");

  if (s.f_zero()) {
    const Rational fl = mu.floor();
    if (mu.is_integer()) {
      rec.branch = Branch::IntegerTerminal;
      rec.block.slots = {s.e};
      rec.block.diagonal = {kOne + mu};
      rec.block.cert = diagonal_cert(rec.block.diagonal, opt.tol);
      rec.block_trace = (kOne + mu).to_int64();
      rec.block_rank = 1;
      return {std::move(rec), std::nullopt};
    }
    const mpz_class q = mu.raw().get_den();
    const mpz_class p = mu.raw().get_num();
    const bool small_q = q <= static_cast<unsigned long>(opt.max_block_dim);
    if (opt.shortcuts && small_q && (j == 0 || Rational(mpz_class(p + q)) <= bound_j_ge1(mu))) {
      const auto qq = static_cast<std::int64_t>(q.get_si());
      const Rational w = s.tau_e() / Rational(qq);
      rec.branch = Branch::RationalTerminal;
      for (std::int64_t i = 0; i < qq; ++i) rec.block.slots.push_back(sub(s.e.lo + Rational(i) * w, w));
      rec.block.diagonal.assign(static_cast<std::size_t>(qq), kOne + mu);
      rec.block.cert = diagonal_cert(rec.block.diagonal, opt.tol);
      rec.block_trace = qq + static_cast<std::int64_t>(p.get_si());
      rec.block_rank = qq;
      return {std::move(rec), std::nullopt};
    }
    rec.branch = Branch::TailZero;
    II1State next;
    next.mu = mu.frac();
    next.lambda = kOne - next.mu;
    const Rational tf = next.mu * s.tau_e() / Rational(2);
    next.f = {s.e.hi - tf, s.e.hi};
    next.e = {s.e.lo, s.e.hi - tf};
    rec.block.slots = {next.e, next.f};
    rec.block.diagonal = {fl, fl + kOne};
    const std::int64_t copies = fl.to_int64();
    FiniteMatrixCert cert;
    cert.target = HermitianMatrix::diagonal({fl.to_double(), (fl + kOne).to_double()});
    for (std::int64_t c = 0; c < copies; ++c) cert.projections.push_back(ProjectionMatrix::coordinates(2, {0, 1}));
    cert.projections.push_back(ProjectionMatrix::coordinates(2, {1}));
    cert.residual = 0.0;
    rec.block.cert = std::move(cert);
    rec.block_trace = copies + 1;
    rec.block_rank = copies > 0 ? 2 : 1;
    rec.next = next;
    return {std::move(rec), next};
  }

  if (!(lambda.sign() > 0 && lambda < kOne)) throw Error(ErrorCode::InequalityViolated, "step requires 0 < λ < 1");
  const Rational lhs = mu * s.tau_e();
  const Rational rhs = lambda * s.tau_f();
  if (!(lhs > rhs)) throw Error(ErrorCode::InequalityViolated, "μτ(e) > λτ(f) fails", inconclusive_detail(lhs, rhs));

  rec.branch = Branch::TailNonzero;
  const Rational delta = lhs / s.tau_f() - lambda;
  const Rational gamma = min(delta / Rational(2), kHalf);
  const Rational k = ((Rational(2) + mu) / gamma).floor();
  const Rational n = (k * (lambda + delta - gamma) / mu).ceil() - kOne;
  const Rational m = ((n + kOne) * mu - k * lambda).floor() + kOne;
  const Rational alpha = k * lambda - n * mu + m;
  rec.delta = delta;
  rec.gamma = gamma;
  rec.k = k.to_int64();
  rec.n = n.to_int64();
  rec.m = m.to_int64();
  rec.alpha = alpha;
  if (!(mu < alpha && alpha <= kOne + mu)) throw Error(ErrorCode::InternalBoundFailure, "μ < α ≤ 1+μ fails");
  const Rational w = s.tau_f() / k;
  if (!((n + kOne) * w < s.tau_e())) throw Error(ErrorCode::InternalBoundFailure, "(n+1)τ(f)/k < τ(e) fails");
  const auto slots = static_cast<std::size_t>(rec.k + rec.n + 1);
  if (slots > opt.max_block_dim) {
    throw Error(ErrorCode::BlockTooLarge, "block of " + std::to_string(slots) + " slots exceeds the cap");
  }
  for (std::int64_t i = 0; i < rec.k; ++i) {
    rec.block.slots.push_back(sub(s.f.lo + Rational(i) * w, w));
    rec.block.diagonal.push_back(kOne - lambda);
  }
  const Rational carve = s.e.hi - (n + kOne) * w;
  for (std::int64_t i = 0; i <= rec.n; ++i) {
    rec.block.slots.push_back(sub(carve + Rational(i) * w, w));
    rec.block.diagonal.push_back(i < rec.n ? kOne + mu : alpha);
  }
  rec.block.cert = diagonal_cert(rec.block.diagonal, opt.tol);
  rec.block_trace = rec.k + rec.n + rec.m;
  rec.block_rank = rec.k + rec.n + 1;

  II1State next;
  next.mu = mu;
  next.e = {s.e.lo, carve};
  if (alpha == kOne + mu) {
    next.f = {s.e.hi, s.e.hi};
    next.lambda = kHalf;
  } else {
    next.f = {s.e.hi - w, s.e.hi};
    next.lambda = alpha - mu;
  }
  rec.next = next;
  return {std::move(rec), next};
}

Lemma61Cert lemma61_run(const Rational& lambda, const Rational& mu, const Rational& tau_f, const Rational& tau_e,
                        int j_max, const Lemma61Options& opt) {
  if (lambda.sign() < 0 || lambda > kOne) throw Error(ErrorCode::BadRange, "λ must lie in [0,1]");
  if (!(mu.sign() > 0)) throw Error(ErrorCode::BadRange, "μ must be positive");
  if (tau_e.sign() < 0 || tau_f.sign() < 0) throw Error(ErrorCode::BadTrace, "traces must be nonnegative");
  if (opt.offset.sign() < 0 || opt.offset + tau_e + tau_f > kOne) throw Error(ErrorCode::BadTrace, "layout exceeds [0,1)");
  if (j_max < 1) throw Error(ErrorCode::BadRange, "J_max must be at least 1");

  Lemma61Cert cert;
  cert.lambda = lambda;
  cert.mu = mu;
  cert.tau_f = tau_f;
  cert.tau_e = tau_e;
  cert.offset = opt.offset;
  const Rational lhs = mu * tau_e;
  const Rational rhs = lambda * tau_f;
  II1State state;
  state.lambda = lambda;
  state.mu = mu;
  state.f = sub(opt.offset, tau_f);
  state.e = sub(opt.offset + tau_f, tau_e);

  if (lhs == rhs) {
    if (!(opt.shortcuts && lambda.sign() > 0 && tau_f.sign() > 0 && tau_e.sign() > 0)) {
      throw Error(ErrorCode::InequalityViolated, "μτ(e) = λτ(f): strict inequality required",
                  inconclusive_detail(lhs, rhs));
    }
    // τ(f)/τ(e) = μ/λ = m'/n'.
    const Rational ratio = tau_f / tau_e;
    const auto mprime = Rational(mpz_class(ratio.raw().get_num())).to_int64();
    const auto nprime = Rational(mpz_class(ratio.raw().get_den())).to_int64();
    if (static_cast<std::size_t>(mprime + nprime) > opt.max_block_dim) {
      throw Error(ErrorCode::BlockTooLarge, "equality shortcut needs " + std::to_string(mprime + nprime) + " slots");
    }
    II1StepRecord rec;
    rec.j = 0;
    rec.branch = Branch::PairShortcut;
    rec.state = state;
    rec.n = nprime;
    rec.m = mprime;
    const Rational wf = tau_f / Rational(mprime);
    const Rational we = tau_e / Rational(nprime);
    for (std::int64_t i = 0; i < mprime; ++i) {
      rec.block.slots.push_back(sub(state.f.lo + Rational(i) * wf, wf));
      rec.block.diagonal.push_back(kOne - lambda);
    }
    for (std::int64_t i = 0; i < nprime; ++i) {
      rec.block.slots.push_back(sub(state.e.lo + Rational(i) * we, we));
      rec.block.diagonal.push_back(kOne + mu);
    }
    rec.block.cert = diagonal_cert(rec.block.diagonal, opt.tol);
    rec.block_trace = mprime + nprime;
    rec.block_rank = mprime + nprime;
    cert.steps.push_back(std::move(rec));
    cert.terminated = true;
    cert.assembly = interleave_assemble(std::vector<BlockFootprint>{{0, 0, static_cast<std::size_t>(mprime + nprime)}});
    cert.tail_decay = kOne;
    return cert;
  }
  if (lhs < rhs) throw Error(ErrorCode::InequalityViolated, "μτ(e) > λτ(f) fails", inconclusive_detail(lhs, rhs));

  if (tau_f.sign() > 0 && lambda == kOne) {
    state.f = {state.f.lo, state.f.lo};
  } else if (tau_f.sign() > 0 && lambda.is_zero()) {
    II1Block peel;
    peel.slots = {state.f};
    peel.diagonal = {kOne};
    peel.cert = diagonal_cert(peel.diagonal, opt.tol);
    cert.peeled = std::move(peel);
    state.f = {state.f.lo, state.f.lo};
  }

  for (int j = 0; j < j_max; ++j) {
    auto [rec, next] = lemma61_step(state, j, opt);
    cert.steps.push_back(std::move(rec));
    if (!next) {
      cert.terminated = true;
      break;
    }
    state = *next;
  }
  if (!cert.terminated) cert.remainder = state;

  for (const auto& s : cert.steps) {
    if (is_jo(s)) {
      cert.j_o = s.j;
      break;
    }
  }
  for (const auto& s : cert.steps) {
    if (cert.j_o && s.j == *cert.j_o) continue;
    auto& streams = (s.j % 2 == 0) ? cert.assembly.odd : cert.assembly.even;
    const auto count = static_cast<std::size_t>(s.block.projection_count());
    if (streams.size() < count) streams.resize(count);
    for (std::size_t k = 0; k < count; ++k) streams[k].emplace_back(static_cast<std::size_t>(s.j), k);
  }
  const Rational last_mu = cert.remainder ? cert.remainder->mu : cert.steps.back().state.mu;
  cert.tail_decay = kOne - last_mu.frac() / Rational(2);
  return cert;
}

II1Cert lemma61_decompose(const Rational& lambda, const Rational& mu, const Rational& tau_f, const Rational& tau_e,
                          int j_max, const Lemma61Options& opt) {
  II1Cert cert;
  cert.kind = "lemma61";
  cert.runs.push_back(lemma61_run(lambda, mu, tau_f, tau_e, j_max, opt));
  return cert;
}

Matching match_partitions(const std::vector<Rational>& xi, const std::vector<Rational>& eta) {
  Rational sx, se;
  for (const auto& x : xi) {
    if (!(x.sign() > 0)) throw Error(ErrorCode::SumMismatch, "summands must be positive");
    sx += x;
  }
  for (const auto& y : eta) {
    if (!(y.sign() > 0)) throw Error(ErrorCode::SumMismatch, "summands must be positive");
    se += y;
  }
  if (sx != se) throw Error(ErrorCode::SumMismatch, "sums differ: " + sx.str() + " vs " + se.str());

  struct Item {
    Rational v;
    std::size_t idx;
  };
  std::vector<Item> a, b;
  for (std::size_t i = 0; i < xi.size(); ++i) a.push_back({xi[i], i});
  for (std::size_t j = 0; j < eta.size(); ++j) b.push_back({eta[j], j});
  auto desc = [](const Item& x, const Item& y) { return x.v > y.v; };
  Matching out;
  while (!a.empty() && !b.empty()) {
    std::stable_sort(a.begin(), a.end(), desc);
    std::stable_sort(b.begin(), b.end(), desc);
    const bool a_short = a.size() <= b.size();
    auto& shorter = a_short ? a : b;
    auto& longer = a_short ? b : a;
    Item& big = shorter.front();
    const Item small = longer.back();
    auto emit = [&](const Item& s_item, const Item& l_item, const Rational& v) {
      if (a_short) out.pieces.push_back({s_item.idx, l_item.idx, v});
      else out.pieces.push_back({l_item.idx, s_item.idx, v});
    };
    if (small.v >= big.v) {
      for (std::size_t t = 0; t < shorter.size(); ++t) emit(shorter[t], longer[t], shorter[t].v);
      break;
    }
    emit(big, small, small.v);
    big.v -= small.v;
    longer.pop_back();
  }
  return out;
}

II1Cert theorem65_decompose(const SpectralWeightList& input, int j_max, const Lemma61Options& opt) {
  input.validate();
  const SpectralWeightList a = input.normalized();
  II1Cert cert;
  cert.kind = "theorem65";
  cert.atoms = a;
  Theorem65Plan plan;
  Rational excess, defect;
  for (std::size_t i = 0; i < a.atoms.size(); ++i) {
    const auto& at = a.atoms[i];
    if (at.gamma.is_zero()) continue;
    if (at.gamma == kOne) {
      plan.unit_atoms.push_back(i);
    } else if (at.gamma > kOne) {
      plan.excess_atoms.push_back(i);
      excess += (at.gamma - kOne) * at.weight;
    } else {
      plan.defect_atoms.push_back(i);
      defect += (kOne - at.gamma) * at.weight;
      plan.sigma += at.weight;
    }
  }
  plan.gap = excess - defect;
  plan.norm = a.norm();
  plan.h = plan.norm.is_zero() ? 0 : (Rational(14) * plan.norm).ceil().to_int64() - 1;
  if (plan.gap.sign() < 0) {
    throw Error(ErrorCode::InequalityViolated, "τ(a₊) < τ(a₋)", inconclusive_detail(excess, defect));
  }
  Rational cursor = opt.offset;
  auto run_at = [&](const Rational& lambda, const Rational& mu, const Rational& tf, const Rational& te) {
    Lemma61Options o = opt;
    o.offset = cursor;
    cert.runs.push_back(lemma61_run(lambda, mu, tf, te, j_max, o));
    cursor += tf + te;
  };

  if (plan.gap.is_zero()) {
    if (!plan.excess_atoms.empty() || !plan.defect_atoms.empty()) {
      if (plan.excess_atoms.size() != 1 || plan.defect_atoms.size() != 1) {
        throw Error(ErrorCode::InequalityViolated, "τ(a₊) = τ(a₋) outside the single-pair shortcut",
                    inconclusive_detail(excess, defect));
      }
      const auto& e = a.atoms[plan.excess_atoms[0]];
      const auto& f = a.atoms[plan.defect_atoms[0]];
      plan.equality_shortcut = true;
      plan.xi = {(e.gamma - kOne) * e.weight};
      plan.eta = {(kOne - f.gamma) * f.weight};
      plan.matching.pieces.push_back({0, 0, plan.xi[0]});
      plan.pairs.push_back({plan.excess_atoms[0], plan.defect_atoms[0], e.gamma - kOne, kOne - f.gamma, plan.xi[0],
                            e.weight, f.weight});
      run_at(kOne - f.gamma, e.gamma - kOne, f.weight, e.weight);
    }
  } else {
    plan.rho = plan.gap;
    plan.ratio = plan.sigma.sign() > 0 ? plan.rho / plan.sigma : kZero;
    for (auto i : plan.excess_atoms) plan.xi.push_back((a.atoms[i].gamma - kOne) * a.atoms[i].weight);
    if (plan.defect_atoms.empty()) {
      for (std::size_t t = 0; t < plan.excess_atoms.size(); ++t) {
        const auto& e = a.atoms[plan.excess_atoms[t]];
        plan.pairs.push_back({plan.excess_atoms[t], std::nullopt, e.gamma - kOne, kZero, plan.xi[t], e.weight, kZero});
        run_at(kZero, e.gamma - kOne, kZero, e.weight);
      }
    } else {
      for (auto j : plan.defect_atoms) plan.eta.push_back((kOne - a.atoms[j].gamma + plan.ratio) * a.atoms[j].weight);
      plan.matching = match_partitions(plan.xi, plan.eta);
      for (const auto& piece : plan.matching.pieces) {
        const auto& e = a.atoms[plan.excess_atoms[piece.i]];
        const auto& f = a.atoms[plan.defect_atoms[piece.j]];
        const Rational mu = e.gamma - kOne;
        const Rational lambda = kOne - f.gamma;
        const Rational te = piece.value / mu;
        const Rational tf = piece.value / (lambda + plan.ratio);
        plan.pairs.push_back(
            {plan.excess_atoms[piece.i], plan.defect_atoms[piece.j], mu, lambda, piece.value, te, tf});
        run_at(lambda, mu, tf, te);
      }
    }
  }
  for (auto u : plan.unit_atoms) {
    cert.unit_projections.push_back(sub(cursor, a.atoms[u].weight));
    cursor += a.atoms[u].weight;
  }
  cert.plan = std::move(plan);
  return cert;
}

InvariantReport verify_invariants(const Lemma61Cert& cert, const TolerancePolicy& tol) {
  InvariantReport rep;
  auto fail = [&](int j, std::string eq, std::string detail) {
    rep.failures.push_back({0, j, std::move(eq), std::move(detail)});
  };
  if (cert.steps.empty()) return rep;

  const Rational two(2);
  Interval prev_e = sub(cert.offset, cert.tau_f + cert.tau_e);  // e_{−1} = e + f
  Rational running = cert.input_trace();
  if (cert.peeled) {
    const auto& p = *cert.peeled;
    if (p.slots.size() != 1 || p.diagonal != std::vector<Rational>{kOne} || p.projection_count() != 1) {
      fail(-1, "peel", "λ = 0 layer must be the single projection f");
    }
    if (!cert.lambda.is_zero()) fail(-1, "peel", "projection peeled while λ ≠ 0");
    running -= p.trace();
  }
  for (std::size_t idx = 0; idx < cert.steps.size(); ++idx) {
    const auto& s = cert.steps[idx];
    const int j = s.j;
    const auto& st = s.state;
    ++rep.steps_checked;
    if (j != static_cast<int>(idx)) fail(j, "index", "step index out of sequence");
    if (st.trace() != running) fail(j, "trace", "τ(a_j) differs from the running remainder");
    if (st.e.empty()) fail(j, "6.16", "e_j = 0");
    if (!st.e.disjoint(st.f)) fail(j, "6.17", "e_j f_j ≠ 0");
    if (!prev_e.contains(st.e) || !prev_e.contains(st.f) ||
        (j > 0 && st.tau_e() + st.tau_f() > prev_e.length())) {
      fail(j, "6.18", "f_j + e_j ≰ e_{j−1}");
    }
    const bool f_nonzero = !st.f_zero();
    if ((f_nonzero || j > 0) && !(st.lambda.sign() > 0 && st.lambda < kOne)) fail(j, "6.19", "λ_j ∉ (0,1)");
    if (!(st.mu * st.tau_e() >= st.lambda * st.tau_f())) fail(j, "6.21", "μ_jτ(e_j) < λ_jτ(f_j)");
    if (s.branch != Branch::PairShortcut && !(st.mu * st.tau_e() > st.lambda * st.tau_f())) {
      fail(j, "6.21", "μ_jτ(e_j) > λ_jτ(f_j) fails");
    }
    const auto& b = s.block;
    if (b.slots.size() != b.diagonal.size()) {
      fail(j, "6.24", "slot and diagonal lengths differ");
      continue;
    }
    // b_j ≠ 0 is a sum of N_j projections.
    const std::string why = audit_cert(b.cert, tol);
    if (!why.empty()) fail(j, "6.24", why);
    if (b.projection_count() != s.block_trace) fail(j, "6.24", "projection count differs from the block trace");
    if (b.trace().sign() <= 0) fail(j, "6.24", "b_j = 0");
    {
      bool diag_ok = b.cert.target.dim() == b.diagonal.size();
      for (std::size_t t = 0; diag_ok && t < b.diagonal.size(); ++t) {
        diag_ok = std::abs(b.cert.target(t, t).real() - b.diagonal[t].to_double()) <= tol.proj_tol * (1.0 + std::abs(b.diagonal[t].to_double()));
      }
      if (!diag_ok) fail(j, "6.24", "block certificate target differs from the block diagonal");
    }
    Rational nonzero_slots, diag_sum;
    for (const auto& x : b.diagonal) {
      diag_sum += x;
      if (!x.is_zero()) nonzero_slots += kOne;
    }
    for (const auto& sl : b.slots) {
      if (!st.e.contains(sl) && !st.f.contains(sl)) fail(j, "6.18", "block slot outside e_j + f_j");
    }

    std::optional<II1State> nx = s.next;
    Rational block_expected;
    switch (s.branch) {
      case Branch::TailNonzero: {
        if (!f_nonzero) {
          fail(j, "branch", "TailNonzero with f_j = 0");
          break;
        }
        const Rational delta = st.mu * st.tau_e() / st.tau_f() - st.lambda;
        if (!s.delta || *s.delta != delta) fail(j, "6.14", "δ_j ≠ μ_jτ(e_j)/τ(f_j) − λ_j");
        const Rational d = s.delta.value_or(delta);
        const Rational gamma = min(d / two, kHalf);
        if (!s.gamma || *s.gamma != gamma) fail(j, "6.15", "γ_j ≠ min{δ_j/2, 1/2}");
        if (j >= 1 && !(kHalf <= d && d <= two + st.mu)) fail(j, "6.20", "δ_j ∉ [1/2, 2+μ]");
        const Rational g = s.gamma.value_or(gamma);
        if (!(g.sign() > 0)) {
          fail(j, "6.15", "γ_j ≤ 0");
          break;
        }
        const Rational k(s.k), n(s.n), m(s.m);
        if (k != ((two + st.mu) / g).floor()) fail(j, "6.27", "k ≠ ⌊(2+μ)/γ⌋");
        if (n != (k * (st.lambda + d - g) / st.mu).ceil() - kOne) fail(j, "6.28", "n ≠ ⌈k(λ+δ−γ)/μ⌉ − 1");
        if (m != ((n + kOne) * st.mu - k * st.lambda).floor() + kOne) fail(j, "6.29", "m ≠ ⌊(n+1)μ − kλ⌋ + 1");
        const Rational alpha = k * st.lambda - n * st.mu + m;
        if (!s.alpha || *s.alpha != alpha) fail(j, "6.32", "α ≠ kλ − nμ + m");
        const Rational al = s.alpha.value_or(alpha);
        if (!(st.mu < al && al <= kOne + st.mu)) fail(j, "6.33", "μ < α ≤ 1+μ fails");
        if (!(k.sign() > 0) || !((n + kOne) * st.tau_f() / k < st.tau_e())) fail(j, "6.34", "(n+1)τ(f)/k < τ(e) fails");
        if (s.block_trace != s.k + s.n + s.m || s.block_rank != s.k + s.n + 1) fail(j, "6.24", "trace ≠ k+n+m or rank ≠ k+n+1");
        if (j == 0 && !(Rational(s.block_trace) <= bound_j0(st.mu, d))) fail(j, "6.35", "N_0 exceeds 4(2+μ)²/μ·max{δ,1/δ}");
        // slot layout: k slots covering f_j, then n+1 slots ending at the top of e_j
        if (static_cast<std::int64_t>(b.slots.size()) != s.k + s.n + 1) {
          fail(j, "6.24", "slot count ≠ k+n+1");
          break;
        }
        const Rational w = k.sign() > 0 ? st.tau_f() / k : kZero;
        for (std::int64_t t = 0; t < s.k + s.n + 1; ++t) {
          const auto& sl = b.slots[static_cast<std::size_t>(t)];
          if (sl.length() != w) fail(j, "6.24", "slots are not equivalent");
          const Rational want = t < s.k ? kOne - st.lambda : (t < s.k + s.n ? kOne + st.mu : al);
          if (b.diagonal[static_cast<std::size_t>(t)] != want) fail(j, "6.24", "block diagonal differs from the construction");
          const bool in_f = t < s.k;
          if (in_f && !st.f.contains(sl)) fail(j, "6.18", "p_i ≰ f_j");
          if (!in_f && !st.e.contains(sl)) fail(j, "6.18", "q_i ≰ e_j");
        }
        if (!nx) {
          fail(j, "6.16", "TailNonzero step without successor");
          break;
        }
        if (nx->mu != st.mu) fail(j, "6.13", "μ_{j+1} ≠ μ_j while f_j ≠ 0");
        if (al == kOne + st.mu) {
          if (!nx->f_zero()) fail(j, "6.32", "α = 1+μ but f_{j+1} ≠ 0");
        } else if (nx->lambda != al - st.mu || nx->tau_f() != w) {
          fail(j, "6.19", "λ_{j+1} ≠ α − μ or τ(f_{j+1}) ≠ τ(f_j)/k");
        }
        if (nx->tau_e() != st.tau_e() - (n + kOne) * w) fail(j, "6.16", "τ(e_{j+1}) ≠ τ(e_j) − (n+1)τ(f_j)/k");
        if (!nx->f_zero()) {
          const Rational d1 = nx->mu * nx->tau_e() / nx->tau_f() - nx->lambda;
          if (d1 != k * d - m) fail(j + 1, "6.14", "δ_{j+1} ≠ kδ_j − m");
        }
        break;
      }
      case Branch::TailZero: {
        if (f_nonzero) fail(j, "branch", "TailZero with f_j ≠ 0");
        if (st.mu.is_integer()) fail(j, "branch", "TailZero with integer μ");
        if (!nx) {
          fail(j, "6.16", "TailZero step without successor");
          break;
        }
        const Rational mu1 = st.mu.frac();
        if (nx->mu != mu1) fail(j, "6.13", "μ_{j+1} ≠ μ_j − ⌊μ_j⌋");
        if (nx->lambda != kOne - mu1) fail(j, "6.19", "λ_{j+1} ≠ 1 − μ_{j+1}");
        if (nx->tau_f() != mu1 * st.tau_e() / two) fail(j, "6.18", "τ(f_{j+1}) ≠ μ_{j+1}τ(e_j)/2");
        const Rational fl = st.mu.floor();
        if (b.diagonal != std::vector<Rational>{fl, fl + kOne} || b.slots.size() != 2 || b.slots[0] != nx->e ||
            b.slots[1] != nx->f) {
          fail(j, "6.24", "TailZero block differs from ⌊μ⌋e_j + f_{j+1}");
        }
        if (s.block_trace != fl.to_int64() + 1) fail(j, "6.24", "N_j ≠ ⌊μ⌋ + 1");
        if (j == 0 && !(Rational(s.block_trace) <= kOne + st.mu)) fail(j, "6.25", "N_0 > 1+μ");
        if (nx->tau_f().sign() > 0) {
          const Rational d1 = nx->mu * nx->tau_e() / nx->tau_f() - nx->lambda;
          if (d1 != kOne) fail(j + 1, "6.14", "δ after the f = 0 step ≠ 1");
        }
        break;
      }
      case Branch::IntegerTerminal:
        if (f_nonzero || !st.mu.is_integer()) fail(j, "branch", "integer terminal requires f = 0 and integer μ");
        if (b.diagonal != std::vector<Rational>{kOne + st.mu} || b.slots.size() != 1 || b.slots[0] != st.e) {
          fail(j, "6.24", "terminal block differs from (1+μ)e_j");
        }
        if (s.block_trace != (kOne + st.mu).to_int64()) fail(j, "6.24", "N_j ≠ 1+μ");
        if (nx) fail(j, "terminal", "terminal step has a successor");
        break;
      case Branch::RationalTerminal: {
        if (f_nonzero) fail(j, "branch", "RationalTerminal requires f = 0");
        const Rational q(mpz_class(st.mu.raw().get_den()));
        const Rational p(mpz_class(st.mu.raw().get_num()));
        if (Rational(static_cast<long long>(b.slots.size())) != q) fail(j, "Rem6.2(i)", "slot count ≠ denominator of μ");
        for (std::size_t t = 0; t < b.slots.size(); ++t) {
          if (b.slots[t].length() * q != st.tau_e() || !st.e.contains(b.slots[t]) || b.diagonal[t] != kOne + st.mu) {
            fail(j, "Rem6.2(i)", "slots are not an equal split of e_j");
            break;
          }
        }
        if (Rational(s.block_trace) != p + q) fail(j, "Rem6.2(i)", "N_j ≠ p+q");
        if (nx) fail(j, "terminal", "terminal step has a successor");
        break;
      }
      case Branch::PairShortcut: {
        if (st.mu * st.tau_e() != st.lambda * st.tau_f()) fail(j, "Rem6.2(ii)", "requires μτ(e) = λτ(f)");
        const Rational total = Rational(s.m + s.n);
        if (Rational(s.block_trace) != total || static_cast<std::int64_t>(b.slots.size()) != s.m + s.n) {
          fail(j, "Rem6.2(ii)", "count ≠ n+m");
        }
        for (const auto& sl : b.slots)
          if (sl.length() != b.slots.front().length()) fail(j, "Rem6.2(ii)", "slots are not equivalent");
        if (nx) fail(j, "terminal", "terminal step has a successor");
        break;
      }
      case Branch::PeelProjection:
        fail(j, "branch", "peel layer recorded as a step");
        break;
    }

    // N_j bounds for the recursion proper.
    if (j >= 1 && (s.branch == Branch::TailNonzero || s.branch == Branch::TailZero || s.branch == Branch::IntegerTerminal ||
                   s.branch == Branch::RationalTerminal)) {
      if (!(Rational(s.block_trace) <= bound_j_ge1(st.mu))) fail(j, "6.25", "N_j > 4(2+μ)³/μ");
    }
    if (j == 0 && s.branch == Branch::IntegerTerminal && !(Rational(s.block_trace) <= kOne + st.mu)) {
      fail(j, "6.25", "N_0 > 1+μ");
    }

    const Rational tb = b.trace();
    if (nx) {
      // a_j = b_j + a_{j+1}
      if (tb + nx->trace() != st.trace()) fail(j, "6.12", "τ(b_j) + τ(a_{j+1}) ≠ τ(a_j)");
      if (!(nx->tau_e() <= (kOne - st.mu.frac() / two) * st.tau_e())) fail(j, "6.22", "τ(e_{j+1}) decay bound fails");
      if (nx->mu == st.mu && !supports_disjoint(support(b), {nx->e})) fail(j, "6.23", "R_{b_j} e_{j+1} ≠ 0");
      if (!st.e.contains(nx->e) && !(st.f_zero() && st.e.contains(nx->e))) fail(j + 1, "6.18", "e_{j+1} ≰ e_j");
      if (!nx->e.disjoint(nx->f)) fail(j + 1, "6.17", "e_{j+1} f_{j+1} ≠ 0");
      if (idx + 1 < cert.steps.size() && !(cert.steps[idx + 1].state == *nx)) fail(j + 1, "state", "successor differs from the next step");
      if (idx + 1 == cert.steps.size() && (!cert.remainder || !(*cert.remainder == *nx))) fail(j, "state", "remainder differs from the last successor");
    } else {
      if (tb != st.trace()) fail(j, "6.12", "terminal block does not exhaust a_j");
      if (idx + 1 != cert.steps.size()) fail(j, "terminal", "steps after a terminal block");
    }
    running -= tb;
    prev_e = st.e;
  }

  if (cert.terminated != !cert.remainder.has_value()) fail(static_cast<int>(cert.steps.size()), "trace", "termination flag inconsistent");
  if (running != cert.remainder_trace()) fail(static_cast<int>(cert.steps.size()), "trace", "Σ τ(b_j) + τ(a_{J+1}) ≠ τ(a)");

  // j_o and parity bookkeeping.
  std::optional<int> jo;
  for (const auto& s : cert.steps)
    if (is_jo(s)) {
      jo = s.j;
      break;
    }
  if (jo != cert.j_o) fail(jo.value_or(-1), "6.26", "stored j_o differs from the first μ_j ≠ μ_{j+1} index");
  for (const auto* streams : {&cert.assembly.odd, &cert.assembly.even}) {
    for (const auto& stream : *streams) {
      for (std::size_t x = 0; x < stream.size(); ++x) {
        const auto [bj, pi] = stream[x];
        if (bj >= cert.steps.size() || pi >= cert.steps[bj].block.cert.projections.size()) {
          fail(static_cast<int>(bj), "L4.1", "stream refers to a missing projection");
          continue;
        }
        if (cert.j_o && static_cast<int>(bj) == *cert.j_o) fail(static_cast<int>(bj), "L4.1", "stream uses block j_o");
        for (std::size_t y = x + 1; y < stream.size(); ++y) {
          const auto by = stream[y].first;
          if (by < cert.steps.size() &&
              !supports_disjoint(support(cert.steps[bj].block), support(cert.steps[by].block))) {
            fail(static_cast<int>(by), "L4.1", "blocks merged into one stream overlap");
          }
        }
      }
    }
  }
  std::int64_t per_parity[2] = {0, 0};
  for (const auto& s : cert.steps) {
    if (cert.j_o && s.j == *cert.j_o) continue;
    per_parity[s.j % 2] = std::max(per_parity[s.j % 2], s.block.projection_count());
  }
  if (static_cast<std::int64_t>(cert.assembly.odd.size()) != per_parity[0] ||
      static_cast<std::int64_t>(cert.assembly.even.size()) != per_parity[1]) {
    fail(-1, "L4.1", "stream counts differ from the per-parity maxima");
  }
  const std::int64_t peel = cert.peeled ? cert.peeled->projection_count() : 0;
  if (cert.projection_count() - peel > 3 * cert.block_bound()) fail(-1, "L6.1", "more than 3N projections");
  return rep;
}

InvariantReport verify_invariants(const II1Cert& cert, const TolerancePolicy& tol) {
  InvariantReport rep;
  for (std::size_t r = 0; r < cert.runs.size(); ++r) {
    auto sub_rep = verify_invariants(cert.runs[r], tol);
    rep.steps_checked += sub_rep.steps_checked;
    for (auto& f : sub_rep.failures) {
      f.run = r;
      rep.failures.push_back(std::move(f));
    }
  }
  auto fail = [&](std::string eq, std::string detail) { rep.failures.push_back({0, -1, std::move(eq), std::move(detail)}); };

  // Layouts of different runs and unit atoms are disjoint.
  std::vector<Interval> layout;
  for (const auto& r : cert.runs) layout.push_back(sub(r.offset, r.tau_e + r.tau_f));
  for (const auto& u : cert.unit_projections) layout.push_back(u);
  for (std::size_t x = 0; x < layout.size(); ++x) {
    if (layout[x].lo.sign() < 0 || layout[x].hi > kOne) fail("layout", "interval outside [0,1)");
    for (std::size_t y = x + 1; y < layout.size(); ++y)
      if (!layout[x].disjoint(layout[y])) fail("layout", "runs overlap");
  }

  if (cert.kind != "theorem65") return rep;
  if (!cert.atoms || !cert.plan) {
    fail("plan", "theorem65 certificate without atoms or plan");
    return rep;
  }
  const auto& a = *cert.atoms;
  const auto& p = *cert.plan;
  Rational excess, defect, sigma;
  for (auto i : p.excess_atoms) excess += (a.atoms.at(i).gamma - kOne) * a.atoms.at(i).weight;
  for (auto j : p.defect_atoms) {
    defect += (kOne - a.atoms.at(j).gamma) * a.atoms.at(j).weight;
    sigma += a.atoms.at(j).weight;
  }
  if (p.gap != excess - defect) fail("T6.5", "γ ≠ Σμτ(e) − Σλτ(f)");
  if (p.sigma != sigma) fail("T6.5", "σ ≠ Στ(f)");
  if (!p.norm.is_zero() && p.h != (Rational(14) * p.norm).ceil().to_int64() - 1) fail("T6.5", "h ≠ ⌈14‖a‖⌉ − 1");
  for (std::size_t i = 0; i < a.atoms.size(); ++i) {
    const auto& g = a.atoms[i].gamma;
    const auto in = [&](const std::vector<std::size_t>& v) { return std::find(v.begin(), v.end(), i) != v.end(); };
    const bool expect_e = g > kOne, expect_f = g.sign() > 0 && g < kOne, expect_u = g == kOne;
    if (in(p.excess_atoms) != expect_e || in(p.defect_atoms) != expect_f || in(p.unit_atoms) != expect_u) {
      fail("T6.5", "atom classification inconsistent");
    }
  }
  if (cert.unit_projections.size() != p.unit_atoms.size()) fail("T6.5", "unit atoms not all realized");
  for (std::size_t u = 0; u < std::min(cert.unit_projections.size(), p.unit_atoms.size()); ++u) {
    if (cert.unit_projections[u].length() != a.atoms.at(p.unit_atoms[u]).weight) fail("T6.5", "unit atom weight differs");
  }
  if (p.pairs.size() != cert.runs.size()) fail("T6.5", "one run per rebalanced pair expected");
  if (p.gap.sign() > 0 && !p.defect_atoms.empty()) {
    if (p.rho != p.gap || p.ratio != p.rho / p.sigma) fail("6.37", "ρ/σ inconsistent");
    Rational rhs;
    for (auto j : p.defect_atoms) rhs += (kOne - a.atoms.at(j).gamma + p.ratio) * a.atoms.at(j).weight;
    if (excess != rhs) fail("6.37", "Σμτ(e) ≠ Σ(λ+ρ/σ)τ(f)");
  }
  // common refinement: pieces resum to ξ and η
  if (!p.xi.empty() && !p.eta.empty()) {
    std::vector<Rational> sx(p.xi.size()), se(p.eta.size());
    for (const auto& pc : p.matching.pieces) {
      if (pc.i >= sx.size() || pc.j >= se.size() || !(pc.value.sign() > 0)) {
        fail("L6.4", "invalid piece");
        continue;
      }
      sx[pc.i] += pc.value;
      se[pc.j] += pc.value;
    }
    if (sx != p.xi || se != p.eta) fail("L6.4", "pieces do not resum to the partitions");
    if (p.matching.pieces.size() + 1 > p.xi.size() + p.eta.size()) fail("L6.4", "more than m+n−1 pieces");
  }
  std::vector<Rational> e_used(a.atoms.size()), f_used(a.atoms.size());
  for (std::size_t t = 0; t < std::min(p.pairs.size(), cert.runs.size()); ++t) {
    const auto& pr = p.pairs[t];
    const auto& run = cert.runs[t];
    if (run.mu != pr.mu || run.lambda != pr.lambda || run.tau_e != pr.tau_e || run.tau_f != pr.tau_f) {
      fail("T6.5", "run parameters differ from the plan");
    }
    if (pr.mu * pr.tau_e != pr.piece) fail("6.41", "μ'τ(e') ≠ piece");
    e_used.at(pr.e_atom) += pr.tau_e;
    if (pr.f_atom) {
      f_used.at(*pr.f_atom) += pr.tau_f;
      if (p.gap.sign() > 0) {
        if ((pr.lambda + p.ratio) * pr.tau_f != pr.piece) fail("6.41", "(λ'+ρ/σ)τ(f') ≠ piece");
        if (pr.mu * pr.tau_e / pr.tau_f - pr.lambda != p.ratio) fail("6.38", "rebalanced gap ≠ ρ/σ");
      }
    }
  }
  for (auto i : p.excess_atoms)
    if (e_used[i] != a.atoms[i].weight) fail("T6.5", "excess atom not exhausted");
  for (auto j : p.defect_atoms)
    if (f_used[j] != a.atoms[j].weight) fail("T6.5", "defect atom not exhausted");
  return rep;
}

MaterializeReport materialize(const II1Cert& cert, std::int64_t d, const TolerancePolicy& tol) {
  if (d < 1) throw Error(ErrorCode::DenominatorTooSmall, "denominator must be positive");
  MaterializeReport rep;
  rep.denominator = d;
  auto blk_on_grid = [&](const II1Block& b) {
    for (const auto& s : b.slots)
      if (!on_grid(s.lo, d) || !on_grid(s.hi, d)) return false;
    return true;
  };
  for (const auto& u : cert.unit_projections) {
    if (!on_grid(u.lo, d) || !on_grid(u.hi, d)) throw Error(ErrorCode::DenominatorTooSmall, "unit atom off the 1/d grid");
  }

  struct Lifted {
    std::size_t run;
    const II1Block* block;
    int j;
  };
  std::vector<Lifted> used;
  for (std::size_t r = 0; r < cert.runs.size(); ++r) {
    const auto& run = cert.runs[r];
    if (run.peeled) {
      if (!blk_on_grid(*run.peeled)) throw Error(ErrorCode::DenominatorTooSmall, "peeled projection off the 1/d grid");
      used.push_back({r, &*run.peeled, -1});
    }
    int count = 0;
    for (const auto& s : run.steps) {
      if (!blk_on_grid(s.block)) break;
      used.push_back({r, &s.block, s.j});
      ++count;
    }
    if (count == 0 && !run.steps.empty()) {
      throw Error(ErrorCode::DenominatorTooSmall,
                  "first block of run " + std::to_string(r) + " is not representable with denominator " + std::to_string(d));
    }
    rep.steps_used.push_back(count);
    Rational rem = run.input_trace();
    if (run.peeled) rem -= run.peeled->trace();
    for (int t = 0; t < count; ++t) rem -= run.steps[static_cast<std::size_t>(t)].block.trace();
    rep.remainder_trace += rem;
  }

  // Per-block residual, lifted by the slot multiplicity.
  for (const auto& u : used) {
    const auto& b = *u.block;
    MaterializedBlock mb;
    mb.run = u.run;
    mb.j = u.j;
    mb.cert = b.cert;
    const std::size_t s = b.slots.size();
    std::vector<double> mult(s);
    for (std::size_t t = 0; t < s; ++t) mult[t] = (b.slots[t].length() * Rational(d)).to_double();
    mb.slot_rank = s ? static_cast<std::size_t>(mult[0]) : 0;
    Matrix sum(s, s);
    for (const auto& p : b.cert.projections) {
      sum += p.matrix();
      for (std::size_t x = 0; x < s; ++x)
        for (std::size_t y = 0; y < s; ++y)
          if (mult[x] != mult[y] && std::abs(p.matrix()(x, y)) > tol.proj_tol) {
            rep.failures.push_back("run " + std::to_string(u.run) + " block " + std::to_string(u.j) +
                                   ": projection couples slots of different trace");
          }
    }
    double acc = 0.0;
    for (std::size_t x = 0; x < s; ++x)
      for (std::size_t y = 0; y < s; ++y) {
        const Complex target = x == y ? Complex(b.diagonal[x].to_double()) : Complex(0.0);
        acc += std::min(mult[x], mult[y]) * std::norm(sum(x, y) - target);
      }
    mb.residual = std::sqrt(acc);
    const double scale = 1.0 + std::sqrt(std::max(1.0, mb.slot_rank * 1.0)) * b.cert.target.frobenius_norm();
    if (mb.residual > 1e-8 * scale) {
      rep.failures.push_back("run " + std::to_string(u.run) + " block " + std::to_string(u.j) + ": residual " +
                             std::to_string(mb.residual));
    }
    rep.max_block_residual = std::max(rep.max_block_residual, mb.residual);
    rep.blocks.push_back(std::move(mb));
  }

  // Stream orthogonality from disjoint supports.
  for (std::size_t r = 0; r < cert.runs.size(); ++r) {
    const auto& run = cert.runs[r];
    const int limit = rep.steps_used[r];
    for (const auto* streams : {&run.assembly.odd, &run.assembly.even}) {
      for (const auto& stream : *streams) {
        bool any = false;
        for (std::size_t x = 0; x < stream.size(); ++x) {
          if (static_cast<int>(stream[x].first) >= limit) continue;
          any = true;
          for (std::size_t y = x + 1; y < stream.size(); ++y) {
            if (static_cast<int>(stream[y].first) >= limit) continue;
            if (!supports_disjoint(support(run.steps[stream[x].first].block), support(run.steps[stream[y].first].block))) {
              rep.streams_orthogonal = false;
            }
          }
        }
        if (any) ++rep.stream_count;
      }
    }
    if (run.j_o && *run.j_o < limit) rep.stream_count += static_cast<std::size_t>(run.steps[static_cast<std::size_t>(*run.j_o)].block.projection_count());
    if (run.peeled) rep.stream_count += static_cast<std::size_t>(run.peeled->projection_count());
  }
  rep.stream_count += cert.unit_projections.size();
  if (!rep.streams_orthogonal) rep.failures.push_back("streams are not orthogonal sums");

  // Dense replay in M_d for small denominators.
  if (d <= 512) {
    const auto dim = static_cast<std::size_t>(d);
    auto coord = [&](const Rational& x) { return static_cast<std::size_t>((x * Rational(d)).to_int64()); };
    auto lift = [&](const II1Block& b, const Matrix& p, Matrix& out) {
      for (std::size_t x = 0; x < b.slots.size(); ++x)
        for (std::size_t y = 0; y < b.slots.size(); ++y) {
          if (p(x, y) == Complex(0.0)) continue;
          const std::size_t cx = coord(b.slots[x].lo), cy = coord(b.slots[y].lo);
          const std::size_t len = std::min(coord(b.slots[x].hi) - cx, coord(b.slots[y].hi) - cy);
          for (std::size_t l = 0; l < len; ++l) out(cx + l, cy + l) += p(x, y);
        }
    };
    Matrix expected(dim, dim), total(dim, dim);
    std::vector<Matrix> projections;
    for (const auto& u : used) {
      for (std::size_t x = 0; x < u.block->slots.size(); ++x) {
        const std::size_t cx = coord(u.block->slots[x].lo), hx = coord(u.block->slots[x].hi);
        for (std::size_t c = cx; c < hx; ++c) expected(c, c) += u.block->diagonal[x].to_double();
      }
    }
    for (const auto& un : cert.unit_projections) {
      Matrix p(dim, dim);
      for (std::size_t c = coord(un.lo); c < coord(un.hi); ++c) {
        p(c, c) = 1.0;
        expected(c, c) += 1.0;
      }
      projections.push_back(std::move(p));
    }
    for (std::size_t r = 0; r < cert.runs.size(); ++r) {
      const auto& run = cert.runs[r];
      const int limit = rep.steps_used[r];
      if (run.peeled) {
        for (const auto& p : run.peeled->cert.projections) {
          Matrix m(dim, dim);
          lift(*run.peeled, p.matrix(), m);
          projections.push_back(std::move(m));
        }
      }
      for (const auto* streams : {&run.assembly.odd, &run.assembly.even}) {
        for (const auto& stream : *streams) {
          Matrix m(dim, dim);
          bool any = false;
          for (const auto& [bj, pi] : stream) {
            if (static_cast<int>(bj) >= limit) continue;
            lift(run.steps[bj].block, run.steps[bj].block.cert.projections[pi].matrix(), m);
            any = true;
          }
          if (any) projections.push_back(std::move(m));
        }
      }
      if (run.j_o && *run.j_o < limit) {
        const auto& b = run.steps[static_cast<std::size_t>(*run.j_o)].block;
        for (const auto& p : b.cert.projections) {
          Matrix m(dim, dim);
          lift(b, p.matrix(), m);
          projections.push_back(std::move(m));
        }
      }
    }
    for (const auto& p : projections) {
      total += p;
      rep.max_idempotency = std::max(rep.max_idempotency, frobenius_distance(p * p, p));
    }
    rep.dense_checked = true;
    rep.dense_residual = frobenius_distance(total, expected);
    if (rep.dense_residual > 1e-8 * (1.0 + expected.frobenius_norm())) rep.failures.push_back("dense replay residual too large");
    if (rep.max_idempotency > 1e-8) rep.failures.push_back("assembled stream is not idempotent");
  }
  return rep;
}

}  // namespace projdecomp
