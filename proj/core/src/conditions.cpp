#include "projdecomp/conditions.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "projdecomp/error.hpp"

namespace projdecomp {

namespace {

constexpr double kIntTol = 1e-9;
constexpr long long kExcessScanLimit = 10000000;

bool near_integer(double x) { return std::abs(x - std::round(x)) <= kIntTol * std::max(1.0, std::abs(x)); }
bool nonneg_integer(double x) { return x > -kIntTol && near_integer(x); }

nlohmann::json trace_json(const TraceValue& t) {
  if (t.infinite) return "inf";
  return t.value;
}

struct HeadTraces {
  double excess = 0.0;
  double defect = 0.0;
  int rank = 0;
  double norm = 0.0;
  bool projection = true;
};

HeadTraces head_traces(const HermitianMatrix& a, const TolerancePolicy& tol) {
  HeadTraces h;
  if (a.dim() == 0) return h;
  const auto sd = eigh(a, tol);
  require_psd(sd, tol);
  for (double x : sd.eigenvalues) {
    h.norm = std::max(h.norm, x);
    if (x <= tol.rank_tol) continue;
    ++h.rank;
    if (std::abs(x - 1.0) <= tol.rank_tol) continue;
    h.projection = false;
    if (x > 1.0) h.excess += x - 1.0;
    else h.defect += 1.0 - x;
  }
  return h;
}

nlohmann::json head_witness(const HeadTraces& h) {
  return {{"trace_excess", h.excess}, {"trace_defect", h.defect}, {"rank", h.rank}};
}

struct ExactTraces {
  Rational excess;
  Rational defect;
  bool projection = true;
};

ExactTraces atom_traces(const SpectralWeightList& a) {
  ExactTraces t;
  const Rational one(1);
  for (const auto& at : a.atoms) {
    if (at.gamma.is_zero() || at.gamma == one) continue;
    t.projection = false;
    if (at.gamma > one) t.excess += (at.gamma - one) * at.weight;
    else t.defect += (one - at.gamma) * at.weight;
  }
  return t;
}

void validate_atoms(const SpectralWeightList& a, const FactorModel& model) {
  if (model.kind == FactorKind::TypeII1 || model.kind == FactorKind::TypeIII) {
    a.validate();
    return;
  }
  for (const auto& at : a.atoms) {
    if (at.gamma.sign() < 0) throw Error(ErrorCode::NotPositive, "negative spectral value " + at.gamma.str());
    if (at.weight.sign() <= 0) throw Error(ErrorCode::BadTrace, "atom weights must be positive");
  }
}

struct DiagTraces {
  TraceValue excess;
  TraceValue defect;
};

// Finite part Σ(ξₙ−1)₊ of a nonincreasing sequence.
double excess_above_one(const RuleSequence& s) {
  if (s.finite_support()) {
    double t = 0.0;
    for (double v : s.values()) t += std::max(0.0, v - 1.0);
    return t;
  }
  double t = 0.0;
  for (long long n = 1;; ++n) {
    const double v = s.at(n);
    if (v <= 1.0) break;
    if (n > kExcessScanLimit) throw Error(ErrorCode::Overflow, "sequence stays above 1 for too long");
    t += v - 1.0;
  }
  return t;
}

DiagTraces diagonal_traces(const DiagonalOperator& a) {
  a.validate();
  DiagTraces t;
  if (a.shift == 1) {
    t.excess = sequence_trace(a.plus);
    t.defect = a.minus ? sequence_trace(*a.minus) : TraceValue{};
    return t;
  }
  t.excess = {false, excess_above_one(a.plus), true};
  if (!a.plus.finite_support()) {
    t.defect = {true, 0.0, true};
  } else {
    double d = 0.0;
    for (double v : a.plus.values())
      if (v > 0.0 && v < 1.0) d += 1.0 - v;
    t.defect = {false, d, true};
  }
  return t;
}

nlohmann::json diag_witness(const DiagTraces& t) {
  return {{"trace_excess", trace_json(t.excess)}, {"trace_defect", trace_json(t.defect)}};
}

DecisionReport make(Verdict v, std::string cond, nlohmann::json witness) {
  DecisionReport r;
  r.verdict = v;
  r.condition = std::move(cond);
  r.witness = std::move(witness);
  return r;
}

[[noreturn]] void mismatch(const ModelOperator& a, const FactorModel& model) {
  throw Error(ErrorCode::ModelMismatch,
              std::string(payload_kind(a)) + " payload is not supported in model " + model.str(),
              {{"payload", payload_kind(a)}, {"model", model.str()}});
}

bool is_zero_seq(const std::optional<RuleSequence>& s) { return !s || s->is_zero(); }

bool log_rank_member(const RuleSequence& xi, const RuleSequence& eta) {
  const double px = xi.p(), pe = eta.p();
  const double qx = xi.family() == Family::ScaledHarmonicLog ? xi.q() : 0.0;
  const double qe = eta.family() == Family::ScaledHarmonicLog ? eta.q() : 0.0;
  if (px != pe) return px > pe;
  return qx >= qe;
}

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

Matrix pinch_matrix(const Matrix& x, const std::vector<ProjectionMatrix>& q) {
  Matrix out(x.rows(), x.cols());
  for (const auto& qj : q) out += qj.matrix() * x * qj.matrix();
  return out;
}

double hypothesis_tol(const HermitianMatrix& a, const TolerancePolicy& tol) {
  return tol.rank_tol * (1.0 + a.frobenius_norm());
}

}  // namespace

FactorModel FactorModel::parse(std::string_view s) {
  if (s == "I_inf") return type_i_inf();
  if (s == "II_1") return type_ii1();
  if (s == "II_inf") return type_ii_inf();
  if (s == "III") return type_iii();
  if (s == "I_n") return type_i_finite(0);
  if (s.size() > 2 && s.substr(0, 2) == "I_") {
    const std::string digits(s.substr(2));
    if (std::all_of(digits.begin(), digits.end(), [](char c) { return c >= '0' && c <= '9'; }) && digits.size() < 10) {
      const auto n = std::stoul(digits);
      if (n > 0) return type_i_finite(n);
    }
  }
  throw Error(ErrorCode::ParseError, "unknown factor model '" + std::string(s) + "'");
}

std::string FactorModel::str() const {
  switch (kind) {
    case FactorKind::TypeIFinite: return n == 0 ? "I_n" : "I_" + std::to_string(n);
    case FactorKind::TypeIInf: return "I_inf";
    case FactorKind::TypeII1: return "II_1";
    case FactorKind::TypeIIInf: return "II_inf";
    case FactorKind::TypeIII: return "III";
  }
  return "unknown";
}

TraceSemantics FactorModel::trace_semantics() const {
  switch (kind) {
    case FactorKind::TypeII1: return TraceSemantics::Normalized;
    case FactorKind::TypeIII: return TraceSemantics::None;
    default: return TraceSemantics::Semifinite;
  }
}

std::string_view payload_kind(const ModelOperator& a) {
  switch (a.index()) {
    case 0: return "matrix";
    case 1: return "scalar_tail";
    case 2: return "diag_sequence";
    default: return "spectral_list";
  }
}

DecisionReport strong_sum_classify(const ModelOperator& a, const FactorModel& model, const TolerancePolicy& tol) {
  const bool type_i = model.type_i();
  const bool type_ii = model.kind == FactorKind::TypeII1 || model.kind == FactorKind::TypeIIInf;

  if (const auto* m = std::get_if<HermitianMatrix>(&a)) {
    if (!type_i) mismatch(a, model);
    if (model.kind == FactorKind::TypeIFinite && model.n != 0 && model.n != m->dim()) {
      throw Error(ErrorCode::ModelMismatch, "matrix size differs from the factor size");
    }
    const auto h = head_traces(*m, tol);
    auto w = head_witness(h);
    w["difference"] = h.excess - h.defect;
    return make(nonneg_integer(h.excess - h.defect) ? Verdict::StrongSum : Verdict::NotStrongSum, "Thm5.4(i)", w);
  }

  if (const auto* s = std::get_if<ScalarTailOperator>(&a)) {
    const Rational one(1);
    const auto& alpha = s->alpha();
    const auto h = head_traces(s->head(), tol);
    if (model.kind == FactorKind::TypeIII) {
      const double norm = std::max(h.norm, alpha.to_double());
      const bool proj = h.projection && (alpha.is_zero() || alpha == one);
      return make(norm > 1.0 + tol.rank_tol || proj ? Verdict::StrongSum : Verdict::NotStrongSum, "Thm5.4(iii)",
                  {{"norm", norm}, {"projection", proj}});
    }
    if (model.kind != FactorKind::TypeIInf && model.kind != FactorKind::TypeIIInf) mismatch(a, model);
    const std::string cond = type_i ? "Thm5.4(i)" : "Thm5.4(ii)";
    if (alpha > one) return make(Verdict::StrongSum, cond, {{"trace_excess", "inf"}, {"trace_defect", h.defect}});
    if (alpha.sign() > 0 && alpha < one) {
      return make(Verdict::NotStrongSum, cond, {{"trace_excess", h.excess}, {"trace_defect", "inf"}});
    }
    auto w = head_witness(h);
    const double diff = h.excess - h.defect;
    w["difference"] = diff;
    const bool ok = type_i ? nonneg_integer(diff) : diff > -kIntTol;
    return make(ok ? Verdict::StrongSum : Verdict::NotStrongSum, cond, w);
  }

  if (const auto* d = std::get_if<DiagonalOperator>(&a)) {
    if (model.kind != FactorKind::TypeIInf && model.kind != FactorKind::TypeIIInf) mismatch(a, model);
    const std::string cond = type_i ? "Thm5.4(i)" : "Thm5.4(ii)";
    const auto t = diagonal_traces(*d);
    auto w = diag_witness(t);
    if (t.excess.infinite) return make(Verdict::StrongSum, cond, w);
    if (t.defect.infinite) return make(Verdict::NotStrongSum, cond, w);
    const double diff = t.excess.value - t.defect.value;
    w["difference"] = diff;
    const bool exact = t.excess.exact && t.defect.exact;
    if (type_i) {
      if (nonneg_integer(diff)) {
        return make(exact ? Verdict::StrongSum : Verdict::Inconclusive, cond, w);
      }
      return make(Verdict::NotStrongSum, cond, w);
    }
    if (!exact && std::abs(diff) <= kIntTol) return make(Verdict::Inconclusive, cond, w);
    return make(diff > -kIntTol ? Verdict::StrongSum : Verdict::NotStrongSum, cond, w);
  }

  const auto& list = std::get<SpectralWeightList>(a);
  validate_atoms(list, model);
  const auto t = atom_traces(list);
  if (model.kind == FactorKind::TypeIII) {
    const Rational norm = list.norm();
    return make(norm > Rational(1) || t.projection ? Verdict::StrongSum : Verdict::NotStrongSum, "Thm5.4(iii)",
                {{"norm", norm.str()}, {"projection", t.projection}});
  }
  if (!type_ii) mismatch(a, model);
  return make(t.excess >= t.defect ? Verdict::StrongSum : Verdict::NotStrongSum, "Thm5.4(ii)",
              {{"trace_excess", t.excess.str()}, {"trace_defect", t.defect.str()}});
}

DecisionReport finite_sum_necessary(const ModelOperator& a, const FactorModel& model, const TolerancePolicy& tol) {
  const nlohmann::json finite_range = {{"range", "finite"}};
  if (std::holds_alternative<HermitianMatrix>(a)) {
    if (!model.type_i()) mismatch(a, model);
    return make(Verdict::Inconclusive, "", finite_range);
  }
  if (const auto* list = std::get_if<SpectralWeightList>(&a)) {
    if (model.type_i()) mismatch(a, model);
    validate_atoms(*list, model);
    return make(Verdict::Inconclusive, "", finite_range);
  }
  if (model.kind != FactorKind::TypeIInf && model.kind != FactorKind::TypeIIInf) mismatch(a, model);
  const bool type_i = model.kind == FactorKind::TypeIInf;

  if (const auto* s = std::get_if<ScalarTailOperator>(&a)) {
    const Rational one(1);
    const auto h = head_traces(s->head(), tol);
    if (s->alpha().is_zero()) return make(Verdict::Inconclusive, "", finite_range);
    if (s->alpha() < one) {
      return make(Verdict::NotFiniteSum, "Thm5.6(i)", {{"trace_excess", h.excess}, {"trace_defect", "inf"}});
    }
    if (s->alpha() == one && h.excess < h.defect - kIntTol) {
      return make(Verdict::NotFiniteSum, "Thm5.6(i)", head_witness(h));
    }
    return make(Verdict::Inconclusive, "", {{"clauses", "pass"}});
  }

  const auto& d = std::get<DiagonalOperator>(a);
  const auto t = diagonal_traces(d);
  auto w = diag_witness(t);
  if (d.shift == 0) {
    if (d.plus.finite_support()) return make(Verdict::Inconclusive, "", finite_range);
    return make(Verdict::NotFiniteSum, "Thm5.6(i)", w);
  }
  if (!t.excess.infinite && (t.defect.infinite || t.excess.value < t.defect.value - kIntTol)) {
    return make(Verdict::NotFiniteSum, "Thm5.6(i)", w);
  }
  if (is_zero_seq(d.minus)) {
    if (!d.plus.finite_support()) {
      w["excess_finite_rank"] = false;
      return make(Verdict::NotFiniteSum, type_i ? "Cor5.8(ii)" : "Thm5.6(iii)", w);
    }
    return make(Verdict::Inconclusive, "", w);
  }
  if (!d.plus.is_zero() && !ideal_equivalent(d.plus, *d.minus)) {
    w["ideal_equivalent"] = false;
    w["excess_in_defect_ideal"] = ideal_member(d.plus, *d.minus);
    w["defect_in_excess_ideal"] = ideal_member(*d.minus, d.plus);
    return make(Verdict::NotFiniteSum, "Thm5.6(iv)", w);
  }
  return make(Verdict::Inconclusive, "", w);
}

bool ideal_member(const RuleSequence& xi, const RuleSequence& eta) {
  if (xi.is_zero()) return true;
  if (eta.is_zero()) return false;
  if (xi.finite_support()) return true;
  if (eta.finite_support()) return false;
  if (xi.family() == Family::GeometricDecay) return true;
  if (eta.family() == Family::GeometricDecay) return false;
  return log_rank_member(xi, eta);
}

bool ideal_equivalent(const RuleSequence& xi, const RuleSequence& eta) {
  return ideal_member(xi, eta) && ideal_member(eta, xi);
}

DecisionReport classify_identity_plus(const RuleSequence& k1, const std::optional<RuleSequence>& k2) {
  const auto t1 = sequence_trace(k1);
  if (is_zero_seq(k2)) {
    nlohmann::json w = {{"finite_rank", k1.finite_support()}, {"trace", trace_json(t1)}};
    if (k1.finite_support() && nonneg_integer(t1.value)) {
      const auto rank = static_cast<long long>(k1.support_size());
      w["rank"] = rank;
      w["projections"] = rank + std::llround(t1.value) + 1;
      return make(Verdict::FiniteSum, "Cor5.9(i)", w);
    }
    return make(Verdict::NotFiniteSum, "Cor5.9(i)", w);
  }
  const auto t2 = sequence_trace(*k2);
  nlohmann::json w = {{"trace_k1", trace_json(t1)}, {"trace_k2", trace_json(t2)}};
  const bool equivalent = ideal_equivalent(k1, *k2);
  w["ideal_equivalent"] = equivalent;
  if (!equivalent) return make(Verdict::NotFiniteSum, "Cor5.9(ii)", w);
  if (!t1.infinite) {
    if (t2.infinite) return make(Verdict::NotFiniteSum, "Cor5.9(ii)", w);
    const double diff = t1.value - t2.value;
    w["difference"] = diff;
    if (!nonneg_integer(diff)) {
      return make(t1.exact && t2.exact ? Verdict::NotFiniteSum : Verdict::Inconclusive, "Cor5.9(ii)", w);
    }
  }
  if (k1.finite_support() && k2->finite_support()) {
    std::vector<double> head;
    for (double v : k1.values()) head.push_back(1.0 + v);
    for (double v : k2->values()) head.push_back(1.0 - v);
    const auto fr = fillmore_check(HermitianMatrix::diagonal(head));
    w["head_trace"] = fr.trace;
    w["head_rank"] = fr.rank;
    if (fr.verdict) {
      w["projections"] = *fr.m + 1;
      return make(Verdict::FiniteSum, "Thm1.1", w);
    }
    return make(Verdict::NotFiniteSum, "Thm1.1", w);
  }
  return make(Verdict::Inconclusive, "Q5.12", w);
}

Prop51Isometry prop51_isometry(const std::vector<ProjectionMatrix>& p_list, const std::vector<ProjectionMatrix>& q_list,
                               const TolerancePolicy& tol) {
  if (p_list.empty() || p_list.size() != q_list.size()) {
    throw Error(ErrorCode::PartitionInvalid, "need as many partition projections as summands");
  }
  const std::size_t n = p_list.front().dim();
  for (const auto& p : p_list)
    if (p.dim() != n) throw Error(ErrorCode::DimensionMismatch, "summands act on different spaces");
  for (const auto& q : q_list)
    if (q.dim() != n) throw Error(ErrorCode::DimensionMismatch, "partition acts on a different space");

  const double ptol = tol.proj_tol * std::sqrt(static_cast<double>(n)) * static_cast<double>(q_list.size());
  Matrix sum(n, n);
  for (std::size_t i = 0; i < q_list.size(); ++i) {
    sum += q_list[i].matrix();
    for (std::size_t j = i + 1; j < q_list.size(); ++j) {
      if ((q_list[i].matrix() * q_list[j].matrix()).frobenius_norm() > ptol) {
        throw Error(ErrorCode::PartitionInvalid, "partition projections " + std::to_string(i) + " and " +
                                                     std::to_string(j) + " are not orthogonal");
      }
    }
  }
  if (frobenius_distance(sum, Matrix::identity(n)) > ptol) {
    throw Error(ErrorCode::PartitionInvalid, "partition does not sum to the identity");
  }
  for (std::size_t j = 0; j < p_list.size(); ++j) {
    if (p_list[j].nominal_rank() != q_list[j].nominal_rank()) {
      throw Error(ErrorCode::RankMismatch, "rank p_" + std::to_string(j) + " = " +
                                               std::to_string(p_list[j].nominal_rank()) + " but rank q_" +
                                               std::to_string(j) + " = " + std::to_string(q_list[j].nominal_rank()));
    }
  }

  Matrix a_m(n, n), b(n, n);
  for (std::size_t j = 0; j < p_list.size(); ++j) {
    a_m += p_list[j].matrix();
    b += range_basis(q_list[j], tol) * range_basis(p_list[j], tol).adjoint();
  }
  const auto a = make_hermitian_unchecked(a_m);
  Prop51Isometry out;
  out.v = polar_isometry(b, tol).v;
  const Matrix vs = out.v.adjoint();
  const Matrix vav = out.v * a.matrix() * vs;
  for (const auto& q : q_list) {
    out.residual = std::max(out.residual, frobenius_distance(q.matrix() * vav * q.matrix(), q.matrix()));
  }
  const auto de = defect_excess(a, tol);
  const Matrix lhs = pinch_matrix(out.v * de.excess.matrix() * vs, q_list);
  const Matrix rhs = pinch_matrix(out.v * de.defect.matrix() * vs, q_list) +
                     pinch_matrix(Matrix::identity(n) - out.v * vs, q_list);
  out.pinching_residual = frobenius_distance(lhs, rhs);
  out.range_residual = frobenius_distance(vs * out.v, range_projection(a, tol).matrix());
  return out;
}

FiniteMatrixCert prop51_projections(const HermitianMatrix& a, const Matrix& v, const std::vector<ProjectionMatrix>& q_list,
                                    const TolerancePolicy& tol) {
  const std::size_t n = a.dim();
  if (v.rows() != n || v.cols() != n) throw Error(ErrorCode::DimensionMismatch, "isometry size differs from a");
  for (const auto& q : q_list)
    if (q.dim() != n) throw Error(ErrorCode::DimensionMismatch, "partition acts on a different space");
  const double htol = hypothesis_tol(a, tol);
  const Matrix vs = v.adjoint();
  const double range_gap = frobenius_distance(vs * v, range_projection(a, tol).matrix());
  if (range_gap > htol) {
    throw Error(ErrorCode::HypothesisFailed, "v*v = R_a fails", {{"identity", "v*v = R_a"}, {"residual", range_gap}});
  }
  const Matrix vav = v * a.matrix() * vs;
  for (std::size_t j = 0; j < q_list.size(); ++j) {
    const auto& q = q_list[j].matrix();
    const double r = frobenius_distance(q * vav * q, q);
    if (r > htol) {
      throw Error(ErrorCode::HypothesisFailed, "q_j v a v* q_j = q_j fails for j = " + std::to_string(j),
                  {{"identity", "q_j v a v* q_j = q_j"}, {"j", j}, {"residual", r}});
    }
  }
  TolerancePolicy relaxed = tol;
  relaxed.proj_tol = std::max(tol.proj_tol, htol);
  const Matrix root = psd_sqrt(a, tol).matrix();
  FiniteMatrixCert cert;
  cert.target = a;
  Matrix sum(n, n);
  for (const auto& q : q_list) {
    const Matrix w = q.matrix() * v * root;
    ProjectionMatrix p(make_hermitian_unchecked(w.adjoint() * w), relaxed);
    sum += p.matrix();
    cert.projections.push_back(std::move(p));
  }
  cert.residual = frobenius_distance(sum, a.matrix());
  return cert;
}

}  // namespace projdecomp
