#include <algorithm>
#include <array>

#include "projdecomp/blocksum.hpp"
#include "projdecomp/conditions.hpp"
#include "projdecomp/error.hpp"

namespace projdecomp {

namespace {

constexpr std::array<std::pair<Verdict, std::string_view>, 7> kVerdictNames{{
    {Verdict::FiniteSum, "FiniteSum"},
    {Verdict::NotFiniteSum, "NotFiniteSum"},
    {Verdict::StrongSum, "StrongSum"},
    {Verdict::NotStrongSum, "NotStrongSum"},
    {Verdict::PositiveCombination, "PositiveCombination"},
    {Verdict::NotPositiveCombination, "NotPositiveCombination"},
    {Verdict::Inconclusive, "Inconclusive"},
}};

DecisionReport make(Verdict v, std::string cond, nlohmann::json witness) {
  DecisionReport r;
  r.verdict = v;
  r.condition = std::move(cond);
  r.witness = std::move(witness);
  return r;
}

DecisionReport fillmore_report(const HermitianMatrix& a, const TolerancePolicy& tol, long long extra = 0) {
  if (a.dim() == 0) return make(Verdict::FiniteSum, "Thm1.1", {{"trace", 0.0}, {"rank", 0}, {"projections", extra}});
  const auto fr = fillmore_check(a, tol);
  nlohmann::json w = {{"trace", fr.trace}, {"rank", fr.rank}};
  if (fr.verdict) w["projections"] = *fr.m + extra;
  return make(fr.verdict ? Verdict::FiniteSum : Verdict::NotFiniteSum, "Thm1.1", w);
}

struct HeadSplit {
  double excess = 0.0;
  double defect = 0.0;
};

HeadSplit head_split(const HermitianMatrix& a, const TolerancePolicy& tol) {
  HeadSplit h;
  if (a.dim() == 0) return h;
  const auto de = defect_excess(a, tol);
  h.excess = de.excess.trace();
  h.defect = de.defect.trace();
  return h;
}

// II∞ with finite range: Fillmore first, then the strict trace inequality on diagonal input.
DecisionReport finite_range_ii_inf(const HermitianMatrix& head, const TolerancePolicy& tol, long long extra) {
  auto r = fillmore_report(head, tol, extra);
  if (r.verdict == Verdict::FiniteSum) return r;
  const auto h = head_split(head, tol);
  nlohmann::json w = {{"trace_excess", h.excess}, {"trace_defect", h.defect}};
  if (h.excess > h.defect + 1e-9) return make(Verdict::FiniteSum, "Cor6.6", w);
  if (h.excess < h.defect - 1e-9) return make(Verdict::NotFiniteSum, "Thm5.4(ii)", w);
  return make(Verdict::Inconclusive, "Cor6.6", w);
}

DecisionReport decide_scalar_tail(const ScalarTailOperator& s, const FactorModel& model, const DecideOptions& opt) {
  const Rational one(1);
  const auto& alpha = s.alpha();
  if (model.kind == FactorKind::TypeIII) {
    const double head_norm = s.head_dim() == 0 ? 0.0 : operator_norm(s.head(), opt.tol);
    const double norm = std::max(head_norm, alpha.to_double());
    if (norm > 1.0 + opt.tol.rank_tol) return make(Verdict::FiniteSum, "Cor4.4", {{"norm", norm}});
    const auto ss = strong_sum_classify(s, model, opt.tol);
    if (ss.verdict == Verdict::StrongSum) return make(Verdict::FiniteSum, "projection", ss.witness);
    return make(Verdict::NotFiniteSum, "Thm5.4(iii)", ss.witness);
  }
  if (model.kind != FactorKind::TypeIInf && model.kind != FactorKind::TypeIIInf) {
    throw Error(ErrorCode::ModelMismatch, "scalar_tail payload needs model I_inf, II_inf or III");
  }
  const bool type_i = model.kind == FactorKind::TypeIInf;
  if (alpha > one) {
    nlohmann::json w = {{"essential_norm", alpha.str()}};
    try {
      BlockSumOptions bo;
      bo.schedule.build_certs = false;
      bo.schedule.tol = opt.tol;
      const auto cert = finite_sum_decompose(s, 1, bo);
      w["count_bound"] = cert.count_bound();
    } catch (const Error&) {
    }
    return make(Verdict::FiniteSum, "Cor4.4", w);
  }
  if (alpha.sign() > 0 && alpha < one) {
    return make(Verdict::NotFiniteSum, "Thm5.6(i)", {{"essential_norm", alpha.str()}, {"trace_defect", "inf"}});
  }
  const long long extra = alpha == one ? 1 : 0;
  if (type_i) {
    auto r = fillmore_report(s.head(), opt.tol, extra);
    if (r.verdict == Verdict::NotFiniteSum && extra == 1) r.condition = "Thm5.4(i)";
    return r;
  }
  if (extra == 0) return finite_range_ii_inf(s.head(), opt.tol, 0);
  auto r = fillmore_report(s.head(), opt.tol, 1);
  if (r.verdict == Verdict::FiniteSum) return r;
  const auto nec = finite_sum_necessary(s, model, opt.tol);
  if (nec.verdict == Verdict::NotFiniteSum) return nec;
  return make(Verdict::Inconclusive, "", r.witness);
}

DecisionReport decide_diagonal(const DiagonalOperator& d, const FactorModel& model, const DecideOptions& opt) {
  if (model.kind != FactorKind::TypeIInf && model.kind != FactorKind::TypeIIInf) {
    throw Error(ErrorCode::ModelMismatch, "diag_sequence payload needs model I_inf or II_inf");
  }
  d.validate();
  if (d.shift == 0) {
    if (!d.plus.finite_support()) return finite_sum_necessary(d, model, opt.tol);
    const auto head = HermitianMatrix::diagonal(d.plus.values());
    if (model.kind == FactorKind::TypeIInf) return fillmore_report(head, opt.tol);
    return finite_range_ii_inf(head, opt.tol, 0);
  }
  const auto nec = finite_sum_necessary(d, model, opt.tol);
  if (nec.verdict == Verdict::NotFiniteSum) return nec;
  if (model.kind == FactorKind::TypeIInf) return classify_identity_plus(d.plus, d.minus);
  if (d.plus.finite_support() && (!d.minus || d.minus->finite_support())) {
    std::vector<double> head;
    for (double v : d.plus.values()) head.push_back(1.0 + v);
    if (d.minus)
      for (double v : d.minus->values()) head.push_back(1.0 - v);
    auto r = fillmore_report(HermitianMatrix::diagonal(head), opt.tol, 1);
    if (r.verdict == Verdict::FiniteSum) return r;
  }
  return make(Verdict::Inconclusive, "", nec.witness);
}

DecisionReport decide_atoms(const SpectralWeightList& list, const FactorModel& model, const DecideOptions& opt) {
  const auto ss = strong_sum_classify(list, model, opt.tol);
  const bool projection = std::all_of(list.atoms.begin(), list.atoms.end(), [](const SpectralAtom& at) {
    return at.gamma.is_zero() || at.gamma == Rational(1);
  });
  if (projection) return make(Verdict::FiniteSum, "projection", ss.witness);
  if (model.kind == FactorKind::TypeIII) {
    if (ss.verdict == Verdict::StrongSum) return make(Verdict::FiniteSum, "Cor4.4", ss.witness);
    return make(Verdict::NotFiniteSum, "Thm5.4(iii)", ss.witness);
  }
  if (ss.verdict == Verdict::NotStrongSum) return make(Verdict::NotFiniteSum, "Thm5.4(ii)", ss.witness);
  const Rational excess = Rational::parse(ss.witness["trace_excess"].get<std::string>());
  const Rational defect = Rational::parse(ss.witness["trace_defect"].get<std::string>());
  auto w = ss.witness;
  if (model.kind == FactorKind::TypeIIInf) {
    return make(excess > defect ? Verdict::FiniteSum : Verdict::Inconclusive, "Cor6.6", w);
  }
  Lemma61Options lo;
  lo.tol = opt.tol;
  if (excess > defect) {
    try {
      const auto cert = theorem65_decompose(list, opt.j_max, lo);
      w["projections"] = cert.projection_count();
      w["count_bound"] = cert.count_bound();
    } catch (const Error&) {
    }
    return make(Verdict::FiniteSum, "Thm6.5", w);
  }
  try {
    const auto cert = theorem65_decompose(list, opt.j_max, lo);
    w["projections"] = cert.projection_count();
    return make(Verdict::FiniteSum, "Rem6.2(ii)", w);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::InequalityViolated) throw;
  }
  return make(Verdict::Inconclusive, "", w);
}

}  // namespace

std::string_view to_string(Verdict v) {
  for (const auto& [k, name] : kVerdictNames)
    if (k == v) return name;
  return "Inconclusive";
}

Verdict verdict_from_string(std::string_view s) {
  for (const auto& [k, name] : kVerdictNames)
    if (name == s) return k;
  throw Error(ErrorCode::ParseError, "unknown verdict '" + std::string(s) + "'");
}

nlohmann::json to_json(const DecisionReport& r) {
  nlohmann::json j = {{"verdict", to_string(r.verdict)}, {"condition", r.condition}};
  if (!r.witness.is_null() && !r.witness.empty()) j["witness"] = r.witness;
  return j;
}

DecisionReport report_from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("verdict")) throw Error(ErrorCode::ParseError, "decision report needs a verdict");
  DecisionReport r;
  r.verdict = verdict_from_string(j.at("verdict").get<std::string>());
  r.condition = j.value("condition", "");
  if (j.contains("witness")) r.witness = j.at("witness");
  if (r.verdict != Verdict::Inconclusive && r.condition.empty()) {
    throw Error(ErrorCode::ParseError, "a decisive verdict needs a cited condition");
  }
  return r;
}

DecisionReport decide(const ModelOperator& a, const FactorModel& model, const DecideOptions& opt) {
  opt.tol.validate();
  if (const auto* m = std::get_if<HermitianMatrix>(&a)) {
    if (!model.type_i()) throw Error(ErrorCode::ModelMismatch, "matrix payload needs a type I model");
    if (model.kind == FactorKind::TypeIFinite && model.n != 0 && model.n != m->dim()) {
      throw Error(ErrorCode::ModelMismatch, "matrix size differs from the factor size");
    }
    return fillmore_report(*m, opt.tol);
  }
  if (const auto* s = std::get_if<ScalarTailOperator>(&a)) return decide_scalar_tail(*s, model, opt);
  if (const auto* d = std::get_if<DiagonalOperator>(&a)) return decide_diagonal(*d, model, opt);
  const auto& list = std::get<SpectralWeightList>(a);
  if (model.type_i()) throw Error(ErrorCode::ModelMismatch, "spectral_list payload needs a type II or III model");
  return decide_atoms(list, model, opt);
}

}  // namespace projdecomp
