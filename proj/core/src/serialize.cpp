#include "projdecomp/serialize.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <limits>

namespace projdecomp {

namespace {

constexpr std::array<std::pair<ErrorCode, std::string_view>, 30> kErrorNames{{
    {ErrorCode::NonHermitianInput, "NonHermitianInput"},
    {ErrorCode::NotPositive, "NotPositive"},
    {ErrorCode::NotAProjection, "NotAProjection"},
    {ErrorCode::DimensionMismatch, "DimensionMismatch"},
    {ErrorCode::BadPartition, "BadPartition"},
    {ErrorCode::CriterionFailed, "CriterionFailed"},
    {ErrorCode::MajorizationFailure, "MajorizationFailure"},
    {ErrorCode::BadTrace, "BadTrace"},
    {ErrorCode::ZeroB, "ZeroB"},
    {ErrorCode::BadIsometry, "BadIsometry"},
    {ErrorCode::NotLocallyInvertible, "NotLocallyInvertible"},
    {ErrorCode::BackendContractViolated, "BackendContractViolated"},
    {ErrorCode::IndexOutOfRange, "IndexOutOfRange"},
    {ErrorCode::BadRange, "BadRange"},
    {ErrorCode::AdjacencyViolated, "AdjacencyViolated"},
    {ErrorCode::EssentialNormTooSmall, "EssentialNormTooSmall"},
    {ErrorCode::BlockTooLarge, "BlockTooLarge"},
    {ErrorCode::VerificationFailed, "VerificationFailed"},
    {ErrorCode::InequalityViolated, "InequalityViolated"},
    {ErrorCode::InternalBoundFailure, "InternalBoundFailure"},
    {ErrorCode::SumMismatch, "SumMismatch"},
    {ErrorCode::DenominatorTooSmall, "DenominatorTooSmall"},
    {ErrorCode::ModelMismatch, "ModelMismatch"},
    {ErrorCode::UnsupportedFamilyPair, "UnsupportedFamilyPair"},
    {ErrorCode::RankMismatch, "RankMismatch"},
    {ErrorCode::PartitionInvalid, "PartitionInvalid"},
    {ErrorCode::HypothesisFailed, "HypothesisFailed"},
    {ErrorCode::Overflow, "Overflow"},
    {ErrorCode::ParseError, "ParseError"},
    {ErrorCode::InvalidArgument, "InvalidArgument"},
}};

[[noreturn]] void parse_fail(const std::string& what) { throw Error(ErrorCode::ParseError, what); }

const json& field(const json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) parse_fail(std::string("missing field '") + key + "'");
  return j.at(key);
}

template <class T>
T get(const json& j, const char* key) {
  try {
    return field(j, key).get<T>();
  } catch (const json::exception&) {
    parse_fail(std::string("field '") + key + "' has the wrong type");
  }
}

double number(const json& j, const char* what) {
  if (!j.is_number()) parse_fail(std::string(what) + " must be a number");
  return j.get<double>();
}

json rationals(const std::vector<Rational>& v) {
  json a = json::array();
  for (const auto& r : v) a.push_back(to_json(r));
  return a;
}

std::vector<Rational> rationals_from(const json& j) {
  if (!j.is_array()) parse_fail("expected an array of rationals");
  std::vector<Rational> out;
  for (const auto& x : j) out.push_back(rational_from_json(x));
  return out;
}

template <class T>
json opt_json(const std::optional<T>& v) {
  return v ? to_json(*v) : json(nullptr);
}

std::optional<Rational> opt_rational(const json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return rational_from_json(j.at(key));
}

json rows_json(const Matrix& m, bool imag) {
  json rows = json::array();
  for (std::size_t i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (std::size_t k = 0; k < m.cols(); ++k) row.push_back(imag ? m(i, k).imag() : m(i, k).real());
    rows.push_back(std::move(row));
  }
  return rows;
}

json vector_json(const std::vector<Complex>& v) {
  json re = json::array(), im = json::array();
  bool complex = false;
  for (const auto& x : v) {
    re.push_back(x.real());
    im.push_back(x.imag());
    complex = complex || x.imag() != 0.0;
  }
  json out = {{"re", re}};
  if (complex) out["im"] = im;
  return out;
}

std::vector<Complex> vector_from(const json& j, std::size_t n) {
  const auto& re = field(j, "re");
  if (!re.is_array() || re.size() != n) parse_fail("vector length mismatch");
  std::vector<Complex> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = number(re[i], "vector entry");
  if (j.contains("im")) {
    const auto& im = j.at("im");
    if (!im.is_array() || im.size() != n) parse_fail("vector length mismatch");
    for (std::size_t i = 0; i < n; ++i) v[i] += Complex(0.0, number(im[i], "vector entry"));
  }
  return v;
}

json assembly_json(const ParityAssembly& a) {
  auto side = [](const std::vector<std::vector<std::pair<std::size_t, std::size_t>>>& streams) {
    json s = json::array();
    for (const auto& stream : streams) {
      json members = json::array();
      for (const auto& [b, p] : stream) members.push_back({b, p});
      s.push_back(std::move(members));
    }
    return s;
  };
  return {{"odd", side(a.odd)}, {"even", side(a.even)}};
}

ParityAssembly assembly_from(const json& j) {
  auto side = [](const json& s) {
    std::vector<std::vector<std::pair<std::size_t, std::size_t>>> out;
    if (!s.is_array()) parse_fail("assembly streams must be arrays");
    for (const auto& stream : s) {
      auto& members = out.emplace_back();
      for (const auto& m : stream) {
        if (!m.is_array() || m.size() != 2) parse_fail("assembly members are [block, projection] pairs");
        members.emplace_back(m[0].get<std::size_t>(), m[1].get<std::size_t>());
      }
    }
    return out;
  };
  ParityAssembly a;
  a.odd = side(field(j, "odd"));
  a.even = side(field(j, "even"));
  return a;
}

json interval_json(const Interval& iv) { return json::array({to_json(iv.lo), to_json(iv.hi)}); }

Interval interval_from(const json& j) {
  if (!j.is_array() || j.size() != 2) parse_fail("intervals are [lo, hi] pairs");
  return {rational_from_json(j[0]), rational_from_json(j[1])};
}

json state_json(const II1State& s) {
  return {{"lambda", to_json(s.lambda)}, {"mu", to_json(s.mu)}, {"e", interval_json(s.e)}, {"f", interval_json(s.f)}};
}

II1State state_from(const json& j) {
  return {rational_from_json(field(j, "lambda")), rational_from_json(field(j, "mu")), interval_from(field(j, "e")),
          interval_from(field(j, "f"))};
}

json ii1_block_json(const II1Block& b) {
  json slots = json::array();
  for (const auto& s : b.slots) slots.push_back(interval_json(s));
  return {{"slots", slots}, {"diagonal", rationals(b.diagonal)}, {"cert", to_json(b.cert)}};
}

II1Block ii1_block_from(const json& j) {
  II1Block b;
  for (const auto& s : field(j, "slots")) b.slots.push_back(interval_from(s));
  b.diagonal = rationals_from(field(j, "diagonal"));
  b.cert = finite_cert_from_json(field(j, "cert"));
  return b;
}

json block_record_json(const BlockScheduleRecord& b) {
  json j = {{"j", b.j},
            {"n_prev", b.n_prev},
            {"n_j", b.n_j},
            {"beta_prev", to_json(b.beta_prev)},
            {"beta_j", to_json(b.beta_j)},
            {"block_trace", b.block_trace},
            {"block_rank", b.block_rank},
            {"diagonal", rationals(b.diagonal)}};
  j["block_cert"] = b.block_cert ? to_json(*b.block_cert) : json(nullptr);
  return j;
}

BlockScheduleRecord block_record_from(const json& j) {
  BlockScheduleRecord b;
  b.j = get<int>(j, "j");
  b.n_prev = get<std::int64_t>(j, "n_prev");
  b.n_j = get<std::int64_t>(j, "n_j");
  b.beta_prev = rational_from_json(field(j, "beta_prev"));
  b.beta_j = rational_from_json(field(j, "beta_j"));
  b.block_trace = get<std::int64_t>(j, "block_trace");
  b.block_rank = get<std::int64_t>(j, "block_rank");
  b.diagonal = rationals_from(field(j, "diagonal"));
  if (j.contains("block_cert") && !j.at("block_cert").is_null()) b.block_cert = finite_cert_from_json(j.at("block_cert"));
  return b;
}

json plan_json(const Theorem65Plan& p) {
  json pieces = json::array();
  for (const auto& m : p.matching.pieces) pieces.push_back({{"i", m.i}, {"j", m.j}, {"value", to_json(m.value)}});
  json pairs = json::array();
  for (const auto& r : p.pairs) {
    pairs.push_back({{"e_atom", r.e_atom},
                     {"f_atom", r.f_atom ? json(*r.f_atom) : json(nullptr)},
                     {"mu", to_json(r.mu)},
                     {"lambda", to_json(r.lambda)},
                     {"piece", to_json(r.piece)},
                     {"tau_e", to_json(r.tau_e)},
                     {"tau_f", to_json(r.tau_f)}});
  }
  return {{"gap", to_json(p.gap)},
          {"rho", to_json(p.rho)},
          {"sigma", to_json(p.sigma)},
          {"ratio", to_json(p.ratio)},
          {"h", p.h},
          {"norm", to_json(p.norm)},
          {"excess_atoms", p.excess_atoms},
          {"defect_atoms", p.defect_atoms},
          {"unit_atoms", p.unit_atoms},
          {"xi", rationals(p.xi)},
          {"eta", rationals(p.eta)},
          {"matching", pieces},
          {"pairs", pairs},
          {"equality_shortcut", p.equality_shortcut}};
}

Theorem65Plan plan_from(const json& j) {
  Theorem65Plan p;
  p.gap = rational_from_json(field(j, "gap"));
  p.rho = rational_from_json(field(j, "rho"));
  p.sigma = rational_from_json(field(j, "sigma"));
  p.ratio = rational_from_json(field(j, "ratio"));
  p.h = get<std::int64_t>(j, "h");
  p.norm = rational_from_json(field(j, "norm"));
  p.excess_atoms = get<std::vector<std::size_t>>(j, "excess_atoms");
  p.defect_atoms = get<std::vector<std::size_t>>(j, "defect_atoms");
  p.unit_atoms = get<std::vector<std::size_t>>(j, "unit_atoms");
  p.xi = rationals_from(field(j, "xi"));
  p.eta = rationals_from(field(j, "eta"));
  for (const auto& m : field(j, "matching")) {
    p.matching.pieces.push_back({get<std::size_t>(m, "i"), get<std::size_t>(m, "j"), rational_from_json(field(m, "value"))});
  }
  for (const auto& r : field(j, "pairs")) {
    RebalancedPair rp;
    rp.e_atom = get<std::size_t>(r, "e_atom");
    if (r.contains("f_atom") && !r.at("f_atom").is_null()) rp.f_atom = r.at("f_atom").get<std::size_t>();
    rp.mu = rational_from_json(field(r, "mu"));
    rp.lambda = rational_from_json(field(r, "lambda"));
    rp.piece = rational_from_json(field(r, "piece"));
    rp.tau_e = rational_from_json(field(r, "tau_e"));
    rp.tau_f = rational_from_json(field(r, "tau_f"));
    p.pairs.push_back(std::move(rp));
  }
  p.equality_shortcut = get<bool>(j, "equality_shortcut");
  return p;
}

json step_json(const II1StepRecord& s) {
  return {{"j", s.j},
          {"branch", to_string(s.branch)},
          {"state", state_json(s.state)},
          {"delta", opt_json(s.delta)},
          {"gamma", opt_json(s.gamma)},
          {"k", s.k},
          {"n", s.n},
          {"m", s.m},
          {"alpha", opt_json(s.alpha)},
          {"block_trace", s.block_trace},
          {"block_rank", s.block_rank},
          {"block", ii1_block_json(s.block)},
          {"next", s.next ? state_json(*s.next) : json(nullptr)}};
}

II1StepRecord step_from(const json& j) {
  II1StepRecord s;
  s.j = get<int>(j, "j");
  s.branch = branch_from_string(get<std::string>(j, "branch"));
  s.state = state_from(field(j, "state"));
  s.delta = opt_rational(j, "delta");
  s.gamma = opt_rational(j, "gamma");
  s.k = get<std::int64_t>(j, "k");
  s.n = get<std::int64_t>(j, "n");
  s.m = get<std::int64_t>(j, "m");
  s.alpha = opt_rational(j, "alpha");
  s.block_trace = get<std::int64_t>(j, "block_trace");
  s.block_rank = get<std::int64_t>(j, "block_rank");
  s.block = ii1_block_from(field(j, "block"));
  if (j.contains("next") && !j.at("next").is_null()) s.next = state_from(j.at("next"));
  return s;
}

json run_json(const Lemma61Cert& c) {
  json steps = json::array();
  for (const auto& s : c.steps) steps.push_back(step_json(s));
  return {{"lambda", to_json(c.lambda)},
          {"mu", to_json(c.mu)},
          {"tau_f", to_json(c.tau_f)},
          {"tau_e", to_json(c.tau_e)},
          {"offset", to_json(c.offset)},
          {"peeled", c.peeled ? ii1_block_json(*c.peeled) : json(nullptr)},
          {"steps", steps},
          {"j_o", c.j_o ? json(*c.j_o) : json(nullptr)},
          {"terminated", c.terminated},
          {"remainder", c.remainder ? state_json(*c.remainder) : json(nullptr)},
          {"assembly", assembly_json(c.assembly)},
          {"tail_decay", to_json(c.tail_decay)},
          {"projection_count", c.projection_count()}};
}

Lemma61Cert run_from(const json& j) {
  Lemma61Cert c;
  c.lambda = rational_from_json(field(j, "lambda"));
  c.mu = rational_from_json(field(j, "mu"));
  c.tau_f = rational_from_json(field(j, "tau_f"));
  c.tau_e = rational_from_json(field(j, "tau_e"));
  c.offset = rational_from_json(field(j, "offset"));
  if (j.contains("peeled") && !j.at("peeled").is_null()) c.peeled = ii1_block_from(j.at("peeled"));
  for (const auto& s : field(j, "steps")) c.steps.push_back(step_from(s));
  if (j.contains("j_o") && !j.at("j_o").is_null()) c.j_o = j.at("j_o").get<int>();
  c.terminated = get<bool>(j, "terminated");
  if (j.contains("remainder") && !j.at("remainder").is_null()) c.remainder = state_from(j.at("remainder"));
  c.assembly = assembly_from(field(j, "assembly"));
  c.tail_decay = rational_from_json(field(j, "tail_decay"));
  return c;
}

json scalar_term_json(const ScalarTerm& t) {
  return {{"beta", to_json(t.beta)},
          {"p", t.p ? to_json(*t.p) : json(nullptr)},
          {"rank", t.rank},
          {"family", t.family},
          {"origin", t.origin}};
}

ScalarTerm scalar_term_from(const json& j) {
  ScalarTerm t;
  t.beta = rational_from_json(field(j, "beta"));
  if (j.contains("p") && !j.at("p").is_null()) t.p = projection_from_json(j.at("p"));
  t.rank = get<int>(j, "rank");
  t.family = get<std::size_t>(j, "family");
  t.origin = get<std::string>(j, "origin");
  return t;
}

json projections_json(const std::vector<ProjectionMatrix>& ps) {
  json a = json::array();
  for (const auto& p : ps) a.push_back(to_json(p));
  return a;
}

std::vector<ProjectionMatrix> projections_from(const json& j) {
  if (!j.is_array()) parse_fail("projections must be an array");
  std::vector<ProjectionMatrix> out;
  for (const auto& p : j) out.push_back(projection_from_json(p));
  return out;
}

}  // namespace

std::string_view to_string(ErrorCode code) {
  for (const auto& [c, name] : kErrorNames)
    if (c == code) return name;
  return "Unknown";
}

json to_json(const Rational& r) { return {{"num", r.num_str()}, {"den", r.den_str()}}; }

Rational rational_from_json(const json& j) {
  try {
    if (j.is_object()) return Rational::from_strings(get<std::string>(j, "num"), get<std::string>(j, "den"));
    if (j.is_string()) return Rational::parse(j.get<std::string>());
    if (j.is_number_integer()) return Rational(j.get<long long>());
    if (j.is_number()) {
      const double v = j.get<double>();
      if (!std::isfinite(v)) parse_fail("non-finite number");
      std::array<char, 64> buf{};
      const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
      return Rational::parse(std::string(buf.data(), res.ptr));
    }
  } catch (const Error& e) {
    if (e.code() == ErrorCode::ParseError) throw;
    parse_fail(std::string("bad rational: ") + e.what());
  }
  parse_fail("expected a rational (object, string or number)");
}

json to_json(const Matrix& m) {
  json j;
  if (m.square()) {
    j["dim"] = m.rows();
  } else {
    j["rows"] = m.rows();
    j["cols"] = m.cols();
  }
  j["re"] = rows_json(m, false);
  if (m.max_imag() != 0.0) j["im"] = rows_json(m, true);
  return j;
}

Matrix matrix_from_json(const json& j) {
  const json& re = j.is_array() ? j : field(j, "re");
  if (!re.is_array()) parse_fail("matrix rows must be an array");
  const std::size_t rows = re.size();
  const std::size_t cols = rows == 0 ? 0 : re[0].size();
  if (j.is_object()) {
    if (j.contains("dim") && (get<std::size_t>(j, "dim") != rows || cols != rows)) parse_fail("matrix 'dim' disagrees with its entries");
    if (j.contains("rows") && get<std::size_t>(j, "rows") != rows) parse_fail("matrix 'rows' disagrees with its entries");
    if (j.contains("cols") && get<std::size_t>(j, "cols") != cols) parse_fail("matrix 'cols' disagrees with its entries");
  }
  Matrix m(rows, cols);
  for (std::size_t i = 0; i < rows; ++i) {
    if (!re[i].is_array() || re[i].size() != cols) parse_fail("matrix rows have unequal lengths");
    for (std::size_t k = 0; k < cols; ++k) m(i, k) = number(re[i][k], "matrix entry");
  }
  if (j.is_object() && j.contains("im")) {
    const auto& im = j.at("im");
    if (!im.is_array() || im.size() != rows) parse_fail("imaginary part has the wrong shape");
    for (std::size_t i = 0; i < rows; ++i) {
      if (!im[i].is_array() || im[i].size() != cols) parse_fail("imaginary part has the wrong shape");
      for (std::size_t k = 0; k < cols; ++k) m(i, k) += Complex(0.0, number(im[i][k], "matrix entry"));
    }
  }
  return m;
}

json to_json(const HermitianMatrix& m) { return to_json(m.matrix()); }

HermitianMatrix hermitian_from_json(const json& j, bool checked, const TolerancePolicy& tol) {
  auto m = matrix_from_json(j);
  if (!m.square()) parse_fail("matrix must be square");
  if (checked) return HermitianMatrix(m, tol);
  return make_hermitian_unchecked(std::move(m));
}

json to_json(const ProjectionMatrix& p) {
  const Matrix& m = p.matrix();
  if (p.nominal_rank() != 1) return {{"dim", p.dim()}, {"matrix", to_json(m)}};
  // pivot: first near-maximal diagonal entry
  double top = 0.0;
  for (std::size_t i = 0; i < p.dim(); ++i) top = std::max(top, m(i, i).real());
  std::size_t k = 0;
  while (k + 1 < p.dim() && m(k, k).real() < top - 1e-9) ++k;
  const double s = std::sqrt(std::max(m(k, k).real(), std::numeric_limits<double>::min()));
  std::vector<Complex> v(p.dim());
  for (std::size_t i = 0; i < p.dim(); ++i) v[i] = m(i, k) / s;
  return {{"dim", p.dim()}, {"vector", vector_json(v)}};
}

ProjectionMatrix projection_from_json(const json& j) {
  TolerancePolicy loose;
  loose.proj_tol = std::numeric_limits<double>::infinity();
  if (j.contains("vector")) {
    const auto v = vector_from(j.at("vector"), get<std::size_t>(j, "dim"));
    return ProjectionMatrix(make_hermitian_unchecked(outer(v, v)), loose);
  }
  auto m = matrix_from_json(field(j, "matrix"));
  if (!m.square()) parse_fail("projection must be square");
  return ProjectionMatrix(make_hermitian_unchecked(std::move(m)), loose);
}

json to_json(const RuleSequence& s) {
  switch (s.family()) {
    case Family::PowerDecay: return {{"family", "power"}, {"c", s.c()}, {"p", s.p()}};
    case Family::GeometricDecay: return {{"family", "geometric"}, {"c", s.c()}, {"r", s.r()}};
    case Family::FiniteSupport: return {{"family", "finite"}, {"values", s.values()}};
    case Family::ScaledHarmonicLog: return {{"family", "harmonic_log"}, {"c", s.c()}, {"p", s.p()}, {"q", s.q()}};
  }
  return nullptr;
}

RuleSequence sequence_from_json(const json& j) {
  if (j.is_array()) return RuleSequence::finite(j.get<std::vector<double>>());
  const auto fam = get<std::string>(j, "family");
  auto num = [&](const char* k) { return number(field(j, k), k); };
  if (fam == "power") return RuleSequence::power(num("c"), num("p"));
  if (fam == "geometric") return RuleSequence::geometric(num("c"), num("r"));
  if (fam == "finite") return RuleSequence::finite(get<std::vector<double>>(j, "values"));
  if (fam == "harmonic_log") return RuleSequence::harmonic_log(num("c"), num("p"), j.contains("q") ? num("q") : 0.0);
  parse_fail("unknown sequence family '" + fam + "'");
}

FactorModel default_model(const Payload& p) {
  if (p.model) return *p.model;
  if (p.kind == "matrix") return FactorModel::type_i_finite(0);
  if (p.kind == "spectral_list" || p.kind == "ii1_pair") return FactorModel::type_ii1();
  return FactorModel::type_i_inf();
}

Payload payload_from_json(const json& j, const TolerancePolicy& tol) {
  if (!j.is_object()) parse_fail("operator payload must be a JSON object");
  Payload out;
  out.kind = get<std::string>(j, "kind");
  if (j.contains("model")) out.model = FactorModel::parse(get<std::string>(j, "model"));
  if (out.kind == "matrix") {
    out.op = hermitian_from_json(j, true, tol);
  } else if (out.kind == "scalar_tail") {
    HermitianMatrix head;
    if (j.contains("head")) {
      const auto& h = j.at("head");
      if (h.is_array() && !h.empty() && h[0].is_number()) {
        head = HermitianMatrix::diagonal(h.get<std::vector<double>>());
      } else {
        head = hermitian_from_json(h, true, tol);
      }
    }
    out.op = ScalarTailOperator(head, rational_from_json(field(j, "alpha")), tol);
  } else if (out.kind == "diag_sequence") {
    DiagonalOperator d;
    d.shift = j.value("shift", 0);
    d.plus = sequence_from_json(field(j, "plus"));
    if (j.contains("minus") && !j.at("minus").is_null()) d.minus = sequence_from_json(j.at("minus"));
    d.validate();
    out.op = d;
  } else if (out.kind == "spectral_list") {
    out.op = atoms_from_json(j);
  } else if (out.kind == "ii1_pair") {
    II1Pair p{rational_from_json(field(j, "lambda")), rational_from_json(field(j, "mu")),
              rational_from_json(field(j, "tau_f")), rational_from_json(field(j, "tau_e"))};
    SpectralWeightList list;
    if (p.tau_f.sign() > 0) list.atoms.push_back({Rational(1) - p.lambda, p.tau_f});
    if (p.tau_e.sign() > 0) list.atoms.push_back({Rational(1) + p.mu, p.tau_e});
    out.op = list;
    out.pair = p;
  } else {
    parse_fail("unknown payload kind '" + out.kind + "'");
  }
  return out;
}

json to_json(const SpectralWeightList& a) {
  json atoms = json::array();
  for (const auto& at : a.atoms) atoms.push_back({{"gamma", to_json(at.gamma)}, {"weight", to_json(at.weight)}});
  return {{"kind", "spectral_list"}, {"atoms", atoms}};
}

SpectralWeightList atoms_from_json(const json& j) {
  const auto& atoms = field(j, "atoms");
  if (!atoms.is_array()) parse_fail("'atoms' must be an array");
  SpectralWeightList list;
  for (const auto& a : atoms) list.atoms.push_back({rational_from_json(field(a, "gamma")), rational_from_json(field(a, "weight"))});
  return list;
}

json to_json(const ModelOperator& a) {
  if (const auto* m = std::get_if<HermitianMatrix>(&a)) {
    auto j = to_json(*m);
    j["kind"] = "matrix";
    return j;
  }
  if (const auto* s = std::get_if<ScalarTailOperator>(&a)) {
    return {{"kind", "scalar_tail"}, {"head", to_json(s->head())}, {"alpha", to_json(s->alpha())}};
  }
  if (const auto* d = std::get_if<DiagonalOperator>(&a)) {
    json j = {{"kind", "diag_sequence"}, {"shift", d->shift}, {"plus", to_json(d->plus)}};
    if (d->minus) j["minus"] = to_json(*d->minus);
    return j;
  }
  return to_json(std::get<SpectralWeightList>(a));
}

json to_json(const FiniteMatrixCert& c) {
  return {{"kind", "finite_matrix"},
          {"target", to_json(c.target)},
          {"projections", projections_json(c.projections)},
          {"residual", c.residual}};
}

FiniteMatrixCert finite_cert_from_json(const json& j) {
  FiniteMatrixCert c;
  c.target = hermitian_from_json(field(j, "target"), false);
  c.projections = projections_from(field(j, "projections"));
  c.residual = j.contains("residual") ? number(j.at("residual"), "residual") : 0.0;
  return c;
}

json to_json(const BlockStreamCert& c) {
  const auto& plan = c.plan;
  json gadgets = json::array();
  for (const auto& g : plan.gadget_terms) {
    gadgets.push_back({{"coefficient", g.coefficient}, {"piece", g.piece}, {"minus", g.minus}, {"q", to_json(g.q)}});
  }
  const auto& rc = plan.residual_combination;
  json residual = {{"target", to_json(rc.target)},
                   {"coefficients", rc.coefficients},
                   {"projections", projections_json(rc.projections)},
                   {"residual", rc.residual},
                   {"count_bound", rc.count_bound}};
  json terms = json::array();
  for (const auto& t : plan.terms) terms.push_back(scalar_term_json(t));
  json term_certs = json::array();
  for (std::size_t i = 0; i < c.terms.size(); ++i) {
    const auto& tc = c.terms[i];
    json blocks = json::array();
    for (const auto& b : tc.blocks) blocks.push_back(block_record_json(b));
    term_certs.push_back({{"term", i},
                          {"beta_reduced", to_json(tc.beta_reduced)},
                          {"alpha_reduced", to_json(tc.alpha_reduced)},
                          {"peeled_beta", tc.peeled_beta},
                          {"peeled_alpha", tc.peeled_alpha},
                          {"bound_n", tc.bound_n},
                          {"blocks", blocks},
                          {"assembly", assembly_json(tc.assembly)},
                          {"projection_count", tc.projection_count()}});
  }
  return {{"kind", "block_stream"},
          {"target", {{"head", to_json(c.target.head())}, {"alpha", to_json(c.target.alpha())}}},
          {"j_max", c.j_max},
          {"plan",
           {{"head_dim", plan.head_dim},
            {"reserved", plan.reserved},
            {"pieces", plan.pieces},
            {"head_norm", plan.head_norm},
            {"gadget_terms", gadgets},
            {"residual_combination", residual},
            {"terms", terms}}},
          {"terms", term_certs},
          {"total_count", c.total_count()},
          {"count_bound", c.count_bound()}};
}

BlockStreamCert block_stream_from_json(const json& j) {
  BlockStreamCert c;
  const auto& target = field(j, "target");
  c.target = ScalarTailOperator(hermitian_from_json(field(target, "head"), false), rational_from_json(field(target, "alpha")));
  c.j_max = get<int>(j, "j_max");
  const auto& plan = field(j, "plan");
  c.plan.head_dim = get<std::size_t>(plan, "head_dim");
  c.plan.reserved = get<std::size_t>(plan, "reserved");
  c.plan.pieces = get<std::size_t>(plan, "pieces");
  c.plan.head_norm = number(field(plan, "head_norm"), "head_norm");
  for (const auto& g : field(plan, "gadget_terms")) {
    GadgetTerm gt;
    gt.coefficient = number(field(g, "coefficient"), "coefficient");
    gt.piece = get<std::size_t>(g, "piece");
    gt.minus = get<bool>(g, "minus");
    gt.q = projection_from_json(field(g, "q"));
    c.plan.gadget_terms.push_back(std::move(gt));
  }
  const auto& rc = field(plan, "residual_combination");
  auto& pc = c.plan.residual_combination;
  pc.target = hermitian_from_json(field(rc, "target"), false);
  pc.coefficients = get<std::vector<double>>(rc, "coefficients");
  pc.projections = projections_from(field(rc, "projections"));
  pc.residual = number(field(rc, "residual"), "residual");
  pc.count_bound = get<long long>(rc, "count_bound");
  for (const auto& t : field(plan, "terms")) c.plan.terms.push_back(scalar_term_from(t));
  for (const auto& t : field(j, "terms")) {
    TermCert tc;
    const auto idx = get<std::size_t>(t, "term");
    if (idx >= c.plan.terms.size()) parse_fail("term index out of range");
    tc.term = c.plan.terms[idx];
    tc.beta_reduced = rational_from_json(field(t, "beta_reduced"));
    tc.alpha_reduced = rational_from_json(field(t, "alpha_reduced"));
    tc.peeled_beta = get<std::int64_t>(t, "peeled_beta");
    tc.peeled_alpha = get<std::int64_t>(t, "peeled_alpha");
    tc.bound_n = get<std::int64_t>(t, "bound_n");
    for (const auto& b : field(t, "blocks")) tc.blocks.push_back(block_record_from(b));
    tc.assembly = assembly_from(field(t, "assembly"));
    c.terms.push_back(std::move(tc));
  }
  return c;
}

json to_json(const II1Cert& c) {
  json runs = json::array();
  for (const auto& r : c.runs) runs.push_back(run_json(r));
  json units = json::array();
  for (const auto& u : c.unit_projections) units.push_back(interval_json(u));
  return {{"kind", "ii1"},
          {"variant", c.kind},
          {"atoms", c.atoms ? to_json(*c.atoms)["atoms"] : json(nullptr)},
          {"plan", c.plan ? plan_json(*c.plan) : json(nullptr)},
          {"runs", runs},
          {"unit_projections", units},
          {"projection_count", c.projection_count()},
          {"count_bound", c.count_bound()}};
}

II1Cert ii1_cert_from_json(const json& j) {
  II1Cert c;
  c.kind = get<std::string>(j, "variant");
  if (c.kind != "lemma61" && c.kind != "theorem65") parse_fail("unknown ii1 variant '" + c.kind + "'");
  if (j.contains("atoms") && !j.at("atoms").is_null()) c.atoms = atoms_from_json(j);
  if (j.contains("plan") && !j.at("plan").is_null()) c.plan = plan_from(j.at("plan"));
  for (const auto& r : field(j, "runs")) c.runs.push_back(run_from(r));
  for (const auto& u : field(j, "unit_projections")) c.unit_projections.push_back(interval_from(u));
  return c;
}

json to_json(const TruncationReport& r) {
  return {{"ok", r.exact_ok},
          {"failures", r.failures},
          {"residual", r.residual},
          {"max_idempotency", r.max_idempotency},
          {"dim", r.dim},
          {"covered", r.covered},
          {"projections", r.projections},
          {"numeric_checked", r.numeric_checked}};
}

json to_json(const InvariantReport& r) {
  json failures = json::array();
  for (const auto& f : r.failures) failures.push_back({{"run", f.run}, {"j", f.j}, {"eq", f.eq}, {"detail", f.detail}});
  return {{"ok", r.ok()}, {"steps_checked", r.steps_checked}, {"failures", failures}};
}

json to_json(const MaterializeReport& r) {
  json blocks = json::array();
  for (const auto& b : r.blocks) {
    blocks.push_back({{"run", b.run},
                      {"j", b.j},
                      {"slot_rank", b.slot_rank},
                      {"projections", b.cert.projections.size()},
                      {"block_residual", b.cert.residual},
                      {"residual", b.residual}});
  }
  return {{"denominator", r.denominator},
          {"blocks", blocks},
          {"steps_used", r.steps_used},
          {"max_block_residual", r.max_block_residual},
          {"streams_orthogonal", r.streams_orthogonal},
          {"dense_checked", r.dense_checked},
          {"dense_residual", r.dense_residual},
          {"max_idempotency", r.max_idempotency},
          {"stream_count", r.stream_count},
          {"remainder_trace", to_json(r.remainder_trace)},
          {"failures", r.failures}};
}

json to_json(const MaterializedTruncation& m, bool include_matrices) {
  json j = {{"dim", m.dim},
            {"covered", m.covered},
            {"blocks_used", m.blocks_used},
            {"projection_count", m.projections.size()},
            {"residual", m.residual},
            {"max_idempotency", m.max_idempotency}};
  if (include_matrices) {
    json ps = json::array();
    for (const auto& p : m.projections) ps.push_back(to_json(p));
    j["projections"] = ps;
  }
  return j;
}

json to_json(const Prop51Isometry& p) {
  return {{"v", to_json(p.v)},
          {"residual", p.residual},
          {"pinching_residual", p.pinching_residual},
          {"range_residual", p.range_residual}};
}

json error_json(const Error& e) {
  json j = {{"error", to_string(e.code())}, {"message", e.what()}};
  if (!e.detail().is_null()) j["detail"] = e.detail();
  return j;
}

}  // namespace projdecomp
