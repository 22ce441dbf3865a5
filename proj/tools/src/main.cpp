#include <fstream>
#include <iostream>
#include <iterator>
#include <sstream>

#include "CLI11.hpp"
#include "projdecomp/serialize.hpp"

using namespace projdecomp;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitVerify = 1;
constexpr int kExitParse = 2;

struct Options {
  std::string command;
  std::string input = "-";
  std::string output;
  std::optional<std::string> model;
  std::optional<double> tol;
  std::optional<int> jmax;
  std::optional<std::int64_t> denominator;
};

struct Outcome {
  json doc;
  int code = kExitOk;
};

json read_input(const std::string& path) {
  std::string text;
  if (path == "-") {
    text.assign(std::istreambuf_iterator<char>(std::cin), std::istreambuf_iterator<char>());
  } else {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::ParseError, "cannot open input '" + path + "'");
    text.assign(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
  }
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::ParseError, std::string("malformed JSON: ") + e.what());
  }
}

TolerancePolicy tolerances(const Options& o) {
  TolerancePolicy t;
  if (o.tol) t.sym_tol = t.proj_tol = t.eig_tol = *o.tol;
  t.validate();
  return t;
}

bool is_cert(const json& j) {
  const auto kind = j.value("kind", std::string());
  return kind == "finite_matrix" || kind == "block_stream" || kind == "ii1";
}

FactorModel resolve_model(const Options& o, const Payload& p) {
  return o.model ? FactorModel::parse(*o.model) : default_model(p);
}

json decompose_payload(const Options& o, const Payload& p, const TolerancePolicy& tol) {
  const auto model = resolve_model(o, p);
  if (p.pair) {
    Lemma61Options lo;
    lo.tol = tol;
    return to_json(lemma61_decompose(p.pair->lambda, p.pair->mu, p.pair->tau_f, p.pair->tau_e, o.jmax.value_or(20), lo));
  }
  if (const auto* m = std::get_if<HermitianMatrix>(&p.op)) {
    if (!model.type_i()) throw Error(ErrorCode::ModelMismatch, "matrix payload needs a type I model");
    return to_json(fillmore_decompose(*m, tol));
  }
  if (const auto* s = std::get_if<ScalarTailOperator>(&p.op)) {
    if (model.kind != FactorKind::TypeIInf) throw Error(ErrorCode::ModelMismatch, "block streams are built in model I_inf");
    BlockSumOptions bo;
    bo.schedule.tol = tol;
    return to_json(finite_sum_decompose(*s, o.jmax.value_or(32), bo));
  }
  if (const auto* l = std::get_if<SpectralWeightList>(&p.op)) {
    if (model.kind != FactorKind::TypeII1) throw Error(ErrorCode::ModelMismatch, "atom lists are decomposed in model II_1");
    Lemma61Options lo;
    lo.tol = tol;
    return to_json(theorem65_decompose(*l, o.jmax.value_or(20), lo));
  }
  throw Error(ErrorCode::InvalidArgument, "no decomposer for diag_sequence payloads; use decide");
}

json failure_list(const std::vector<std::string>& f) { return json(f); }

Outcome verify_cert(const Options& o, const json& j, const TolerancePolicy& tol) {
  const auto kind = j.at("kind").get<std::string>();
  json report = {{"kind", kind}};
  bool ok = true;
  if (kind == "finite_matrix") {
    const auto cert = finite_cert_from_json(j);
    const auto why = audit_cert(cert, tol);
    std::vector<std::string> failures;
    if (!why.empty()) failures.push_back(why);
    if (why.empty()) {
      const auto ra = rank_audit(cert.target, std::vector<double>(cert.projections.size(), 1.0), cert.projections, tol);
      report["rank_audit"] = {{"ok", ra.ok}, {"rank_range", ra.rank_range}, {"rank_above_delta", ra.rank_above_delta}};
      if (!ra.ok) failures.push_back("rank audit: " + ra.failure);
    }
    ok = failures.empty();
    report["failures"] = failure_list(failures);
    report["projections"] = cert.projections.size();
  } else if (kind == "block_stream") {
    const auto cert = block_stream_from_json(j);
    int depth = o.jmax.value_or(cert.j_max);
    for (const auto& t : cert.terms) depth = std::min(depth, static_cast<int>(t.blocks.size()));
    const auto rep = audit_block_stream(cert, depth, tol);
    report["audit"] = to_json(rep);
    report["depth"] = depth;
    report["failures"] = failure_list(rep.failures);
    ok = rep.exact_ok;
  } else {
    const auto cert = ii1_cert_from_json(j);
    const auto rep = verify_invariants(cert, tol);
    report["invariants"] = to_json(rep);
    json failures = json::array();
    for (const auto& f : rep.failures) failures.push_back(f.eq + " (run " + std::to_string(f.run) + ", j " + std::to_string(f.j) + "): " + f.detail);
    if (o.denominator && rep.ok()) {
      const auto mat = materialize(cert, *o.denominator, tol);
      report["materialize"] = to_json(mat);
      for (const auto& f : mat.failures) failures.push_back("materialize: " + f);
    }
    ok = failures.empty();
    report["failures"] = failures;
  }
  report["ok"] = ok;
  return {report, ok ? kExitOk : kExitVerify};
}

Outcome materialize_cert(const Options& o, const json& j, const TolerancePolicy& tol) {
  const auto kind = j.at("kind").get<std::string>();
  if (kind == "finite_matrix") {
    const auto cert = finite_cert_from_json(j);
    Matrix sum(cert.target.dim(), cert.target.dim());
    double idem = 0.0;
    json ps = json::array();
    for (const auto& p : cert.projections) {
      sum += p.matrix();
      idem = std::max(idem, p.idempotency_residual());
      ps.push_back(to_json(p.matrix()));
    }
    const double res = frobenius_distance(sum, cert.target.matrix());
    json doc = {{"kind", kind}, {"dim", cert.target.dim()}, {"projections", ps}, {"residual", res}, {"max_idempotency", idem}};
    return {doc, kExitOk};
  }
  if (kind == "block_stream") {
    const auto cert = block_stream_from_json(j);
    const auto dim = static_cast<std::size_t>(o.denominator.value_or(64));
    const auto mat = materialize_truncation(cert, dim, tol);
    auto doc = to_json(mat, dim <= 128);
    doc["kind"] = kind;
    const double scale = 1.0 + cert.target.truncate(dim).frobenius_norm();
    const bool ok = mat.residual <= 1e-8 * scale && mat.max_idempotency <= 1e-8;
    doc["ok"] = ok;
    return {doc, ok ? kExitOk : kExitVerify};
  }
  const auto cert = ii1_cert_from_json(j);
  const auto rep = materialize(cert, o.denominator.value_or(6000), tol);
  auto doc = to_json(rep);
  doc["kind"] = kind;
  doc["ok"] = rep.failures.empty();
  return {doc, rep.failures.empty() ? kExitOk : kExitVerify};
}

Outcome run(const Options& o) {
  const auto tol = tolerances(o);
  const json input = read_input(o.input);
  if (o.command == "verify" || o.command == "materialize") {
    json cert = input;
    if (!is_cert(input)) cert = decompose_payload(o, payload_from_json(input, tol), tol);
    return o.command == "verify" ? verify_cert(o, cert, tol) : materialize_cert(o, cert, tol);
  }
  if (is_cert(input)) throw Error(ErrorCode::ParseError, o.command + " expects an operator payload, not a certificate");
  const auto payload = payload_from_json(input, tol);
  if (o.command == "decide") {
    DecideOptions d;
    d.tol = tol;
    d.j_max = o.jmax.value_or(20);
    return {to_json(decide(payload.op, resolve_model(o, payload), d)), kExitOk};
  }
  return {decompose_payload(o, payload, tol), kExitOk};
}

void emit(const Options& o, const json& doc) {
  const std::string text = doc.dump(2) + "\n";
  if (o.output.empty() || o.output == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(o.output);
  if (!out) throw Error(ErrorCode::InvalidArgument, "cannot open output '" + o.output + "'");
  out << text;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Decompose positive operators into finite sums of projections"};
  app.require_subcommand(1);
  Options o;
  for (const char* name : {"decide", "decompose", "verify", "materialize"}) {
    auto* sub = app.add_subcommand(name);
    sub->add_option("--input,-i", o.input, "JSON file, or - for standard input");
    sub->add_option("--output,-o", o.output, "write the JSON result here instead of standard output");
    sub->add_option("--model,-m", o.model, "I_n, I_<size>, I_inf, II_1, II_inf, III");
    sub->add_option("--tol", o.tol, "symmetry, projection and eigenvalue tolerance");
    sub->add_option("--jmax", o.jmax, "recursion depth");
    sub->add_option("--denominator", o.denominator, "grid denominator (II_1) or truncation size (block streams)");
    sub->callback([&o, name] { o.command = name; });
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cout << json{{"error", "ParseError"}, {"message", e.what()}}.dump(2) << "\n";
    return kExitParse;
  }
  try {
    const auto out = run(o);
    emit(o, out.doc);
    return out.code;
  } catch (const Error& e) {
    std::cout << error_json(e).dump(2) << "\n";
    return e.code() == ErrorCode::VerificationFailed ? kExitVerify : kExitParse;
  } catch (const json::exception& e) {
    std::cout << json{{"error", "ParseError"}, {"message", e.what()}}.dump(2) << "\n";
    return kExitParse;
  } catch (const std::exception& e) {
    std::cout << json{{"error", "InvalidArgument"}, {"message", e.what()}}.dump(2) << "\n";
    return kExitParse;
  }
}
