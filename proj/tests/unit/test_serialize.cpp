#include "doctest.h"
#include "projdecomp/serialize.hpp"

using namespace projdecomp;

TEST_SUITE("serialize") {
  TEST_CASE("rationals") {
    CHECK(rational_from_json(json{{"num", "3"}, {"den", "6"}}) == Rational(1, 2));
    CHECK(rational_from_json(json("3/2")) == Rational(3, 2));
    CHECK(rational_from_json(json(0.25)) == Rational(1, 4));
    CHECK(to_json(Rational(-2, 4)) == json{{"num", "-1"}, {"den", "2"}});
    CHECK_THROWS_AS(rational_from_json(json::array()), Error);
  }

  TEST_CASE("finite matrix certificate round trip") {
    const auto cert = fillmore_decompose(HermitianMatrix::diagonal({0.5, 1.5, 1.0}));
    const json j = to_json(cert);
    const json back = to_json(finite_cert_from_json(j));
    CHECK(j.dump() == back.dump());
    CHECK(audit_cert(finite_cert_from_json(j)).empty());
  }

  TEST_CASE("block stream round trip") {
    const ScalarTailOperator a(HermitianMatrix::diagonal({0.5}), Rational(3, 2));
    const json j = to_json(finite_sum_decompose(a, 8));
    const json back = to_json(block_stream_from_json(j));
    CHECK(j.dump() == back.dump());
    CHECK(audit_block_stream(block_stream_from_json(j), 6).exact_ok);
  }

  TEST_CASE("II1 certificate round trip") {
    SpectralWeightList atoms;
    atoms.atoms = {{Rational(3, 2), Rational(1, 2)}, {Rational(3, 4), Rational(1, 2)}};
    const json j = to_json(theorem65_decompose(atoms));
    const json back = to_json(ii1_cert_from_json(j));
    CHECK(j.dump() == back.dump());
    CHECK(verify_invariants(ii1_cert_from_json(j)).ok());
  }

  TEST_CASE("decompositions are deterministic") {
    const auto a = HermitianMatrix::diagonal({0.25, 0.75, 2.0, 1.0});
    CHECK(to_json(fillmore_decompose(a)).dump() == to_json(fillmore_decompose(a)).dump());
  }

  TEST_CASE("payloads") {
    const auto st = payload_from_json(json::parse(R"({"kind":"scalar_tail","head":[0.5],"alpha":"3/2"})"));
    CHECK(st.kind == "scalar_tail");
    CHECK(default_model(st).kind == FactorKind::TypeIInf);
    CHECK(std::get<ScalarTailOperator>(st.op).alpha() == Rational(3, 2));
    const auto pr = payload_from_json(
        json::parse(R"({"kind":"ii1_pair","lambda":"1/4","mu":"1/2","tau_f":"1/2","tau_e":"1/2","model":"II_1"})"));
    REQUIRE(pr.pair);
    CHECK(std::get<SpectralWeightList>(pr.op).atoms.size() == 2);
    const auto m = payload_from_json(json::parse(R"({"kind":"matrix","dim":2,"re":[[1,0],[0,2]]})"));
    CHECK(std::get<HermitianMatrix>(m.op).dim() == 2);
    const auto d = payload_from_json(
        json::parse(R"({"kind":"diag_sequence","shift":1,"plus":{"family":"power","c":1,"p":1}})"));
    CHECK(std::get<DiagonalOperator>(d.op).plus.family() == Family::PowerDecay);
  }

  TEST_CASE("malformed payloads") {
    auto code = [](const char* text) {
      try {
        payload_from_json(json::parse(text));
      } catch (const Error& e) {
        return e.code();
      }
      return ErrorCode::InternalBoundFailure;
    };
    CHECK(code(R"({"kind":"nonsense"})") == ErrorCode::ParseError);
    CHECK(code(R"({"kind":"matrix","dim":2,"re":[[1,2]]})") == ErrorCode::ParseError);
    CHECK(code(R"({"kind":"matrix","dim":2,"re":[[1,1],[0,1]]})") == ErrorCode::NonHermitianInput);
  }

  TEST_CASE("decision reports") {
    DecisionReport r{Verdict::NotFiniteSum, "Thm5.6(i)", {{"alpha", 0.5}}};
    const auto back = report_from_json(to_json(r));
    CHECK(back.verdict == r.verdict);
    CHECK(back.condition == r.condition);
    CHECK(back.witness == r.witness);
    CHECK_THROWS(report_from_json(json{{"verdict", "FiniteSum"}, {"condition", ""}}));
  }
}
