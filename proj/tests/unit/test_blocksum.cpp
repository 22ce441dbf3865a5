#include "doctest.h"
#include "projdecomp/blocksum.hpp"
#include "projdecomp/error.hpp"

using namespace projdecomp;

TEST_SUITE("blocksum") {
  TEST_CASE("block bound") {
    CHECK(block_bound(Rational(3, 2)) == 4);
    CHECK(block_bound(Rational(2)) == 4);
    CHECK(block_bound(Rational(11, 10)) == 12);
    CHECK_THROWS_AS(block_bound(Rational(1)), Error);
  }

  TEST_CASE("schedule for beta = 0, alpha = 3/2") {
    const auto s = scalar_block_schedule(Rational(0), Rational(3, 2), 6);
    REQUIRE(s.size() == 6);
    for (const auto& b : s) {
      CHECK(b.block_rank <= b.block_trace);
      CHECK(b.block_trace <= 4);
      REQUIRE(b.block_cert);
      CHECK(static_cast<std::int64_t>(b.block_cert->projections.size()) == b.block_trace);
      CHECK(audit_cert(*b.block_cert).empty());
    }
    for (std::size_t i = 1; i < s.size(); ++i) CHECK(s[i].beta_prev == s[i - 1].beta_j);
    CHECK_THROWS_AS(scalar_block_schedule(Rational(1), Rational(3, 2), 3), Error);
  }

  TEST_CASE("interleaving rejects overlapping blocks at distance two") {
    std::vector<BlockFootprint> fp = {{0, 3, 2}, {3, 5, 2}, {2, 7, 1}};
    try {
      interleave_assemble(fp);
      FAIL("overlap accepted");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::AdjacencyViolated);
    }
    fp[2] = {6, 7, 1};
    const auto a = interleave_assemble(fp);
    CHECK(a.odd.size() == 2);
    CHECK(a.even.size() == 2);
    CHECK(a.odd[0] == std::vector<std::pair<std::size_t, std::size_t>>{{0, 0}, {2, 0}});
  }

  TEST_CASE("essential norm at most one is refused with an inconclusive report") {
    const ScalarTailOperator a(HermitianMatrix::diagonal({0.5}), Rational(1));
    try {
      finite_sum_decompose(a);
      FAIL("decomposed with essential norm 1");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::EssentialNormTooSmall);
      CHECK(e.detail()["verdict"] == "Inconclusive");
      CHECK(e.detail()["condition"] == "Cor4.4");
    }
  }

  TEST_CASE("diag(0.5) with a 1.5 tail") {
    const ScalarTailOperator a(HermitianMatrix::diagonal({0.5}), Rational(3, 2));
    const auto cert = finite_sum_decompose(a);
    CHECK(cert.total_count() == 25);
    CHECK(cert.count_bound() == 33);
    const auto rep = audit_block_stream(cert, 12);
    CHECK(rep.exact_ok);
    CHECK(rep.numeric_checked);
    CHECK(rep.residual < 1e-10);
    const auto mat = materialize_truncation(cert, 64);
    CHECK(mat.residual < 1e-10);
    CHECK(mat.max_idempotency < 1e-10);
    CHECK_NOTHROW(verify_truncation(cert, a, 8));
  }

  TEST_CASE("large head norm is split into pieces") {
    const ScalarTailOperator a(HermitianMatrix::diagonal({5.0, 0.25}), Rational(5, 4));
    const auto cert = finite_sum_decompose(a, 10);
    CHECK(cert.plan.pieces >= 2);
    CHECK(audit_block_stream(cert, 6).exact_ok);
  }

  TEST_CASE("alpha above two peels whole copies") {
    const ScalarTailOperator a(HermitianMatrix::diagonal({1.0}), Rational(7, 2));
    const auto cert = finite_sum_decompose(a, 8);
    for (const auto& t : cert.terms) {
      CHECK(t.alpha_reduced > Rational(1));
      CHECK(t.alpha_reduced <= Rational(2));
      CHECK(t.peeled_alpha == 2);
    }
    CHECK(audit_block_stream(cert, 6).exact_ok);
  }

  TEST_CASE("mutations are caught") {
    const ScalarTailOperator a(HermitianMatrix::diagonal({0.5}), Rational(3, 2));
    auto cert = finite_sum_decompose(a, 10);
    auto bad = cert;
    bad.terms[0].blocks[2].beta_j = Rational(1, 3);
    CHECK_FALSE(audit_block_stream(bad, 6).exact_ok);
    bad = cert;
    bad.terms[1].blocks[0].diagonal[0] += Rational(1, 8);
    CHECK_FALSE(audit_block_stream(bad, 6).exact_ok);
    bad = cert;
    bad.terms[0].assembly.odd.pop_back();
    CHECK_FALSE(audit_block_stream(bad, 6).exact_ok);
    try {
      verify_truncation(bad, a, 6);
      FAIL("mutated certificate verified");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::VerificationFailed);
    }
    const ScalarTailOperator other(HermitianMatrix::diagonal({0.25}), Rational(3, 2));
    CHECK_THROWS_AS(verify_truncation(cert, other, 4), Error);
  }
}
