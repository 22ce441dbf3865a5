#include "doctest.h"
#include "projdecomp/error.hpp"
#include "projdecomp/ii1.hpp"

using namespace projdecomp;

namespace {

SpectralWeightList atoms_of(std::initializer_list<std::pair<Rational, Rational>> xs) {
  SpectralWeightList out;
  for (const auto& [g, w] : xs) out.atoms.push_back({g, w});
  return out;
}

}  // namespace

TEST_SUITE("ii1") {
  TEST_CASE("first step of the worked fixture") {
    const auto cert = lemma61_run(Rational(1, 4), Rational(1, 2), Rational(1, 2), Rational(1, 2), 20);
    const auto& s0 = cert.steps.at(0);
    CHECK(s0.branch == Branch::TailNonzero);
    CHECK(s0.k == 20);
    CHECK(s0.n == 14);
    CHECK(s0.m == 3);
    REQUIRE(s0.alpha);
    CHECK(*s0.alpha == Rational(1));
    REQUIRE(s0.next);
    CHECK(s0.next->lambda == Rational(1, 2));
    CHECK(verify_invariants(cert).ok());
    CHECK(cert.input_trace() == Rational(1, 2) * Rational(3, 4) + Rational(1, 2) * Rational(3, 2));
  }

  TEST_CASE("equality case with rational ratio takes two projections") {
    const auto cert = lemma61_decompose(Rational(1, 2), Rational(1, 2), Rational(1, 2), Rational(1, 2));
    REQUIRE(cert.runs.size() == 1);
    CHECK(cert.runs[0].steps.at(0).branch == Branch::PairShortcut);
    CHECK(cert.projection_count() == 2);
    Lemma61Options strict;
    strict.shortcuts = false;
    CHECK_THROWS_AS(lemma61_run(Rational(1, 2), Rational(1, 2), Rational(1, 2), Rational(1, 2), 10, strict), Error);
  }

  TEST_CASE("f = 0 branches") {
    const auto integer = lemma61_run(Rational(0), Rational(2), Rational(0), Rational(1, 2), 5);
    CHECK(integer.steps.at(0).branch == Branch::IntegerTerminal);
    CHECK(integer.terminated);
    const auto rational = lemma61_run(Rational(0), Rational(1, 3), Rational(0), Rational(1, 2), 5);
    CHECK(rational.steps.at(0).branch == Branch::RationalTerminal);
    CHECK(verify_invariants(rational).ok());
    Lemma61Options no_shortcut;
    no_shortcut.shortcuts = false;
    const auto tail = lemma61_run(Rational(0), Rational(4, 3), Rational(0), Rational(1, 2), 6, no_shortcut);
    CHECK(tail.steps.at(0).branch == Branch::TailZero);
    CHECK(tail.steps.at(0).block.projection_count() == 2);
    CHECK(verify_invariants(tail).ok());
  }

  TEST_CASE("violated inequality is refused") {
    try {
      lemma61_run(Rational(3, 4), Rational(1, 4), Rational(1, 2), Rational(1, 4), 10);
      FAIL("accepted μτ(e) < λτ(f)");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::InequalityViolated);
    }
    CHECK_THROWS_AS(theorem65_decompose(atoms_of({{Rational(1, 2), Rational(1, 2)}, {Rational(5, 4), Rational(1, 2)}})),
                    Error);
  }

  TEST_CASE("matched partitions") {
    const std::vector<Rational> xi = {Rational(1, 2), Rational(1, 4)};
    const std::vector<Rational> eta = {Rational(1, 3), Rational(5, 12)};
    const auto m = match_partitions(xi, eta);
    Rational total;
    std::vector<Rational> by_i(2), by_j(2);
    for (const auto& p : m.pieces) {
      CHECK(p.value.sign() > 0);
      total += p.value;
      by_i[p.i] += p.value;
      by_j[p.j] += p.value;
    }
    CHECK(total == Rational(3, 4));
    CHECK(by_i == xi);
    CHECK(by_j == eta);
    CHECK(m.pieces.size() <= xi.size() + eta.size() - 1);
  }

  TEST_CASE("rebalancing spreads the gap evenly") {
    const auto a = atoms_of({{Rational(3, 2), Rational(1, 2)}, {Rational(3, 4), Rational(1, 2)}});
    const auto cert = theorem65_decompose(a);
    REQUIRE(cert.plan);
    CHECK(cert.plan->gap == Rational(1, 8));
    CHECK(cert.plan->ratio == Rational(1, 4));
    CHECK(verify_invariants(cert).ok());
    const auto mat = materialize(cert, 6000);
    CHECK(mat.failures.empty());
    CHECK(mat.max_block_residual < 1e-8);
  }

  TEST_CASE("unit atoms become projections") {
    const auto a = atoms_of({{Rational(2), Rational(1, 4)}, {Rational(1), Rational(1, 2)}, {Rational(1, 2), Rational(1, 4)}});
    const auto cert = theorem65_decompose(a);
    CHECK(cert.unit_projections.size() == 1);
    CHECK(cert.unit_projections[0].length() == Rational(1, 2));
  }

  TEST_CASE("mutations are pinpointed") {
    auto cert = lemma61_decompose(Rational(1, 4), Rational(1, 2), Rational(1, 2), Rational(1, 2), 6);
    REQUIRE(cert.runs.at(0).steps.size() > 2);
    auto bad = cert;
    *bad.runs[0].steps[1].delta += Rational(1, 7);
    auto rep = verify_invariants(bad);
    REQUIRE_FALSE(rep.ok());
    CHECK(rep.failures.front().j == 1);
    bad = cert;
    bad.runs[0].steps[2].block.slots[0].hi += Rational(1, 1000);
    rep = verify_invariants(bad);
    REQUIRE_FALSE(rep.ok());
    CHECK(rep.failures.front().j == 2);
  }

  TEST_CASE("input validation") {
    CHECK_THROWS_AS(lemma61_run(Rational(3, 2), Rational(1), Rational(1, 4), Rational(1, 4), 5), Error);
    CHECK_THROWS_AS(lemma61_run(Rational(1, 2), Rational(0), Rational(1, 4), Rational(1, 4), 5), Error);
    CHECK_THROWS_AS(lemma61_run(Rational(1, 2), Rational(1), Rational(3, 4), Rational(1, 2), 5), Error);
  }
}
