#include <cmath>

#include "doctest.h"
#include "projdecomp/diagmodel.hpp"
#include "projdecomp/error.hpp"

using namespace projdecomp;

TEST_SUITE("diagmodel") {
  TEST_CASE("rule sequences evaluate in closed form") {
    const auto p = RuleSequence::power(2.0, 1.0);
    CHECK(p.at(4) == doctest::Approx(0.5));
    const auto g = RuleSequence::geometric(1.0, 0.5);
    CHECK(g.at(3) == doctest::Approx(0.125));
    const auto f = RuleSequence::finite({0.5, 0.25});
    CHECK(f.at(2) == 0.25);
    CHECK(f.at(9) == 0.0);
    CHECK(f.support_size() == 2);
    CHECK_THROWS_AS(p.at(0), Error);
    CHECK_THROWS_AS(RuleSequence::power(-1.0, 1.0), Error);
  }

  TEST_CASE("traces") {
    CHECK(sequence_trace(RuleSequence::power(1.0, 1.0)).infinite);
    const auto t2 = sequence_trace(RuleSequence::power(6.0 / (M_PI * M_PI), 2.0));
    CHECK_FALSE(t2.infinite);
    CHECK(t2.value == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(sequence_trace(RuleSequence::geometric(1.0, 0.5)).value == doctest::Approx(1.0));
    CHECK(sequence_trace(RuleSequence::harmonic_log(1.0, 1.0, 1.0)).infinite);
    const auto tl = sequence_trace(RuleSequence::harmonic_log(1.0, 1.0, 2.0));
    CHECK_FALSE(tl.infinite);
    CHECK_FALSE(tl.exact);
  }

  TEST_CASE("delta-half condition") {
    CHECK(delta_half_check(RuleSequence::power(1.0, 0.5)).holds);
    CHECK_FALSE(delta_half_check(RuleSequence::geometric(1.0, 0.5)).holds);
  }

  TEST_CASE("scalar tail truncation and essential norm") {
    const ScalarTailOperator a(HermitianMatrix::diagonal({0.5}), Rational(3, 2));
    const auto t = a.truncate(4);
    CHECK(t.dim() == 4);
    CHECK(t(0, 0).real() == 0.5);
    CHECK(t(3, 3).real() == 1.5);
    CHECK(essential_norm(a) == 1.5);
  }

  TEST_CASE("spectral slots select head coordinates and the tail") {
    const ScalarTailOperator a(HermitianMatrix::diagonal({0.5, 2.0}), Rational(3, 2));
    const auto below = spectral_slots(a, 0.0, 1.0, true, true);
    CHECK_FALSE(below.cofinite);
    CHECK(below.finite_set == std::vector<long long>{0});
    const auto above = spectral_slots(a, 1.0, 10.0, true, true);
    CHECK(above.cofinite);
    CHECK(above.contains(1));
    CHECK_FALSE(above.contains(0));
  }

  TEST_CASE("positive combination classification") {
    DiagonalOperator comp;
    comp.plus = RuleSequence::power(1.0, 1.0);
    CHECK(poscomb_classify(comp).verdict == Verdict::NotPositiveCombination);
    comp.shift = 1;
    CHECK(poscomb_classify(comp).verdict == Verdict::PositiveCombination);
    const ScalarTailOperator a(HermitianMatrix::diagonal({0.5}), Rational(1, 2));
    CHECK(poscomb_classify(a).verdict == Verdict::PositiveCombination);
  }

  TEST_CASE("diagonal validation") {
    DiagonalOperator bad;
    bad.minus = RuleSequence::finite({0.5});
    CHECK_THROWS_AS(bad.validate(), Error);
    bad.shift = 1;
    bad.minus = RuleSequence::finite({1.5});
    CHECK_THROWS_AS(bad.validate(), Error);
  }
}
