#include "doctest.h"
#include "projdecomp/error.hpp"
#include "projdecomp/rational.hpp"

using projdecomp::Error;
using projdecomp::ErrorCode;
using projdecomp::Rational;

TEST_SUITE("rational") {
  TEST_CASE("parse accepts integers, fractions and decimals") {
    CHECK(Rational::parse("7") == Rational(7));
    CHECK(Rational::parse("6/4") == Rational(3, 2));
    CHECK(Rational::parse("-0.125") == Rational(-1, 8));
    CHECK(Rational::parse("1.5e-3") == Rational(3, 2000));
    CHECK_THROWS_AS(Rational::parse("x/2"), Error);
  }

  TEST_CASE("canonical form and string round trip") {
    const Rational r(10, -4);
    CHECK(r.num_str() == "-5");
    CHECK(r.den_str() == "2");
    CHECK(Rational::from_strings(r.num_str(), r.den_str()) == r);
    CHECK(r.str() == "-5/2");
  }

  TEST_CASE("floor, ceil and frac on negative values") {
    const Rational r(-7, 3);
    CHECK(r.floor() == Rational(-3));
    CHECK(r.ceil() == Rational(-2));
    CHECK(r.frac() == Rational(2, 3));
    CHECK(Rational(5).frac().is_zero());
  }

  TEST_CASE("from_double is exact") {
    CHECK(Rational::from_double(0.375) == Rational(3, 8));
    CHECK(Rational::from_double(0.1).to_double() == 0.1);
  }

  TEST_CASE("to_int64 rejects fractions and overflow") {
    CHECK(Rational(42).to_int64() == 42);
    CHECK_THROWS_AS(Rational(1, 2).to_int64(), Error);
    const auto big = Rational::parse("100000000000000000000000");
    try {
      (void)big.to_int64();
      FAIL("expected overflow");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::Overflow);
    }
  }

  TEST_CASE("ordering") {
    CHECK(Rational(1, 3) < Rational(1, 2));
    CHECK(max(Rational(1, 3), Rational(2, 7)) == Rational(1, 3));
    CHECK(min(Rational(-1), Rational(0)) == Rational(-1));
  }
}
