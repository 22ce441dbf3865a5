#include "projdecomp/rational.hpp"

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <ostream>

#include "projdecomp/error.hpp"

namespace projdecomp {

Rational::Rational(long long v) : q_(mpz_class(std::to_string(v))) {}

Rational::Rational(long long num, long long den) {
  if (den == 0) throw Error(ErrorCode::InvalidArgument, "rational with zero denominator");
  q_ = mpq_class(mpz_class(std::to_string(num)), mpz_class(std::to_string(den)));
  q_.canonicalize();
}

Rational::Rational(const mpq_class& q) : q_(q) { q_.canonicalize(); }

Rational::Rational(const mpz_class& z) : q_(z) {}

Rational Rational::from_strings(const std::string& num, const std::string& den) {
  mpz_class n, d;
  if (n.set_str(num, 10) != 0 || d.set_str(den, 10) != 0) {
    throw Error(ErrorCode::ParseError, "malformed rational '" + num + "/" + den + "'");
  }
  if (d == 0) throw Error(ErrorCode::ParseError, "rational with zero denominator");
  mpq_class q(n, d);
  q.canonicalize();
  return Rational(q);
}

Rational Rational::parse(const std::string& text) {
  if (text.empty()) throw Error(ErrorCode::ParseError, "empty rational literal");
  const auto slash = text.find('/');
  if (slash != std::string::npos) {
    return from_strings(text.substr(0, slash), text.substr(slash + 1));
  }
  // Decimal: sign, digits, optional fraction, optional exponent.
  std::size_t i = 0;
  bool neg = false;
  if (text[i] == '+' || text[i] == '-') neg = text[i++] == '-';
  std::string digits;
  long long exp10 = 0;
  bool any = false;
  while (i < text.size() && std::isdigit(static_cast<unsigned char>(text[i]))) {
    digits += text[i++];
    any = true;
  }
  if (i < text.size() && text[i] == '.') {
    ++i;
    while (i < text.size() && std::isdigit(static_cast<unsigned char>(text[i]))) {
      digits += text[i++];
      --exp10;
      any = true;
    }
  }
  if (!any) throw Error(ErrorCode::ParseError, "malformed rational literal '" + text + "'");
  if (i < text.size() && (text[i] == 'e' || text[i] == 'E')) {
    ++i;
    std::size_t used = 0;
    long long e = 0;
    try {
      e = std::stoll(text.substr(i), &used);
    } catch (const std::exception&) {
      throw Error(ErrorCode::ParseError, "malformed exponent in '" + text + "'");
    }
    if (used != text.size() - i || std::llabs(e) > 100000) {
      throw Error(ErrorCode::ParseError, "malformed exponent in '" + text + "'");
    }
    exp10 += e;
    i = text.size();
  }
  if (i != text.size()) throw Error(ErrorCode::ParseError, "trailing characters in '" + text + "'");
  mpz_class mant(digits, 10);
  if (neg) mant = -mant;
  mpz_class scale;
  mpz_ui_pow_ui(scale.get_mpz_t(), 10, static_cast<unsigned long>(std::llabs(exp10)));
  mpq_class q = exp10 >= 0 ? mpq_class(mant * scale) : mpq_class(mant, scale);
  q.canonicalize();
  return Rational(q);
}

Rational Rational::from_double(double v) {
  if (!std::isfinite(v)) throw Error(ErrorCode::InvalidArgument, "non-finite value has no rational form");
  mpq_class q;
  mpq_set_d(q.get_mpq_t(), v);
  return Rational(q);
}

std::string Rational::num_str() const { return q_.get_num().get_str(10); }
std::string Rational::den_str() const { return q_.get_den().get_str(10); }

std::string Rational::str() const {
  if (q_.get_den() == 1) return num_str();
  return num_str() + "/" + den_str();
}

double Rational::to_double() const { return q_.get_d(); }

bool Rational::is_integer() const { return q_.get_den() == 1; }

Rational Rational::floor() const {
  mpz_class z;
  mpz_fdiv_q(z.get_mpz_t(), q_.get_num_mpz_t(), q_.get_den_mpz_t());
  return Rational(z);
}

Rational Rational::ceil() const {
  mpz_class z;
  mpz_cdiv_q(z.get_mpz_t(), q_.get_num_mpz_t(), q_.get_den_mpz_t());
  return Rational(z);
}

Rational Rational::frac() const { return *this - floor(); }

Rational Rational::abs() const { return sign() < 0 ? -*this : *this; }

std::int64_t Rational::to_int64() const {
  if (!is_integer()) throw Error(ErrorCode::Overflow, "rational " + str() + " is not an integer");
  const mpz_class& z = q_.get_num();
  static const mpz_class lo(std::to_string(std::numeric_limits<std::int64_t>::min()));
  static const mpz_class hi(std::to_string(std::numeric_limits<std::int64_t>::max()));
  if (z < lo || z > hi) throw Error(ErrorCode::Overflow, "integer " + str() + " exceeds 64 bits");
  return std::stoll(z.get_str(10));
}

Rational& Rational::operator+=(const Rational& o) {
  q_ += o.q_;
  return *this;
}
Rational& Rational::operator-=(const Rational& o) {
  q_ -= o.q_;
  return *this;
}
Rational& Rational::operator*=(const Rational& o) {
  q_ *= o.q_;
  return *this;
}
Rational& Rational::operator/=(const Rational& o) {
  if (o.is_zero()) throw Error(ErrorCode::InvalidArgument, "rational division by zero");
  q_ /= o.q_;
  return *this;
}
Rational Rational::operator-() const { return Rational(mpq_class(-q_)); }

Rational min(const Rational& a, const Rational& b) { return b < a ? b : a; }
Rational max(const Rational& a, const Rational& b) { return a < b ? b : a; }

std::ostream& operator<<(std::ostream& os, const Rational& r) { return os << r.str(); }

}  // namespace projdecomp
