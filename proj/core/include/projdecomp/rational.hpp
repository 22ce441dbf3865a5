#pragma once

#include <compare>
#include <cstdint>
#include <iosfwd>
#include <string>

#include <gmpxx.h>

namespace projdecomp {

/// Arbitrary-precision rational number, always kept in canonical form.
class Rational {
 public:
  Rational() = default;
  Rational(long long v);  // NOLINT(google-explicit-constructor)
  Rational(long long num, long long den);
  explicit Rational(const mpq_class& q);
  explicit Rational(const mpz_class& z);

  /// Parse "n", "n/d" or a decimal literal such as "0.125" or "-1.5e-3".
  static Rational parse(const std::string& text);
  static Rational from_strings(const std::string& num, const std::string& den);
  /// Exact value of a finite double (every double is a dyadic rational).
  static Rational from_double(double v);

  const mpq_class& raw() const noexcept { return q_; }
  std::string num_str() const;
  std::string den_str() const;
  std::string str() const;
  double to_double() const;

  bool is_zero() const noexcept { return sgn(q_) == 0; }
  bool is_integer() const;
  int sign() const noexcept { return sgn(q_); }

  Rational floor() const;
  Rational ceil() const;
  /// this − floor(this), in [0,1).
  Rational frac() const;
  Rational abs() const;
  /// Value as int64 when integral and in range; throws Overflow otherwise.
  std::int64_t to_int64() const;

  Rational& operator+=(const Rational& o);
  Rational& operator-=(const Rational& o);
  Rational& operator*=(const Rational& o);
  Rational& operator/=(const Rational& o);
  Rational operator-() const;

  friend Rational operator+(Rational a, const Rational& b) { return a += b; }
  friend Rational operator-(Rational a, const Rational& b) { return a -= b; }
  friend Rational operator*(Rational a, const Rational& b) { return a *= b; }
  friend Rational operator/(Rational a, const Rational& b) { return a /= b; }

  friend bool operator==(const Rational& a, const Rational& b) { return cmp(a.q_, b.q_) == 0; }
  friend std::strong_ordering operator<=>(const Rational& a, const Rational& b) {
    const int c = cmp(a.q_, b.q_);
    if (c < 0) return std::strong_ordering::less;
    if (c > 0) return std::strong_ordering::greater;
    return std::strong_ordering::equal;
  }

 private:
  mpq_class q_;
};

Rational min(const Rational& a, const Rational& b);
Rational max(const Rational& a, const Rational& b);

std::ostream& operator<<(std::ostream& os, const Rational& r);

}  // namespace projdecomp
