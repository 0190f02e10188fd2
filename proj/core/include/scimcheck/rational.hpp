#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <compare>
#include <string>

namespace scim {

using BigInt = boost::multiprecision::cpp_int;

// Exact rational with arbitrary-precision integer parts. All probabilities,
// expectations and utility values in the engine are of this type; there is no
// floating point anywhere on a result path. Probability-one and
// probability-zero tests are exact comparisons.
class Rational {
 public:
  Rational() : num_(0), den_(1) {}
  Rational(long long n) : num_(n), den_(1) {}  // NOLINT(google-explicit-constructor)
  Rational(BigInt n) : num_(std::move(n)), den_(1) {}
  Rational(BigInt n, BigInt d);

  const BigInt& num() const { return num_; }
  const BigInt& den() const { return den_; }

  bool is_zero() const { return num_ == 0; }
  bool is_integer() const { return den_ == 1; }
  int sign() const { return num_ == 0 ? 0 : (num_ > 0 ? 1 : -1); }

  Rational operator-() const;
  Rational& operator+=(const Rational& o);
  Rational& operator-=(const Rational& o);
  Rational& operator*=(const Rational& o);
  Rational& operator/=(const Rational& o);  // throws on division by zero

  friend Rational operator+(Rational a, const Rational& b) { return a += b; }
  friend Rational operator-(Rational a, const Rational& b) { return a -= b; }
  friend Rational operator*(Rational a, const Rational& b) { return a *= b; }
  friend Rational operator/(Rational a, const Rational& b) { return a /= b; }

  friend bool operator==(const Rational& a, const Rational& b) {
    return a.num_ == b.num_ && a.den_ == b.den_;
  }
  friend std::strong_ordering operator<=>(const Rational& a, const Rational& b);

  Rational abs() const { return num_ >= 0 ? *this : -*this; }

  // Renders "p/q", or just "p" when the denominator is 1.
  std::string str() const;

  // Accepts "p", "-p", "p/q" with optional sign on p. Decimal notation is
  // rejected. Throws Error(ParseError).
  static Rational parse(const std::string& text);

 private:
  void normalize();
  BigInt num_;
  BigInt den_;  // > 0, gcd(num, den) == 1
};

inline Rational rat(long long n, long long d = 1) { return Rational(BigInt(n), BigInt(d)); }

}  // namespace scim
