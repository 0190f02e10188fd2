#include "scimcheck/rational.hpp"

#include <boost/multiprecision/cpp_int.hpp>

#include "scimcheck/errors.hpp"

namespace scim {

namespace {
BigInt big_gcd(BigInt a, BigInt b) {
  if (a < 0) a = -a;
  if (b < 0) b = -b;
  while (b != 0) {
    BigInt t = a % b;
    a = std::move(b);
    b = std::move(t);
  }
  return a;
}
}  // namespace

Rational::Rational(BigInt n, BigInt d) : num_(std::move(n)), den_(std::move(d)) {
  if (den_ == 0) throw Error(Errc::BadParameter, "rational with zero denominator");
  normalize();
}

void Rational::normalize() {
  if (den_ < 0) {
    num_ = -num_;
    den_ = -den_;
  }
  if (num_ == 0) {
    den_ = 1;
    return;
  }
  BigInt g = big_gcd(num_, den_);
  if (g > 1) {
    num_ /= g;
    den_ /= g;
  }
}

Rational Rational::operator-() const {
  Rational r;
  r.num_ = -num_;
  r.den_ = den_;
  return r;
}

Rational& Rational::operator+=(const Rational& o) {
  num_ = num_ * o.den_ + o.num_ * den_;
  den_ *= o.den_;
  normalize();
  return *this;
}

Rational& Rational::operator-=(const Rational& o) {
  num_ = num_ * o.den_ - o.num_ * den_;
  den_ *= o.den_;
  normalize();
  return *this;
}

Rational& Rational::operator*=(const Rational& o) {
  num_ *= o.num_;
  den_ *= o.den_;
  normalize();
  return *this;
}

Rational& Rational::operator/=(const Rational& o) {
  if (o.num_ == 0) throw Error(Errc::BadParameter, "division by zero");
  num_ *= o.den_;
  den_ *= o.num_;
  normalize();
  return *this;
}

std::strong_ordering operator<=>(const Rational& a, const Rational& b) {
  BigInt lhs = a.num_ * b.den_;
  BigInt rhs = b.num_ * a.den_;
  if (lhs < rhs) return std::strong_ordering::less;
  if (lhs > rhs) return std::strong_ordering::greater;
  return std::strong_ordering::equal;
}

std::string Rational::str() const {
  std::string s = num_.str();
  if (den_ != 1) s += "/" + den_.str();
  return s;
}

Rational Rational::parse(const std::string& text) {
  if (text.empty()) throw Error(Errc::ParseError, "empty rational");
  if (text.find('.') != std::string::npos)
    throw Error(Errc::ParseError, "decimal notation is not accepted, use p/q: '" + text + "'");
  size_t slash = text.find('/');
  try {
    if (slash == std::string::npos) return Rational(BigInt(text));
    BigInt num(text.substr(0, slash));
    BigInt den(text.substr(slash + 1));
    if (den == 0) throw Error(Errc::ParseError, "zero denominator in '" + text + "'");
    return Rational(num, den);
  } catch (const Error&) {
    throw;
  } catch (const std::exception&) {
    throw Error(Errc::ParseError, "malformed rational '" + text + "'");
  }
}

}  // namespace scim
