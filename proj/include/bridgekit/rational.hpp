#pragma once

#include <cstdint>
#include <numeric>
#include <string>

#include "bridgekit/errors.hpp"

namespace bridgekit {

// Exact rational arithmetic for time grids.  Grid alignment questions
// (e.g. whether a folding parameter maps every grid point onto another
// grid point) are decided exactly, never through float comparisons.
struct Rat {
  std::int64_t num = 0;
  std::int64_t den = 1;  // always > 0, gcd(|num|, den) == 1

  Rat() = default;
  Rat(std::int64_t n) : num(n), den(1) {}
  Rat(std::int64_t n, std::int64_t d) : num(n), den(d) { normalize(); }

  void normalize() {
    if (den == 0) fail(ErrorKind::InvalidArgument, "rational with zero denominator");
    if (den < 0) { num = -num; den = -den; }
    std::int64_t g = std::gcd(num < 0 ? -num : num, den);
    if (g > 1) { num /= g; den /= g; }
  }

  double to_double() const { return static_cast<double>(num) / static_cast<double>(den); }
  std::string str() const {
    return den == 1 ? std::to_string(num) : std::to_string(num) + "/" + std::to_string(den);
  }

  friend Rat operator+(Rat a, Rat b) { return Rat(a.num * b.den + b.num * a.den, a.den * b.den); }
  friend Rat operator-(Rat a, Rat b) { return Rat(a.num * b.den - b.num * a.den, a.den * b.den); }
  friend Rat operator*(Rat a, Rat b) { return Rat(a.num * b.num, a.den * b.den); }
  friend Rat operator/(Rat a, Rat b) {
    if (b.num == 0) fail(ErrorKind::InvalidArgument, "rational division by zero");
    return Rat(a.num * b.den, a.den * b.num);
  }
  friend bool operator==(const Rat& a, const Rat& b) { return a.num == b.num && a.den == b.den; }
  friend bool operator!=(const Rat& a, const Rat& b) { return !(a == b); }
  friend bool operator<(const Rat& a, const Rat& b) { return a.num * b.den < b.num * a.den; }
  friend bool operator<=(const Rat& a, const Rat& b) { return a.num * b.den <= b.num * a.den; }
  friend bool operator>(const Rat& a, const Rat& b) { return b < a; }
  friend bool operator>=(const Rat& a, const Rat& b) { return b <= a; }

  // Best rational reconstruction of a decimal-serialized time value.
  // Continued-fraction expansion, denominators capped at 10^9; fails if no
  // small rational reproduces the double to 1e-12.
  static Rat from_double(double x);
};

}  // namespace bridgekit
