#pragma once

// Exact rational helpers on top of GMP: printing/parsing, continued-fraction
// rationalization and directed-rounding roots.

#include <gmpxx.h>

#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <string_view>

#include "gnorm/error.hpp"

namespace gnorm {

using Integer = mpz_class;
using Rational = mpq_class;

inline std::string to_string(const Rational& q) {
  if (q.get_den() == 1) return q.get_num().get_str();
  return q.get_num().get_str() + "/" + q.get_den().get_str();
}

/// Parses "p", "-p" or "p/q".
inline Rational parse_rational(std::string_view text) {
  Rational q;
  const std::string s(text);
  if (s.empty() || q.set_str(s, 10) != 0 || q.get_den() == 0) {
    throw Error("malformed rational '" + s + "'");
  }
  q.canonicalize();
  return q;
}

/// Exact value of a finite double.
inline Rational exact(double x) {
  if (!std::isfinite(x)) throw Error("non-finite value cannot be made exact");
  return Rational(x);
}

/// Largest double <= q.
inline double to_double_down(const Rational& q) {
  double d = q.get_d();  // truncates toward zero
  if (Rational(d) > q) d = std::nextafter(d, -std::numeric_limits<double>::infinity());
  return d;
}

/// Smallest double >= q.
inline double to_double_up(const Rational& q) {
  double d = q.get_d();
  if (Rational(d) < q) d = std::nextafter(d, std::numeric_limits<double>::infinity());
  return d;
}

/// Best rational approximation of x with denominator <= max_den, taken from
/// the convergents of the continued fraction of the exact value of x.
inline Rational rationalize(double x, std::uint64_t max_den) {
  const Rational target = exact(x);
  Integer num = target.get_num();
  Integer den = target.get_den();
  const Integer cap(static_cast<unsigned long>(max_den));

  // Convergents h/k with h_{-2}=0, h_{-1}=1, k_{-2}=1, k_{-1}=0.
  Integer hm2 = 0, hm1 = 1, km2 = 1, km1 = 0;
  Rational best(0);
  bool have = false;
  while (den != 0) {
    Integer a;
    mpz_fdiv_q(a.get_mpz_t(), num.get_mpz_t(), den.get_mpz_t());
    Integer hn = a * hm1 + hm2;
    Integer kn = a * km1 + km2;
    if (kn > cap) break;
    best = Rational(hn, kn);
    have = true;
    hm2 = hm1;
    hm1 = hn;
    km2 = km1;
    km1 = kn;
    Integer rem = num - a * den;
    num = den;
    den = rem;
  }
  if (!have) {
    Integer fl;
    mpz_fdiv_q(fl.get_mpz_t(), target.get_num_mpz_t(), target.get_den_mpz_t());
    best = Rational(fl);
  }
  best.canonicalize();
  return best;
}

namespace detail {
inline Integer floor_scaled(const Rational& q, unsigned long shift) {
  Integer num = q.get_num();
  mpz_mul_2exp(num.get_mpz_t(), num.get_mpz_t(), shift);
  Integer out;
  mpz_fdiv_q(out.get_mpz_t(), num.get_mpz_t(), q.get_den_mpz_t());
  return out;
}
inline Integer ceil_scaled(const Rational& q, unsigned long shift) {
  Integer num = q.get_num();
  mpz_mul_2exp(num.get_mpz_t(), num.get_mpz_t(), shift);
  Integer out;
  mpz_cdiv_q(out.get_mpz_t(), num.get_mpz_t(), q.get_den_mpz_t());
  return out;
}
inline Rational dyadic(const Integer& m, unsigned long bits) {
  Integer den = 1;
  mpz_mul_2exp(den.get_mpz_t(), den.get_mpz_t(), bits);
  Rational r(m, den);
  r.canonicalize();
  return r;
}
}  // namespace detail

/// Dyadic rational r = m / 2^bits with r^k <= q (q >= 0), the largest such.
inline Rational root_down(const Rational& q, unsigned long k, unsigned long bits = 64) {
  if (q < 0) throw Error("root of a negative rational");
  if (k == 0) throw Error("zeroth root");
  Integer n = detail::floor_scaled(q, k * bits);
  Integer r;
  mpz_root(r.get_mpz_t(), n.get_mpz_t(), k);
  return detail::dyadic(r, bits);
}

/// Dyadic rational r = m / 2^bits with r^k >= q (q >= 0), the smallest such.
inline Rational root_up(const Rational& q, unsigned long k, unsigned long bits = 64) {
  if (q < 0) throw Error("root of a negative rational");
  if (k == 0) throw Error("zeroth root");
  Integer n = detail::ceil_scaled(q, k * bits);
  Integer r;
  const bool exact_root = mpz_root(r.get_mpz_t(), n.get_mpz_t(), k) != 0;
  if (!exact_root) r += 1;
  return detail::dyadic(r, bits);
}

}  // namespace gnorm
