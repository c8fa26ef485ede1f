#pragma once

#include <gmpxx.h>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "pfaffcount/errors.hpp"

namespace pfc {

using Int = mpz_class;
using Rat = mpq_class;

inline Rat rat(long n, long d = 1) {
  Rat q(n, d);
  q.canonicalize();
  return q;
}

inline Rat rat(const Int& n, const Int& d) {
  Rat q(n, d);
  q.canonicalize();
  return q;
}

inline bool is_integer(const Rat& q) { return q.get_den() == 1; }

inline Int rat_height(const Rat& q) {
  Int a = abs(q.get_num());
  const Int& b = q.get_den();
  return a > b ? a : b;
}

// 2^e as a rational, e may be negative.
inline Rat pow2(long e) {
  Int p;
  mpz_ui_pow_ui(p.get_mpz_t(), 2,
                static_cast<unsigned long>(e >= 0 ? e : -e));
  return e >= 0 ? Rat(p) : rat(Int(1), p);
}

inline Int floor_rat(const Rat& q) {
  Int r;
  mpz_fdiv_q(r.get_mpz_t(), q.get_num().get_mpz_t(), q.get_den().get_mpz_t());
  return r;
}

inline Int ceil_rat(const Rat& q) {
  Int r;
  mpz_cdiv_q(r.get_mpz_t(), q.get_num().get_mpz_t(), q.get_den().get_mpz_t());
  return r;
}

// Largest multiple of 2^-prec that is <= q (resp. smallest >= q).
inline Rat dyadic_floor(const Rat& q, long prec) {
  Rat scaled = q * pow2(prec);
  return Rat(floor_rat(scaled)) * pow2(-prec);
}

inline Rat dyadic_ceil(const Rat& q, long prec) {
  Rat scaled = q * pow2(prec);
  return Rat(ceil_rat(scaled)) * pow2(-prec);
}

inline Rat abs_rat(const Rat& q) { return q < 0 ? Rat(-q) : q; }

inline Rat max_rat(const Rat& a, const Rat& b) { return a < b ? b : a; }
inline Rat min_rat(const Rat& a, const Rat& b) { return a < b ? a : b; }

// Exact k-th root of a non-negative integer, if it is a perfect power.
inline std::optional<Int> iroot_exact(const Int& a, unsigned long k) {
  if (a < 0) return std::nullopt;
  Int r;
  int exact = mpz_root(r.get_mpz_t(), a.get_mpz_t(), k);
  if (exact != 0) return r;
  return std::nullopt;
}

// Exact k-th root of a non-negative rational, if one exists.
inline std::optional<Rat> qroot_exact(const Rat& q, unsigned long k) {
  if (q < 0) return std::nullopt;
  auto n = iroot_exact(q.get_num(), k);
  if (!n) return std::nullopt;
  auto d = iroot_exact(q.get_den(), k);
  if (!d) return std::nullopt;
  return rat(*n, *d);
}

// All reduced fractions a/b with height <= T lying in the interval, in
// ascending numeric order. Endpoints included only when open == false.
inline std::vector<Rat> rationals_in_interval(const Rat& lo, const Rat& hi,
                                              const Int& T, bool open = true,
                                              unsigned long cap = 0) {
  std::vector<Rat> out;
  if (lo > hi) return out;
  unsigned long tmax = T.get_ui();
  for (unsigned long b = 1; b <= tmax; ++b) {
    Int a_lo = ceil_rat(lo * static_cast<long>(b));
    Int a_hi = floor_rat(hi * static_cast<long>(b));
    for (Int a = a_lo; a <= a_hi; ++a) {
      if (abs(a) > T) continue;
      if (mpz_gcd_ui(nullptr, a.get_mpz_t(), b) != 1) continue;
      Rat q = rat(a, Int(b));
      if (open && (q == lo || q == hi)) continue;
      if (q < lo || q > hi) continue;
      out.push_back(q);
      if (cap && out.size() > cap)
        throw BudgetExceeded("rationals_in_interval: cap of " +
                             std::to_string(cap) + " exceeded");
    }
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

// Deterministic xorshift64* stream; all sampling in the library is seeded.
struct RandomSource {
  uint64_t state;
  explicit RandomSource(uint64_t seed = 0) : state(seed * 2685821657736338717ULL + 1442695040888963407ULL) {}

  uint64_t next() {
    state ^= state >> 12;
    state ^= state << 25;
    state ^= state >> 27;
    return state * 2685821657736338717ULL;
  }

  // Dyadic sample in (lo, hi), strictly interior, at 2^-30 granularity.
  Rat rat_in(const Rat& lo, const Rat& hi) {
    uint64_t u = next() % ((1ULL << 30) - 2) + 1;  // in [1, 2^30 - 2]
    Rat t = Rat(static_cast<long>(u)) * pow2(-30);
    return lo + t * (hi - lo);
  }

  // Rational of height <= T in (lo, hi); falls back to a dyadic if none.
  Rat small_rat_in(const Rat& lo, const Rat& hi, unsigned long T) {
    Rat x = rat_in(lo, hi);
    for (unsigned long b = T; b >= 1; --b) {
      Int a = floor_rat(x * static_cast<long>(b));
      Rat q = rat(a, Int(b));
      if (q > lo && q < hi && rat_height(q) <= static_cast<long>(T)) return q;
      q = rat(a + 1, Int(b));
      if (q > lo && q < hi && rat_height(q) <= static_cast<long>(T)) return q;
    }
    return x;
  }
};

inline std::string rat_str(const Rat& q) { return q.get_str(); }

// Parse "p/q" or "p" with optional sign; bit-exact.
inline Rat parse_rat(const std::string& s) {
  if (s.empty()) throw ParseError("empty rational literal");
  try {
    Rat q(s, 10);
    q.canonicalize();
    return q;
  } catch (const std::invalid_argument&) {
    throw ParseError("bad rational literal '" + s + "'");
  }
}

// Parse a decimal literal ("1.25", "-0.5", "3") to an exact rational.
inline Rat parse_decimal(const std::string& s) {
  auto dot = s.find('.');
  if (dot == std::string::npos) return parse_rat(s);
  std::string ip = s.substr(0, dot), fp = s.substr(dot + 1);
  bool neg = !ip.empty() && ip[0] == '-';
  if (!ip.empty() && (ip[0] == '+' || ip[0] == '-')) ip = ip.substr(1);
  if (ip.empty()) ip = "0";
  for (char c : ip + fp)
    if (!isdigit(static_cast<unsigned char>(c)))
      throw ParseError("bad decimal literal '" + s + "'");
  Int num(ip + fp, 10);
  Int den;
  mpz_ui_pow_ui(den.get_mpz_t(), 10, fp.size());
  Rat q = rat(num, den);
  return neg ? Rat(-q) : q;
}

}  // namespace pfc
