#pragma once

#include <algorithm>
#include <map>
#include <string>

#include "pfaffcount/rational.hpp"

namespace pfc {

// Closed interval with exact rational endpoints. Ring operations are exact;
// transcendental routines return enclosures with dyadic endpoints at the
// requested precision. Rounding to dyadics is explicit (round_out) so callers
// control coefficient growth.
struct Interval {
  Rat lo, hi;

  Interval() : lo(0), hi(0) {}
  explicit Interval(const Rat& v) : lo(v), hi(v) {}
  Interval(const Rat& l, const Rat& h) : lo(l), hi(h) {
    if (lo > hi) throw Error("Interval: lo > hi");
  }
  static Interval unchecked(Rat l, Rat h) {
    Interval r;
    r.lo = std::move(l);
    r.hi = std::move(h);
    return r;
  }

  bool is_point() const { return lo == hi; }
  Rat width() const { return hi - lo; }
  Rat mid() const { return (lo + hi) / 2; }
  Rat mag() const { return max_rat(abs_rat(lo), abs_rat(hi)); }
  // Largest m with |x| >= m for all x in the interval (0 if it straddles 0).
  Rat mig() const {
    if (lo > 0) return lo;
    if (hi < 0) return -hi;
    return Rat(0);
  }
  bool contains(const Rat& v) const { return lo <= v && v <= hi; }
  bool contains_zero() const { return lo <= 0 && 0 <= hi; }
  bool contains(const Interval& o) const { return lo <= o.lo && o.hi <= hi; }
  bool strictly_contains(const Interval& o) const { return lo < o.lo && o.hi < hi; }
  bool intersects(const Interval& o) const { return !(hi < o.lo || o.hi < lo); }
};

inline Interval hull(const Interval& a, const Interval& b) {
  return Interval::unchecked(min_rat(a.lo, b.lo), max_rat(a.hi, b.hi));
}

inline Interval intersect(const Interval& a, const Interval& b) {
  Rat l = max_rat(a.lo, b.lo), h = min_rat(a.hi, b.hi);
  if (l > h) throw Error("intersect: empty");
  return Interval::unchecked(l, h);
}

inline Interval operator+(const Interval& a, const Interval& b) {
  return Interval::unchecked(a.lo + b.lo, a.hi + b.hi);
}
inline Interval operator-(const Interval& a, const Interval& b) {
  return Interval::unchecked(a.lo - b.hi, a.hi - b.lo);
}
inline Interval operator-(const Interval& a) {
  return Interval::unchecked(-a.hi, -a.lo);
}
inline Interval operator*(const Interval& a, const Interval& b) {
  Rat p1 = a.lo * b.lo, p2 = a.lo * b.hi, p3 = a.hi * b.lo, p4 = a.hi * b.hi;
  return Interval::unchecked(min_rat(min_rat(p1, p2), min_rat(p3, p4)),
                             max_rat(max_rat(p1, p2), max_rat(p3, p4)));
}
inline Interval operator*(const Rat& c, const Interval& a) {
  return c >= 0 ? Interval::unchecked(c * a.lo, c * a.hi)
                : Interval::unchecked(c * a.hi, c * a.lo);
}
inline Interval operator+(const Interval& a, const Rat& c) {
  return Interval::unchecked(a.lo + c, a.hi + c);
}

inline Interval recip(const Interval& a) {
  if (a.contains_zero()) throw ZeroInImage("recip: interval contains 0");
  return Interval::unchecked(Rat(1) / a.hi, Rat(1) / a.lo);
}
inline Interval operator/(const Interval& a, const Interval& b) {
  return a * recip(b);
}

inline Interval pow_i(const Interval& a, unsigned k) {
  if (k == 0) return Interval(Rat(1));
  if (k == 1) return a;
  if (k % 2 == 0) {
    Rat m = a.mag(), g = a.mig();
    Rat lo = g, hi = m;
    Interval r(Rat(1));
    // even power: [mig^k, mag^k]
    Rat plo = 1, phi = 1;
    for (unsigned i = 0; i < k; ++i) {
      plo *= lo;
      phi *= hi;
    }
    return Interval::unchecked(plo, phi);
  }
  Rat plo = 1, phi = 1;
  for (unsigned i = 0; i < k; ++i) {
    plo *= a.lo;
    phi *= a.hi;
  }
  return Interval::unchecked(plo, phi);
}

// Outward rounding of endpoints to dyadics with denominator 2^prec.
inline Interval round_out(const Interval& a, long prec) {
  return Interval::unchecked(dyadic_floor(a.lo, prec), dyadic_ceil(a.hi, prec));
}

inline Interval widen(const Interval& a, const Rat& eps) {
  return Interval::unchecked(a.lo - eps, a.hi + eps);
}

// --- directed square roots ---------------------------------------------

// Dyadic d with d <= sqrt(q), sqrt(q) - d <= 2^-prec  (q >= 0).
inline Rat sqrt_down(const Rat& q, long prec) {
  if (q < 0) throw DomainViolation("sqrt of negative rational");
  if (q == 0) return Rat(0);
  // floor(sqrt(num * 4^prec / den)) / 2^prec, adjusted downward.
  Int scaled_num = q.get_num();
  Int four_p;
  mpz_ui_pow_ui(four_p.get_mpz_t(), 4, static_cast<unsigned long>(prec));
  scaled_num *= four_p;
  Int t;
  mpz_fdiv_q(t.get_mpz_t(), scaled_num.get_mpz_t(), q.get_den().get_mpz_t());
  Int r;
  mpz_sqrt(r.get_mpz_t(), t.get_mpz_t());
  // r <= sqrt(t) < sqrt(num*4^p/den) + 1, so r*2^-p <= sqrt(q) holds after
  // one downward correction when t underestimated.
  Rat cand = Rat(r) * pow2(-prec);
  while (cand * cand > q) cand -= pow2(-prec);
  return cand;
}

inline Rat sqrt_up(const Rat& q, long prec) {
  Rat d = sqrt_down(q, prec);
  Rat u = d + pow2(-prec);
  while (u * u < q) u += pow2(-prec);
  return u;
}

inline Interval sqrt_i(const Interval& a, long prec) {
  if (a.lo < 0) throw DomainViolation("sqrt_i: negative interval");
  return Interval::unchecked(sqrt_down(a.lo, prec), sqrt_up(a.hi, prec));
}

// 1/sqrt over an interval with positive lower bound.
inline Interval rsqrt_i(const Interval& a, long prec) {
  if (!(a.lo > 0)) throw DomainViolation("rsqrt_i: needs positive interval");
  Interval s = sqrt_i(a, prec + 8);
  return round_out(recip(s), prec);
}

// --- exp and log ---------------------------------------------------------

namespace detail {

// exp on [-1/2, 1/2] by Taylor series with a rigorous tail.
inline Interval exp_small(const Interval& x, long prec) {
  int n = static_cast<int>(prec) + 4;
  Interval term(Rat(1));
  Interval sum(Rat(1));
  for (int k = 1; k <= n; ++k) {
    term = round_out(term * x, prec + 16);
    term = Interval::unchecked(term.lo / k, term.hi / k);
    sum = sum + term;
  }
  // |R| <= |x|^{n+1}/(n+1)! * 2 for |x| <= 1/2
  Rat m = x.mag();
  Rat tail = 2;
  for (int k = 1; k <= n + 1; ++k) tail = tail * m / k;
  return round_out(widen(sum, tail), prec);
}

}  // namespace detail

// Enclosure of e = exp(1).
inline Interval euler_e(long prec) {
  // e = (e^{1/2})^2
  Interval h = detail::exp_small(Interval(rat(1, 2)), prec + 8);
  return round_out(h * h, prec);
}

inline Rat exp_up(const Rat& q, long prec);
inline Rat exp_down(const Rat& q, long prec);

// Enclosure of exp(q) for exact rational q via argument halving.
inline Interval exp_point(const Rat& q, long prec) {
  // exp(q) = exp(q/2^k)^(2^k) with |q/2^k| <= 1/2
  long k = 0;
  Rat r = abs_rat(q);
  while (r > rat(1, 2)) {
    r /= 2;
    ++k;
  }
  long guard = prec + 4 * k + 16;
  Interval base = detail::exp_small(Interval(q * pow2(-k)), guard);
  for (long i = 0; i < k; ++i) base = round_out(base * base, guard);
  return round_out(base, prec);
}

inline Interval exp_i(const Interval& x, long prec) {
  if (x.is_point()) return exp_point(x.lo, prec);
  Interval lo = exp_point(x.lo, prec), hi = exp_point(x.hi, prec);
  return Interval::unchecked(lo.lo, hi.hi);  // exp is increasing
}

// Enclosure of ln(q) for rational q > 0: q = 2^k * m with m in [2/3, 4/3),
// ln q = k ln2 + 2 artanh((m-1)/(m+1)).
inline Interval ln2_const(long prec) {
  // ln 2 = 2 artanh(1/3): sum 2/(2j+1) 3^-(2j+1)
  long n = prec / 3 + 6;
  Rat sum = 0;
  Rat p = rat(1, 3);
  Rat nine = rat(1, 9);
  for (long j = 0; j <= n; ++j) {
    sum += Rat(2) * p / (2 * j + 1);
    p *= nine;
  }
  // tail < 2 * 3^-(2n+3) / (2n+3) / (1 - 1/9)
  Rat tail = Rat(9) * p / (4 * (2 * n + 3));
  return round_out(Interval::unchecked(sum, sum + tail), prec);
}

inline Interval artanh_small(const Rat& u, long prec) {
  // |u| <= 1/2 required; artanh u = sum u^{2j+1}/(2j+1)
  if (abs_rat(u) > rat(1, 2)) throw DomainViolation("artanh_small: |u| > 1/2");
  long n = prec / 2 + 6;
  Interval sum(Rat(0));
  Interval p(u);
  Interval u2(u * u);
  for (long j = 0; j <= n; ++j) {
    Interval term = Interval::unchecked(p.lo / (2 * j + 1), p.hi / (2 * j + 1));
    if (term.lo > term.hi) std::swap(term.lo, term.hi);
    sum = sum + term;
    p = round_out(p * u2, prec + 16);
  }
  Rat tail = p.mag() * rat(4, 3);
  return round_out(widen(sum, tail), prec);
}

inline Interval ln_point(const Rat& q, long prec) {
  if (!(q > 0)) throw DomainViolation("ln of non-positive rational");
  long k = 0;
  Rat m = q;
  while (m >= rat(4, 3)) {
    m /= 2;
    ++k;
  }
  while (m < rat(2, 3)) {
    m *= 2;
    --k;
  }
  Rat u = (m - 1) / (m + 1);  // |u| <= 1/5 here
  Interval res = Rat(2) * artanh_small(u, prec + 8);
  if (k != 0) res = res + Rat(k) * ln2_const(prec + 8 + 2 * static_cast<long>(std::abs(k)));
  return round_out(res, prec);
}

inline Interval ln_i(const Interval& x, long prec) {
  Interval lo = ln_point(x.lo, prec), hi = ln_point(x.hi, prec);
  return Interval::unchecked(lo.lo, hi.hi);
}

inline Interval ln3_const(long prec) { return ln_point(Rat(3), prec); }

// --- named high-precision constants --------------------------------------

// Registry of named constants (ln2, ln3, e). Each carries a refinement
// routine; enclosures are cached per precision.
class Constants {
 public:
  static Interval get(const std::string& name, long prec) {
    if (name == "ln2") return ln2_const(prec);
    if (name == "ln3") return ln3_const(prec);
    if (name == "e") return euler_e(prec);
    throw ParseError("unknown named constant '" + name + "'");
  }
  static bool known(const std::string& name) {
    return name == "ln2" || name == "ln3" || name == "e";
  }
};

inline std::string interval_str(const Interval& a) {
  return "[" + rat_str(a.lo) + ", " + rat_str(a.hi) + "]";
}

}  // namespace pfc
