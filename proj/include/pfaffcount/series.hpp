#pragma once

#include <vector>

#include "pfaffcount/interval.hpp"

namespace pfc {

// Truncated Taylor series with interval coefficients, used in "interval AD"
// mode: coefficient k of a Series1 for f over a box X encloses f^(k)(x)/k!
// for every x in X. Compositions follow the usual truncated-series rules,
// with the inner constant term zeroed; this keeps every coefficient a valid
// enclosure as long as outer coefficients are taken over the inner range.
struct Series1 {
  std::vector<Interval> c;  // c[k], k = 0..order

  int order() const { return static_cast<int>(c.size()) - 1; }
  static Series1 zero(int ord) {
    Series1 s;
    s.c.assign(ord + 1, Interval(Rat(0)));
    return s;
  }
  static Series1 constant(const Interval& v, int ord) {
    Series1 s = zero(ord);
    s.c[0] = v;
    return s;
  }
  // identity around a box: value ranges over X, derivative 1.
  static Series1 identity(const Interval& X, int ord) {
    Series1 s = zero(ord);
    s.c[0] = X;
    if (ord >= 1) s.c[1] = Interval(Rat(1));
    return s;
  }
  void round(long prec) {
    for (auto& v : c) v = round_out(v, prec);
  }
};

inline Series1 operator+(const Series1& a, const Series1& b) {
  Series1 r = Series1::zero(a.order());
  for (int k = 0; k <= a.order(); ++k) r.c[k] = a.c[k] + b.c[k];
  return r;
}
inline Series1 operator-(const Series1& a, const Series1& b) {
  Series1 r = Series1::zero(a.order());
  for (int k = 0; k <= a.order(); ++k) r.c[k] = a.c[k] - b.c[k];
  return r;
}
inline Series1 operator*(const Interval& v, const Series1& a) {
  Series1 r = Series1::zero(a.order());
  for (int k = 0; k <= a.order(); ++k) r.c[k] = v * a.c[k];
  return r;
}
inline Series1 operator*(const Series1& a, const Series1& b) {
  int ord = a.order();
  Series1 r = Series1::zero(ord);
  for (int i = 0; i <= ord; ++i)
    for (int j = 0; i + j <= ord; ++j) r.c[i + j] = r.c[i + j] + a.c[i] * b.c[j];
  return r;
}

inline Series1 s_pow(const Series1& a, unsigned k, long prec) {
  Series1 r = Series1::constant(Interval(Rat(1)), a.order());
  Series1 base = a;
  unsigned e = k;
  while (e > 0) {
    if (e & 1u) {
      r = r * base;
      r.round(prec);
    }
    e >>= 1;
    if (e) {
      base = base * base;
      base.round(prec);
    }
  }
  return r;
}

// 1 / a, requires a.c[0] bounded away from 0.
inline Series1 s_recip(const Series1& a, long prec) {
  int ord = a.order();
  Series1 r = Series1::zero(ord);
  Interval inv0 = recip(a.c[0]);
  r.c[0] = inv0;
  for (int k = 1; k <= ord; ++k) {
    Interval acc(Rat(0));
    for (int j = 1; j <= k; ++j) acc = acc + a.c[j] * r.c[k - j];
    r.c[k] = round_out(-(inv0 * acc), prec);
  }
  return r;
}

// g(f): univariate composition. Coefficients of g must be valid enclosures of
// g^(j)/j! over the range of f (i.e. over f.c[0]); f's constant term is
// dropped before substitution.
inline Series1 s_compose(const Series1& g, const Series1& f, long prec) {
  int ord = f.order();
  Series1 delta = f;
  delta.c[0] = Interval(Rat(0));
  Series1 acc = Series1::constant(g.c[g.order()], ord);
  for (int j = g.order() - 1; j >= 0; --j) {
    acc = acc * delta;
    acc.c[0] = acc.c[0] + g.c[j];
    acc.round(prec);
  }
  return acc;
}

// Functional inverse: given series of G at a point with G'(x) = c[1] bounded
// away from 0, returns the series of G^{-1} at G(x) (constant term given).
inline Series1 s_invert(const Series1& g, const Interval& inv_value, long prec) {
  int ord = g.order();
  Series1 r = Series1::zero(ord);
  r.c[0] = inv_value;
  if (ord >= 1) r.c[1] = recip(g.c[1]);
  // Solve g(r(t)) = g0 + t order by order.
  for (int k = 2; k <= ord; ++k) {
    // coefficient of t^k in sum_{j>=1} g_j * (r - r0)^j must vanish
    Series1 delta = r;
    delta.c[0] = Interval(Rat(0));
    // Unknown r.c[k] appears only through g_1 * r_k; compute the rest.
    Series1 acc = Series1::zero(ord);
    Series1 p = delta;
    for (int j = 1; j <= ord; ++j) {
      if (j > 1) {
        p = p * delta;
        p.round(prec);
      }
      acc = acc + g.c[j] * p;
    }
    Interval resid = acc.c[k];  // currently with r_k = 0 contribution g1*r_k missing? no: r.c[k]=0 so p holds it
    r.c[k] = round_out(-(resid * recip(g.c[1])), prec);
  }
  return r;
}

// --- bivariate -------------------------------------------------------------

// Triangular storage: coefficients c[a1][a2] for a1 + a2 <= order.
struct Series2 {
  int ord;
  std::vector<Interval> v;  // index (a1, a2) -> offset

  static int tri(int ord) { return (ord + 1) * (ord + 2) / 2; }
  int idx(int a1, int a2) const {
    int s = a1 + a2;
    return s * (s + 1) / 2 + a2;
  }
  const Interval& at(int a1, int a2) const { return v[idx(a1, a2)]; }
  Interval& at(int a1, int a2) { return v[idx(a1, a2)]; }

  static Series2 zero(int ord) {
    Series2 s;
    s.ord = ord;
    s.v.assign(tri(ord), Interval(Rat(0)));
    return s;
  }
  static Series2 constant(const Interval& c, int ord) {
    Series2 s = zero(ord);
    s.at(0, 0) = c;
    return s;
  }
  static Series2 coord_x(const Interval& X, int ord) {
    Series2 s = zero(ord);
    s.at(0, 0) = X;
    if (ord >= 1) s.at(1, 0) = Interval(Rat(1));
    return s;
  }
  static Series2 coord_y(const Interval& Y, int ord) {
    Series2 s = zero(ord);
    s.at(0, 0) = Y;
    if (ord >= 1) s.at(0, 1) = Interval(Rat(1));
    return s;
  }
  void round(long prec) {
    for (auto& x : v) x = round_out(x, prec);
  }
};

inline Series2 operator+(const Series2& a, const Series2& b) {
  Series2 r = Series2::zero(a.ord);
  for (size_t i = 0; i < r.v.size(); ++i) r.v[i] = a.v[i] + b.v[i];
  return r;
}
inline Series2 operator-(const Series2& a, const Series2& b) {
  Series2 r = Series2::zero(a.ord);
  for (size_t i = 0; i < r.v.size(); ++i) r.v[i] = a.v[i] - b.v[i];
  return r;
}
inline Series2 operator*(const Interval& c, const Series2& a) {
  Series2 r = Series2::zero(a.ord);
  for (size_t i = 0; i < r.v.size(); ++i) r.v[i] = c * a.v[i];
  return r;
}
inline Series2 operator*(const Series2& a, const Series2& b) {
  int ord = a.ord;
  Series2 r = Series2::zero(ord);
  for (int s1 = 0; s1 <= ord; ++s1)
    for (int a2 = 0; a2 <= s1; ++a2) {
      int a1 = s1 - a2;
      const Interval& av = a.at(a1, a2);
      if (av.lo == 0 && av.hi == 0) continue;
      for (int s2 = 0; s1 + s2 <= ord; ++s2)
        for (int b2 = 0; b2 <= s2; ++b2) {
          int b1 = s2 - b2;
          const Interval& bv = b.at(b1, b2);
          if (bv.lo == 0 && bv.hi == 0) continue;
          r.at(a1 + b1, a2 + b2) = r.at(a1 + b1, a2 + b2) + av * bv;
        }
    }
  return r;
}

inline Series2 s2_pow(const Series2& a, unsigned k, long prec) {
  Series2 r = Series2::constant(Interval(Rat(1)), a.ord);
  Series2 base = a;
  unsigned e = k;
  while (e > 0) {
    if (e & 1u) {
      r = r * base;
      r.round(prec);
    }
    e >>= 1;
    if (e) {
      base = base * base;
      base.round(prec);
    }
  }
  return r;
}

inline Series2 s2_recip(const Series2& a, long prec) {
  int ord = a.ord;
  Series2 r = Series2::zero(ord);
  Interval inv0 = recip(a.at(0, 0));
  Series2 delta = a;
  delta.at(0, 0) = Interval(Rat(0));
  // 1/(a0 + d) = inv0 * sum (-d*inv0)^j
  Series2 t = Series2::constant(Interval(Rat(1)), ord);
  Interval minus_inv0 = -inv0;
  Series2 nd = minus_inv0 * delta;
  Series2 acc = Series2::constant(Interval(Rat(1)), ord);
  for (int j = 1; j <= ord; ++j) {
    acc = acc * nd;
    acc.round(prec);
    t = t + acc;
  }
  return inv0 * t;
}

// g univariate composed with bivariate f: g coefficients valid over range of f.
inline Series2 s2_compose1(const Series1& g, const Series2& f, long prec) {
  int ord = f.ord;
  Series2 delta = f;
  delta.at(0, 0) = Interval(Rat(0));
  Series2 acc = Series2::constant(g.c[g.order()], ord);
  for (int j = g.order() - 1; j >= 0; --j) {
    acc = acc * delta;
    acc.at(0, 0) = acc.at(0, 0) + g.c[j];
    acc.round(prec);
  }
  return acc;
}

// Bivariate outer composed with two bivariate inners (u, v): outer
// coefficients must be valid over (range u, range v).
inline Series2 s2_compose2(const Series2& g, const Series2& u, const Series2& v,
                           long prec) {
  int ord = u.ord;
  Series2 du = u, dv = v;
  du.at(0, 0) = Interval(Rat(0));
  dv.at(0, 0) = Interval(Rat(0));
  // Precompute powers.
  std::vector<Series2> pu(g.ord + 1, Series2::constant(Interval(Rat(1)), ord));
  std::vector<Series2> pv(g.ord + 1, Series2::constant(Interval(Rat(1)), ord));
  for (int i = 1; i <= g.ord; ++i) {
    pu[i] = pu[i - 1] * du;
    pu[i].round(prec);
    pv[i] = pv[i - 1] * dv;
    pv[i].round(prec);
  }
  Series2 acc = Series2::zero(ord);
  for (int s = 0; s <= g.ord; ++s)
    for (int b2 = 0; b2 <= s; ++b2) {
      int b1 = s - b2;
      const Interval& c = g.at(b1, b2);
      if (c.lo == 0 && c.hi == 0) continue;
      Series2 term = pu[b1] * pv[b2];
      acc = acc + c * term;
    }
  acc.round(prec);
  return acc;
}

// Partial derivative as a series op: coefficient of d/dx at (a1,a2) is
// (a1+1)*c[a1+1][a2]; the result has order ord-1 (padded to keep sizes).
inline Series2 s2_dx(const Series2& a) {
  Series2 r = Series2::zero(a.ord);
  for (int s = 0; s < a.ord; ++s)
    for (int a2 = 0; a2 <= s; ++a2) {
      int a1 = s - a2;
      r.at(a1, a2) = Rat(a1 + 1) * a.at(a1 + 1, a2);
    }
  return r;
}
inline Series2 s2_dy(const Series2& a) {
  Series2 r = Series2::zero(a.ord);
  for (int s = 0; s < a.ord; ++s)
    for (int a2 = 0; a2 <= s; ++a2) {
      int a1 = s - a2;
      r.at(a1, a2) = Rat(a2 + 1) * a.at(a1, a2 + 1);
    }
  return r;
}

inline Series1 s_dx(const Series1& a) {
  Series1 r = Series1::zero(a.order());
  for (int k = 0; k < a.order(); ++k) r.c[k] = Rat(k + 1) * a.c[k + 1];
  return r;
}

}  // namespace pfc
