#pragma once

#include "pfaffcount/fn.hpp"

namespace pfc {

// Inverse of a certified strictly monotone univariate function on a closed
// bracket. Evaluation is monotone bisection; Taylor coefficients come from
// series inversion (valid because the forward coefficients are enclosures
// over the whole preimage bracket).
class Fn1Inverse final : public Fn1 {
 public:
  Fn1Inverse(Fn1Ptr g, Interval domain, int sign, long bisect_prec = 64)
      : g_(std::move(g)), dom_(std::move(domain)), sign_(sign),
        bisect_prec_(bisect_prec) {
    if (sign_ != 1 && sign_ != -1) throw Error("Fn1Inverse: sign must be +-1");
  }

  static Fn1Ptr certified(Fn1Ptr g, const Interval& domain, long prec) {
    int sign = certified_sign(*std::make_shared<Fn1Deriv>(g), domain, prec);
    return std::make_shared<Fn1Inverse>(std::move(g), domain, sign, prec);
  }

  Interval eval(const Interval& y, long prec) const override {
    Interval lo_pre = preimage(sign_ > 0 ? y.lo : y.hi, prec);
    Interval hi_pre = preimage(sign_ > 0 ? y.hi : y.lo, prec);
    return hull(lo_pre, hi_pre);
  }

  Series1 taylor(const Interval& y, int ord, long prec) const override {
    Interval xhat = eval(y, prec);
    Series1 g = g_->taylor(xhat, ord, prec);
    if (g.c.size() < 2 || g.c[1].contains_zero())
      throw DerivativeVanishes("Fn1Inverse: derivative enclosure hits 0");
    return s_invert(g, xhat, prec);
  }
  std::string describe() const override { return "inv(" + g_->describe() + ")"; }

 private:
  Fn1Ptr g_;
  Interval dom_;
  int sign_;
  long bisect_prec_;

  Interval preimage(const Rat& v, long prec) const {
    Rat lo = dom_.lo, hi = dom_.hi;
    long iters = 2 * prec + 32;
    for (long i = 0; i < iters && (hi - lo) > pow2(-prec); ++i) {
      // trisect so a straddling probe cannot stall the bracket
      Rat w = hi - lo;
      Rat m1 = lo + w / 3, m2 = hi - w / 3;
      Interval g1 = g_->eval(Interval(m1), prec + 8);
      Interval g2 = g_->eval(Interval(m2), prec + 8);
      bool moved = false;
      if ((sign_ > 0 && g1.hi < v) || (sign_ < 0 && g1.lo > v)) {
        lo = m1;
        moved = true;
      }
      if ((sign_ > 0 && g2.lo > v) || (sign_ < 0 && g2.hi < v)) {
        hi = m2;
        moved = true;
      }
      if (!moved) break;  // both probes straddle: evaluation-limited bracket
    }
    return Interval(lo, hi);
  }
};

// Branch of the zero set of a bivariate function: y = phi(x) on an open
// x-interval, certified by a seed table of isolating tubes and a constant
// certified sign of df/dy along the branch. Evaluation refines the tube at
// the requested x by sign bisection in y.
class Fn1Branch final : public Fn1 {
 public:
  struct Seed {
    Rat x;
    Interval y;
  };

  Fn1Branch(Fn2Ptr f, Interval xdom, std::vector<Seed> seeds, int dfdy_sign)
      : f_(std::move(f)), xdom_(std::move(xdom)), seeds_(std::move(seeds)),
        dfdy_sign_(dfdy_sign) {
    if (seeds_.empty()) throw Error("Fn1Branch: empty seed table");
  }

  const Interval& xdom() const { return xdom_; }
  const Fn2Ptr& defining() const { return f_; }
  int dfdy_sign() const { return dfdy_sign_; }

  Interval eval(const Interval& x, long prec) const override {
    Interval tube = seed_tube(x);
    // widen until f has certified opposite signs at tube edges
    Rat pad = max_rat(tube.width(), pow2(-20));
    for (int tries = 0; tries < 48; ++tries) {
      Interval lo_val = f_->eval(x, Interval(tube.lo), prec + 8);
      Interval hi_val = f_->eval(x, Interval(tube.hi), prec + 8);
      bool lo_neg = lo_val.hi < 0, lo_pos = lo_val.lo > 0;
      bool hi_neg = hi_val.hi < 0, hi_pos = hi_val.lo > 0;
      if ((lo_neg && hi_pos) || (lo_pos && hi_neg)) {
        return refine(x, tube, lo_pos, prec);
      }
      tube = widen(tube, pad);
      pad *= 2;
    }
    throw IsolationFailure("branch eval: no certified bracket at x = " +
                           interval_str(x));
  }

  Series1 taylor(const Interval& x, int ord, long prec) const override {
    Interval y0 = eval(x, prec);
    Series2 F = f_->taylor(x, hull(y0, y0), ord, prec);
    Interval fy = F.at(0, 1);
    if (fy.contains_zero())
      throw CertificationUnavailable("branch taylor: df/dy enclosure hits 0");
    // Solve f(x, u(x)) = 0 order by order; u_k enters linearly through fy.
    Series1 u = Series1::constant(y0, ord);
    Series1 xs = Series1::identity(x, ord);
    for (int k = 1; k <= ord; ++k) {
      Series1 comp = compose_f(F, xs, u, ord, prec);
      Interval uk = -(comp.c[k] * recip(fy));
      u.c[k] = round_out(uk, prec);
    }
    return u;
  }
  std::string describe() const override { return "branch"; }

 private:
  Fn2Ptr f_;
  Interval xdom_;
  std::vector<Seed> seeds_;  // ascending in x
  int dfdy_sign_;

  // Hull of the seed enclosures bracketing x (all seeds overlapping x plus
  // the nearest one on each side).
  Interval seed_tube(const Interval& x) const {
    const Seed* left = nullptr;
    const Seed* right = nullptr;
    Interval t;
    bool have = false;
    for (const auto& s : seeds_) {
      if (s.x < x.lo) left = &s;
      if (s.x > x.hi && !right) right = &s;
      if (s.x >= x.lo && s.x <= x.hi) {
        t = have ? hull(t, s.y) : s.y;
        have = true;
      }
    }
    if (left) {
      t = have ? hull(t, left->y) : left->y;
      have = true;
    }
    if (right) {
      t = have ? hull(t, right->y) : right->y;
      have = true;
    }
    if (!have) t = seeds_.front().y;
    return t;
  }

  Interval refine(const Interval& x, Interval tube, bool lo_positive,
                  long prec) const {
    for (long i = 0; i < 2 * prec + 32 && tube.width() > pow2(-prec); ++i) {
      // trisect so a probe landing exactly on the root cannot stall
      Rat w = tube.width();
      Rat m1 = tube.lo + w / 3, m2 = tube.hi - w / 3;
      Interval v1 = f_->eval(x, Interval(m1), prec + 8);
      Interval v2 = f_->eval(x, Interval(m2), prec + 8);
      bool moved = false;
      bool v1_same_as_lo = lo_positive ? (v1.lo > 0) : (v1.hi < 0);
      bool v2_same_as_hi = lo_positive ? (v2.hi < 0) : (v2.lo > 0);
      if (v1_same_as_lo) {
        tube = Interval(m1, tube.hi);
        moved = true;
      }
      if (v2_same_as_hi) {
        tube = Interval(tube.lo, m2);
        moved = true;
      }
      if (!moved) break;  // both probes straddle: evaluation-limited
    }
    return tube;
  }

  static Series1 compose_f(const Series2& F, const Series1& xs, const Series1& u,
                           int ord, long prec) {
    Series1 du = u, dx = xs;
    du.c[0] = Interval(Rat(0));
    dx.c[0] = Interval(Rat(0));
    std::vector<Series1> px(ord + 1, Series1::constant(Interval(Rat(1)), ord));
    std::vector<Series1> py(ord + 1, Series1::constant(Interval(Rat(1)), ord));
    for (int i = 1; i <= ord; ++i) {
      px[i] = px[i - 1] * dx;
      py[i] = py[i - 1] * du;
      py[i].round(prec);
    }
    Series1 acc = Series1::zero(ord);
    for (int s = 0; s <= ord; ++s)
      for (int b2 = 0; b2 <= s; ++b2) {
        int b1 = s - b2;
        const Interval& c = F.at(b1, b2);
        if (c.lo == 0 && c.hi == 0) continue;
        acc = acc + c * (px[b1] * py[b2]);
      }
    acc.round(prec);
    return acc;
  }
};

// One-sided limit of f(x, y) as y approaches an edge (a univariate handle or
// constant) from inside the cell. Certification level: enclosures are
// obtained by geometric contraction toward the edge and are inflated by the
// last observed movement; this is the recorded mesh-level certificate, with
// LimitDivergence raised when the contraction stalls.
class Fn1LimitEdge final : public Fn1 {
 public:
  // side = -1: y -> edge from below; +1: from above.
  Fn1LimitEdge(Fn2Ptr f, Fn1Ptr edge, int side, Rat start_gap)
      : f_(std::move(f)), edge_(std::move(edge)), side_(side),
        gap0_(std::move(start_gap)) {}

  Interval eval(const Interval& x, long prec) const override {
    return contract(x, 0, prec).c[0];
  }

  Series1 taylor(const Interval& x, int ord, long prec) const override {
    return contract(x, ord, prec);
  }
  std::string describe() const override { return "edge-limit"; }

 private:
  Fn2Ptr f_;
  Fn1Ptr edge_;
  int side_;
  Rat gap0_;

  Series1 contract(const Interval& x, int ord, long prec) const {
    Rat gap = gap0_;
    Series1 prev = slice(x, gap, ord, prec);
    Rat prev_move;
    bool have_move = false;
    for (int k = 0; k < 80; ++k) {
      gap /= 2;
      Series1 cur = slice(x, gap, ord, prec);
      // movement between successive slices
      Rat move(0);
      for (int i = 0; i <= ord; ++i) {
        Interval d = cur.c[i] - prev.c[i];
        move = max_rat(move, d.mag());
      }
      if (move <= pow2(-(prec / 2)) || (have_move && move <= prev_move / 2 &&
                                        move <= pow2(-16))) {
        // limit enclosure: hull of last two slices inflated by twice the
        // movement (geometric tail bound at observed rate >= 1/2)
        Series1 out = Series1::zero(ord);
        for (int i = 0; i <= ord; ++i)
          out.c[i] = widen(hull(cur.c[i], prev.c[i]), move * 2);
        return out;
      }
      if (have_move && move > prev_move && k > 24)
        throw LimitDivergence("edge limit fails to contract");
      prev_move = move;
      have_move = true;
      prev = cur;
    }
    throw LimitDivergence("edge limit budget exhausted");
  }

  Series1 slice(const Interval& x, const Rat& gap, int ord, long prec) const {
    Fn1Ptr ycurve;
    if (side_ < 0)
      ycurve = fn1_sub(edge_, fn1_const(gap));
    else
      ycurve = fn1_add(edge_, fn1_const(gap));
    Fn1Curve c(f_, fn1_id(), ycurve);
    return c.taylor(x, ord, prec);
  }
};

inline Fn1Ptr fn1_limit_edge(Fn2Ptr f, Fn1Ptr edge, int side, const Rat& gap0) {
  return std::make_shared<Fn1LimitEdge>(std::move(f), std::move(edge), side, gap0);
}

// Solve H(T, y) = u(x, y) for T between the bracket curves lo(y) < hi(y),
// where dH/dt has a certified constant sign on the bracket region. This is
// the workhorse behind the inverse-substitution patches: T(x, y) =
// H(., y)^{-1}(u(x, y)).
class Fn2SolveX final : public Fn2 {
 public:
  Fn2SolveX(Fn2Ptr H, Fn2Ptr rhs, Fn1Ptr lo, Fn1Ptr hi, int dsign)
      : H_(std::move(H)), rhs_(std::move(rhs)), lo_(std::move(lo)),
        hi_(std::move(hi)), sign_(dsign) {}

  Interval eval(const Interval& x, const Interval& y, long prec) const override {
    Interval u = rhs_->eval(x, y, prec);
    Interval bracket(lo_->eval(y, prec).lo, hi_->eval(y, prec).hi);
    Rat a = bracket.lo, b = bracket.hi;
    for (long i = 0; i < 2 * prec + 32 && (b - a) > pow2(-prec); ++i) {
      Rat w = b - a;
      Rat m1 = a + w / 3, m2 = b - w / 3;
      Interval h1 = H_->eval(Interval(m1), y, prec + 8);
      Interval h2 = H_->eval(Interval(m2), y, prec + 8);
      bool moved = false;
      if ((sign_ > 0 && h1.hi < u.lo) || (sign_ < 0 && h1.lo > u.hi)) {
        a = m1;
        moved = true;
      }
      if ((sign_ > 0 && h2.lo > u.hi) || (sign_ < 0 && h2.hi < u.lo)) {
        b = m2;
        moved = true;
      }
      if (!moved) break;
    }
    return Interval(a, b);
  }

  Series2 taylor(const Interval& x, const Interval& y, int ord,
                 long prec) const override {
    Interval T0 = eval(x, y, prec);
    Series2 HS = H_->taylor(T0, y, ord, prec);
    Series2 US = rhs_->taylor(x, y, ord, prec);
    Interval ht = HS.at(1, 0);
    if (ht.contains_zero())
      throw DerivativeVanishes("solve node: dH/dt enclosure hits 0");
    Interval inv_ht = recip(ht);
    Series2 T = Series2::constant(T0, ord);
    Series2 ycoord = Series2::coord_y(y, ord);
    for (int s = 1; s <= ord; ++s) {
      Series2 comp = s2_compose2(HS, T, ycoord, prec);
      for (int a2 = 0; a2 <= s; ++a2) {
        int a1 = s - a2;
        Interval resid = US.at(a1, a2) - comp.at(a1, a2);
        T.at(a1, a2) = round_out(resid * inv_ht, prec);
      }
    }
    return T;
  }
  std::string describe() const override { return "solve"; }

 private:
  Fn2Ptr H_, rhs_;
  Fn1Ptr lo_, hi_;
  int sign_;
};

inline Fn2Ptr fn2_solve_x(Fn2Ptr H, Fn2Ptr rhs, Fn1Ptr lo, Fn1Ptr hi, int dsign) {
  return std::make_shared<Fn2SolveX>(std::move(H), std::move(rhs), std::move(lo),
                                     std::move(hi), dsign);
}

}  // namespace pfc
