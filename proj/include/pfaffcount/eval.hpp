#pragma once

#include <vector>

#include "pfaffcount/chain.hpp"

namespace pfc {

// Resource budget for certified computations. Defaults are generous enough
// for the test corpus; the CLI can tighten them via PFAFCOUNT_BUDGET.
struct Budget {
  long max_steps = 4096;        // ODE integration steps
  long max_refine = 64;         // precision doubling rounds
  long max_boxes = 200000;      // subdivision boxes in certifiers
  unsigned long max_points = 40000000;  // enumeration cap
  static Budget& global() {
    static Budget b;
    return b;
  }
};

namespace detail {

inline Interval eval_builtin(const Builtin& b, const std::vector<Interval>& x,
                             long prec) {
  switch (b.kind) {
    case BuiltinKind::ExpLinear: {
      Interval arg(Rat(0));
      for (size_t i = 0; i < b.linear.size(); ++i)
        arg = arg + b.linear[i].enclosure(prec + 8) * x[i];
      return exp_i(round_out(arg, prec + 8), prec);
    }
    case BuiltinKind::InvSqrtOnePlusSq:
      return rsqrt_i(Interval(Rat(1)) + pow_i(x[b.var], 2), prec);
    case BuiltinKind::InvSqrtOneMinusSq: {
      Interval u = Interval(Rat(1)) - pow_i(x[b.var], 2);
      if (!(u.lo > 0)) throw DomainViolation("1/sqrt(1-x^2): |x| >= 1");
      return rsqrt_i(u, prec);
    }
    case BuiltinKind::InvOnePlusSq:
      return round_out(recip(Interval(Rat(1)) + pow_i(x[b.var], 2)), prec);
    case BuiltinKind::InvOneMinusSq: {
      Interval u = Interval(Rat(1)) - pow_i(x[b.var], 2);
      if (u.contains_zero()) throw DomainViolation("1/(1-x^2): |x| = 1");
      return round_out(recip(u), prec);
    }
    case BuiltinKind::Reciprocal:
      if (x[b.var].contains_zero())
        throw DomainViolation("reciprocal at interval containing 0");
      return round_out(recip(x[b.var]), prec);
  }
  throw Error("unreachable builtin kind");
}

}  // namespace detail

// Evaluation support for a validated chain: certified values at points and
// over boxes, and interval Taylor series along lines / over planar boxes.
// Builtin chain functions go through closed forms; anchored ones through
// validated integration of the triangular system with Lagrange remainders.
class ChainEval {
 public:
  explicit ChainEval(ValidatedChain c) : chain_(std::move(c)) {}

  const ValidatedChain& chain() const { return chain_; }

  // Enclosures of all chain functions over an axis-aligned box (which may be
  // a point). Box must lie in the chain domain.
  std::vector<Interval> values_over(const std::vector<Interval>& box,
                                    long prec) const {
    const PfaffianChain& ch = chain_.get();
    if (!ch.domain.contains_box(box))
      throw DomainViolation("chain evaluation outside domain");
    std::vector<Interval> out;
    out.reserve(ch.r);
    bool any_anchor = false;
    for (const auto& in : ch.init)
      if (std::holds_alternative<Anchor>(in)) any_anchor = true;
    if (!any_anchor) {
      for (int j = 0; j < ch.r; ++j) {
        if (std::holds_alternative<Builtin>(ch.init[j]))
          out.push_back(
              detail::eval_builtin(std::get<Builtin>(ch.init[j]), box, prec));
        else
          out.push_back(std::get<CustomInit>(ch.init[j]).range(box, prec));
      }
      return out;
    }
    return integrated_values(box, prec);
  }

  // Interval Taylor series of every chain function along the affine line
  // t -> base + t*dir, for t in tbox. Coefficient k encloses g^(k)/k! over
  // the segment.
  std::vector<Series1> series_line(const std::vector<Rat>& base,
                                   const std::vector<Rat>& dir,
                                   const Interval& tbox, int ord,
                                   long prec) const {
    const PfaffianChain& ch = chain_.get();
    std::vector<Interval> seg_box(ch.n);
    for (int i = 0; i < ch.n; ++i) {
      Interval xi = Interval(base[i]) + dir[i] * tbox;
      seg_box[i] = xi;
    }
    std::vector<Interval> ranges = values_over(seg_box, prec);
    // coordinate series: x_i(t) = [range] + dir_i * t
    std::vector<Series1> args;
    for (int i = 0; i < ch.n; ++i) {
      Series1 s = Series1::constant(seg_box[i], ord);
      if (ord >= 1) s.c[1] = Interval(dir[i]);
      args.push_back(s);
    }
    for (int j = 0; j < ch.r; ++j)
      args.push_back(Series1::constant(ranges[j], ord));
    // directional defining polynomials: g_j' = sum_i dir_i P_{i,j}
    for (int k = 0; k < ord; ++k) {
      for (int j = 0; j < ch.r; ++j) {
        Series1 rhs = Series1::zero(ord);
        for (int i = 0; i < ch.n; ++i) {
          if (dir[i] == 0) continue;
          Series1 t = ch.defining[j][i].eval_series1(args, prec);
          rhs = rhs + Interval(dir[i]) * t;
        }
        args[ch.n + j].c[k + 1] =
            round_out(Interval::unchecked(rhs.c[k].lo / (k + 1), rhs.c[k].hi / (k + 1)),
                      prec);
      }
    }
    return std::vector<Series1>(args.begin() + ch.n, args.end());
  }

  // Interval Taylor series of every chain function over a planar box
  // (chain with n == 2), plus the two coordinate series, all to total
  // order <= ord.
  std::vector<Series2> series_box2(const Interval& X, const Interval& Y,
                                   int ord, long prec) const {
    const PfaffianChain& ch = chain_.get();
    if (ch.n != 2) throw UnsupportedDimensions("series_box2 needs n = 2");
    std::vector<Interval> box{X, Y};
    std::vector<Interval> ranges = values_over(box, prec);
    std::vector<Series2> args;
    args.push_back(Series2::coord_x(X, ord));
    args.push_back(Series2::coord_y(Y, ord));
    for (int j = 0; j < ch.r; ++j)
      args.push_back(Series2::constant(ranges[j], ord));
    for (int s = 0; s < ord; ++s) {
      for (int j = 0; j < ch.r; ++j) {
        Series2 px = ch.defining[j][0].eval_series2(args, prec);
        Series2 py = ch.defining[j][1].eval_series2(args, prec);
        // fill all coefficients of total order s+1
        for (int a2 = 0; a2 <= s + 1; ++a2) {
          int a1 = s + 1 - a2;
          Interval v;
          if (a1 >= 1) {
            v = px.at(a1 - 1, a2);
            v = Interval::unchecked(v.lo / a1, v.hi / a1);
          } else {
            v = py.at(0, a2 - 1);
            v = Interval::unchecked(v.lo / a2, v.hi / a2);
          }
          args[2 + j].at(a1, a2) = round_out(v, prec);
        }
      }
    }
    return std::vector<Series2>(args.begin() + 2, args.end());
  }

 private:
  ValidatedChain chain_;

  // --- validated integration fallback ---------------------------------

  struct LineSystem {
    // pulled-back polynomials: dY_j/dt = Q_j(t-coords..., Y)
    const PfaffianChain* ch;
    std::vector<Rat> base, dir;
  };

  std::vector<Interval> anchor_values() const {
    const PfaffianChain& ch = chain_.get();
    std::vector<Interval> Y(ch.r, Interval(Rat(0)));
    for (int j = 0; j < ch.r; ++j) {
      if (std::holds_alternative<CustomInit>(ch.init[j]))
        throw PrecisionUnreachable("anchored chains cannot mix custom inits");
      if (std::holds_alternative<Anchor>(ch.init[j]))
        Y[j] = std::get<Anchor>(ch.init[j]).value;
      else {
        // mixed chains: builtin entries get certified values at the anchor
        // point of the first anchored entry
        const Anchor* a = nullptr;
        for (const auto& in : ch.init)
          if (std::holds_alternative<Anchor>(in)) a = &std::get<Anchor>(in);
        if (!a) throw Error("anchor_values: no anchor present");
        std::vector<Interval> pt;
        for (const Rat& v : a->point) pt.push_back(Interval(v));
        Y[j] = detail::eval_builtin(std::get<Builtin>(ch.init[j]), pt, 96);
      }
    }
    return Y;
  }

  std::vector<Rat> anchor_point() const {
    const PfaffianChain& ch = chain_.get();
    for (const auto& in : ch.init)
      if (std::holds_alternative<Anchor>(in)) return std::get<Anchor>(in).point;
    throw Error("anchor_point: chain has no anchor");
  }

  // One validated step of size h from (t0, Y enclosures); returns the new
  // values and an enclosure over the step. Throws PrecisionUnreachable when
  // the a-priori box cannot be established.
  struct StepResult {
    std::vector<Interval> end_values;
    std::vector<Interval> over_step;
  };

  StepResult taylor_step(const std::vector<Rat>& base,
                         const std::vector<Rat>& dir, const Rat& t0, Rat& h,
                         const std::vector<Interval>& Y, int ord,
                         long prec) const {
    const PfaffianChain& ch = chain_.get();
    const Budget& budget = Budget::global();
    for (long attempt = 0; attempt < 24; ++attempt, h /= 2) {
      Interval tstep = Interval(t0, t0 + h);
      // a-priori enclosure by Picard iteration
      std::vector<Interval> box(ch.n);
      for (int i = 0; i < ch.n; ++i) box[i] = Interval(base[i]) + dir[i] * tstep;
      std::vector<Interval> A(Y);
      Rat w0 = max_rat(Rat(1, 1024), h);
      for (auto& a : A) a = widen(a, w0);
      bool ok = false;
      for (int it = 0; it < 16; ++it) {
        std::vector<Interval> args = box;
        args.insert(args.end(), A.begin(), A.end());
        std::vector<Interval> Anew(ch.r);
        bool inside = true;
        for (int j = 0; j < ch.r; ++j) {
          Interval rhs(Rat(0));
          for (int i = 0; i < ch.n; ++i) {
            if (dir[i] == 0) continue;
            rhs = rhs + Interval(dir[i]) * ch.defining[j][i].eval(args, prec);
          }
          Interval incr = Interval(Rat(0), h) * rhs;
          Anew[j] = round_out(Y[j] + hull(incr, Interval(Rat(0))), prec);
          if (!A[j].contains(Anew[j])) inside = false;
        }
        if (inside) {
          A = Anew;
          ok = true;
          break;
        }
        for (int j = 0; j < ch.r; ++j) A[j] = widen(hull(A[j], Anew[j]), w0);
      }
      if (!ok) continue;  // halve h and retry
      // Taylor polynomial at t0 with Lagrange remainder over the step.
      std::vector<Series1> point_args, box_args;
      for (int i = 0; i < ch.n; ++i) {
        Series1 sp = Series1::constant(Interval(base[i]) + dir[i] * Interval(t0), ord);
        if (ord >= 1) sp.c[1] = Interval(dir[i]);
        point_args.push_back(sp);
        Series1 sb = Series1::constant(box[i], ord);
        if (ord >= 1) sb.c[1] = Interval(dir[i]);
        box_args.push_back(sb);
      }
      for (int j = 0; j < ch.r; ++j) {
        point_args.push_back(Series1::constant(Y[j], ord));
        box_args.push_back(Series1::constant(A[j], ord));
      }
      auto advance = [&](std::vector<Series1>& args) {
        for (int k = 0; k < ord; ++k)
          for (int j = 0; j < ch.r; ++j) {
            Series1 rhs = Series1::zero(ord);
            for (int i = 0; i < ch.n; ++i) {
              if (dir[i] == 0) continue;
              rhs = rhs + Interval(dir[i]) * ch.defining[j][i].eval_series1(args, prec);
            }
            args[ch.n + j].c[k + 1] = round_out(
                Interval::unchecked(rhs.c[k].lo / (k + 1), rhs.c[k].hi / (k + 1)),
                prec);
          }
      };
      advance(point_args);
      advance(box_args);
      StepResult res;
      res.end_values.resize(ch.r);
      res.over_step.resize(ch.r);
      for (int j = 0; j < ch.r; ++j) {
        Interval acc(Rat(0));
        Interval hpow(Rat(1));
        for (int k = 0; k < ord; ++k) {
          acc = acc + point_args[ch.n + j].c[k] * hpow;
          hpow = hpow * Interval(h);
        }
        Interval rem = box_args[ch.n + j].c[ord] * hpow;
        res.end_values[j] = round_out(acc + rem, prec);
        res.over_step[j] = A[j];
      }
      (void)budget;
      return res;
    }
    throw PrecisionUnreachable("validated step failed to contract");
  }

  // March along the segment anchor -> each corner/point of the box, hulling
  // step enclosures. For n == 1 this is exact stepping; for n >= 2 we march
  // to the box center and then establish a Picard enclosure over the box.
  std::vector<Interval> integrated_values(const std::vector<Interval>& box,
                                          long prec) const {
    const PfaffianChain& ch = chain_.get();
    std::vector<Rat> from = anchor_point();
    std::vector<Interval> Y = anchor_values();
    bool point_box = true;
    for (const auto& b : box) point_box = point_box && b.is_point();

    if (ch.n == 1) {
      // integrate to box.lo, then across the box hulling a-prioris
      std::vector<Interval> at_lo = integrate_to(from, {box[0].lo}, Y, prec);
      if (point_box) return at_lo;
      std::vector<Interval> acc = at_lo;
      std::vector<Rat> base{box[0].lo};
      std::vector<Rat> dir{Rat(1)};
      Rat t = 0, tmax = box[0].width();
      std::vector<Interval> cur = at_lo;
      long steps = 0;
      while (t < tmax) {
        if (++steps > Budget::global().max_steps)
          throw PrecisionUnreachable("integration step budget exhausted");
        Rat h = min_rat(tmax - t, max_rat(rat(1, 16), (tmax - t) / 8));
        StepResult sr = taylor_step(base, dir, t, h, cur, 8, prec);
        for (int j = 0; j < ch.r; ++j) acc[j] = hull(acc[j], sr.over_step[j]);
        cur = sr.end_values;
        t += h;
      }
      return acc;
    }
    // n >= 2: integrate along axes to the center, then Picard over the box.
    std::vector<Rat> center(ch.n);
    for (int i = 0; i < ch.n; ++i) center[i] = box[i].mid();
    std::vector<Interval> Yc = integrate_to(from, center, Y, prec);
    if (point_box) return Yc;
    std::vector<Interval> A = Yc;
    Rat rad(0);
    for (const auto& b : box) rad = max_rat(rad, b.width() / 2);
    for (auto& a : A) a = widen(a, max_rat(rad, rat(1, 1024)));
    for (int it = 0; it < 40; ++it) {
      std::vector<Interval> args = box;
      args.insert(args.end(), A.begin(), A.end());
      std::vector<Interval> Anew(ch.r);
      bool inside = true;
      for (int j = 0; j < ch.r; ++j) {
        Interval spread(Rat(0));
        for (int i = 0; i < ch.n; ++i) {
          Interval p = ch.defining[j][i].eval(args, prec);
          Rat half = box[i].width() / 2;
          spread = spread + Interval(Rat(-1), Rat(1)) * (half * p);
        }
        Anew[j] = round_out(Yc[j] + spread, prec);
        if (!A[j].contains(Anew[j])) inside = false;
      }
      if (inside) return Anew;
      for (int j = 0; j < ch.r; ++j)
        A[j] = widen(hull(A[j], Anew[j]), rat(1, 64));
    }
    throw PrecisionUnreachable("box enclosure fixpoint failed");
  }

  std::vector<Interval> integrate_to(const std::vector<Rat>& from,
                                     const std::vector<Rat>& to,
                                     std::vector<Interval> Y, long prec) const {
    const PfaffianChain& ch = chain_.get();
    // axis-by-axis legs keep each leg univariate in t
    std::vector<Rat> cur = from;
    for (int axis = 0; axis < ch.n; ++axis) {
      if (cur[axis] == to[axis]) continue;
      std::vector<Rat> dir(ch.n, Rat(0));
      Rat len = to[axis] - cur[axis];
      dir[axis] = len < 0 ? Rat(-1) : Rat(1);
      Rat tmax = abs_rat(len);
      Rat t = 0;
      long steps = 0;
      while (t < tmax) {
        if (++steps > Budget::global().max_steps)
          throw PrecisionUnreachable("integration step budget exhausted");
        Rat h = min_rat(tmax - t, max_rat(rat(1, 16), (tmax - t) / 8));
        StepResult sr = taylor_step(cur, dir, t, h, Y, 10, prec);
        Y = sr.end_values;
        t += h;
      }
      cur[axis] = to[axis];
    }
    return Y;
  }
};

// Certified evaluation of a Pfaffian function over a box or at a point.
inline Interval eval_over(const PfaffianFunction& f,
                          const std::vector<Interval>& box, long prec) {
  ChainEval ev(f.chain);
  std::vector<Interval> args = box;
  std::vector<Interval> vals = ev.values_over(box, prec);
  args.insert(args.end(), vals.begin(), vals.end());
  return f.superposition.eval(args, prec);
}

// Enclosure of f at an exact rational point with width <= target_width.
inline Interval eval_at(const PfaffianFunction& f, const std::vector<Rat>& point,
                        const Rat& target_width) {
  const PfaffianChain& ch = f.chain.get();
  if (!ch.domain.contains_point(point))
    throw DomainViolation("eval point outside chain domain");
  std::vector<Interval> box;
  for (const Rat& v : point) box.push_back(Interval(v));
  long prec = 64;
  for (long round = 0; round < Budget::global().max_refine; ++round, prec *= 2) {
    Interval e = eval_over(f, box, prec);
    if (e.width() <= target_width) return e;
  }
  throw PrecisionUnreachable("eval_at: target width not reached");
}

}  // namespace pfc
