#pragma once

#include "pfaffcount/geometry.hpp"

namespace pfc {

// --- patch types -------------------------------------------------------------

// Invertible base chart of a patch: two components, one of which depends on a
// single parameter so preimages resolve by nested monotone bisection. Charts
// compose; inversion peels the stack outermost-first.
struct Chart {
  Fn2Ptr u, v;
  enum class Kind { UOfXOnly, VOfYOnly, Identity } kind = Kind::Identity;
  std::shared_ptr<const Chart> inner;

  Interval eval_u(const Interval& x, const Interval& y, long prec) const {
    if (inner) {
      Interval ix = inner->eval_u(x, y, prec), iy = inner->eval_v(x, y, prec);
      return u ? u->eval(ix, iy, prec) : ix;
    }
    return u ? u->eval(x, y, prec) : x;
  }
  Interval eval_v(const Interval& x, const Interval& y, long prec) const {
    if (inner) {
      Interval ix = inner->eval_u(x, y, prec), iy = inner->eval_v(x, y, prec);
      return v ? v->eval(ix, iy, prec) : iy;
    }
    return v ? v->eval(x, y, prec) : y;
  }

  // Solve chart(x, y) = target within (0,1)^2 to the requested width; the
  // result is an enclosure pair or failure.
  bool invert(const Interval& tx, const Interval& ty, long prec, Interval& ox,
              Interval& oy) const {
    Interval mx, my;
    if (!solve_own(tx, ty, prec, mx, my)) return false;
    if (!inner) {
      ox = mx;
      oy = my;
      return true;
    }
    return inner->invert(mx, my, prec, ox, oy);
  }

 private:
  static bool bisect_mono(const std::function<Interval(const Rat&)>& f,
                          const Rat& lo0, const Rat& hi0, const Interval& tgt,
                          long prec, Interval& out) {
    Rat a = lo0, b = hi0;
    Interval va = f(a), vb = f(b);
    int dir = va.mid() <= vb.mid() ? +1 : -1;
    for (long i = 0; i < prec + 24 && (b - a) > pow2(-prec); ++i) {
      Rat w = b - a;
      Rat m1 = a + w / 3, m2 = b - w / 3;
      Interval v1 = f(m1), v2 = f(m2);
      bool moved = false;
      if ((dir > 0 && v1.hi < tgt.lo) || (dir < 0 && v1.lo > tgt.hi)) {
        a = m1;
        moved = true;
      }
      if ((dir > 0 && v2.lo > tgt.hi) || (dir < 0 && v2.hi < tgt.lo)) {
        b = m2;
        moved = true;
      }
      if (!moved) break;
    }
    out = Interval(a, b);
    return true;
  }

  bool solve_own(const Interval& tx, const Interval& ty, long prec, Interval& ox,
                 Interval& oy) const {
    if (kind == Kind::Identity && !u && !v) {
      ox = tx;
      oy = ty;
      return true;
    }
    long p = prec;
    if (kind == Kind::UOfXOnly) {
      Interval X, Y;
      bisect_mono([&](const Rat& m) { return u ? u->eval(Interval(m), Interval(rat(1, 2)), p) : Interval(m); },
                  Rat(0), Rat(1), tx, p, X);
      bisect_mono([&](const Rat& m) { return v ? v->eval(X, Interval(m), p) : Interval(m); },
                  Rat(0), Rat(1), ty, p, Y);
      ox = X;
      oy = Y;
      return true;
    }
    // VOfYOnly
    Interval Y, X;
    bisect_mono([&](const Rat& m) { return v ? v->eval(Interval(rat(1, 2)), Interval(m), p) : Interval(m); },
                Rat(0), Rat(1), ty, p, Y);
    bisect_mono([&](const Rat& m) { return u ? u->eval(Interval(m), Y, p) : Interval(m); },
                Rat(0), Rat(1), tx, p, X);
    ox = X;
    oy = Y;
    return true;
  }
};

// C^r map from the unit interval or square with certified suprema of all
// derivatives up to the stated order. Graph-style patches carry the base
// chart for preimage searches.
struct CertifiedPatch {
  int arity = 2;
  int target_dim = 2;
  std::vector<Fn1Ptr> map1;
  std::vector<Fn2Ptr> map2;
  int order = 1;
  std::map<std::pair<int, int>, Rat> cert;  // (a1,a2) -> certified sup bound
  std::shared_ptr<const Chart> chart;       // base-coordinate chart, arity 2
  std::string construction;

  Rat cert_max() const {
    Rat m(0);
    for (const auto& [k, v] : cert) m = max_rat(m, v);
    return m;
  }
};

// Family of slice substitutions over strips of the second variable: for each
// strip i and each ordinate y inside it, the same functions phi_{i,j}(., y)
// reparameterize the slice map.
struct PatchFamily {
  std::vector<Rat> strip_cuts;  // xi_0 < ... < xi_{N+1}
  struct Strip {
    Interval yspan;
    std::vector<Fn2Ptr> subs;  // substitutions (0,1) x yspan -> (0,1)
    std::vector<CertifiedPatch> patches;  // per-sub certificates
  };
  std::vector<Strip> strips;
  Rat B;
};

// --- derivative certification --------------------------------------------------

struct CertResult {
  bool ok = false;
  Rat max_bound = Rat(0);
  std::map<std::pair<int, int>, Rat> bounds;
};

// Certified sup of |d^(a1,a2) f_c| over a box region for all |a| <= ord,
// refining adaptively until every bound closes below the goal or the box
// budget runs out. Sound either way: reported bounds always dominate.
inline CertResult certify_derivatives2(const std::vector<Fn2Ptr>& comps,
                                       int ord, const Rat& goal, long prec,
                                       long max_boxes = 512,
                                       Interval X0 = Interval(Rat(0), Rat(1)),
                                       Interval Y0 = Interval(Rat(0), Rat(1)),
                                       int a2_cap = 1 << 20) {
  struct Box {
    Interval x, y;
  };
  std::vector<Box> work{{X0, Y0}};
  CertResult res;
  std::vector<Rat> fact(ord + 1, Rat(1));
  for (int i = 2; i <= ord; ++i) fact[i] = fact[i - 1] * i;
  long used = 0;
  std::map<std::pair<int, int>, Rat> acc;
  while (!work.empty()) {
    Box b = work.back();
    work.pop_back();
    ++used;
    bool over = false;
    std::map<std::pair<int, int>, Rat> local;
    for (const auto& c : comps) {
      Series2 s = c->taylor(b.x, b.y, ord, prec);
      for (int t = 0; t <= ord; ++t)
        for (int a2 = 0; a2 <= t; ++a2) {
          int a1 = t - a2;
          if (a2 > a2_cap) continue;
          Rat bound = s.at(a1, a2).mag() * fact[a1] * fact[a2];
          auto key = std::make_pair(a1, a2);
          local[key] = max_rat(local[key], bound);
          if (bound > goal) over = true;
        }
    }
    Rat wx = b.x.width(), wy = b.y.width();
    bool can_split = max_rat(wx, wy) > pow2(-10) && used < max_boxes;
    if (over && can_split) {
      if (wx >= wy) {
        Rat m = b.x.mid();
        work.push_back({Interval(b.x.lo, m), b.y});
        work.push_back({Interval(m, b.x.hi), b.y});
      } else {
        Rat m = b.y.mid();
        work.push_back({b.x, Interval(b.y.lo, m)});
        work.push_back({b.x, Interval(m, b.y.hi)});
      }
      continue;
    }
    for (const auto& [k, v] : local) acc[k] = max_rat(acc[k], v);
    if (over) res.ok = false;
  }
  res.bounds = acc;
  res.max_bound = Rat(0);
  res.ok = true;
  for (const auto& [k, v] : acc) {
    res.max_bound = max_rat(res.max_bound, v);
    if (v > goal) res.ok = false;
  }
  return res;
}

inline CertResult certify_derivatives1(const std::vector<Fn1Ptr>& comps, int ord,
                                       const Rat& goal, long prec,
                                       long max_boxes = 256,
                                       Interval X0 = Interval(Rat(0), Rat(1))) {
  std::vector<Interval> work{X0};
  CertResult res;
  std::vector<Rat> fact(ord + 1, Rat(1));
  for (int i = 2; i <= ord; ++i) fact[i] = fact[i - 1] * i;
  long used = 0;
  std::map<std::pair<int, int>, Rat> acc;
  while (!work.empty()) {
    Interval b = work.back();
    work.pop_back();
    ++used;
    bool over = false;
    std::map<std::pair<int, int>, Rat> local;
    for (const auto& c : comps) {
      Series1 s = c->taylor(b, ord, prec);
      for (int q = 0; q <= ord; ++q) {
        Rat bound = s.c[q].mag() * fact[q];
        auto key = std::make_pair(q, 0);
        local[key] = max_rat(local[key], bound);
        if (bound > goal) over = true;
      }
    }
    if (over && b.width() > pow2(-12) && used < max_boxes) {
      Rat m = b.mid();
      work.push_back(Interval(b.lo, m));
      work.push_back(Interval(m, b.hi));
      continue;
    }
    for (const auto& [k, v] : local) acc[k] = max_rat(acc[k], v);
  }
  res.bounds = acc;
  res.max_bound = Rat(0);
  res.ok = true;
  for (const auto& [k, v] : acc) {
    res.max_bound = max_rat(res.max_bound, v);
    if (v > goal) res.ok = false;
  }
  return res;
}

// --- subdivision -----------------------------------------------------------

inline Fn1Ptr precompose_affine1(const Fn1Ptr& f, const Rat& scale,
                                 const Rat& shift) {
  return fn1_compose(f, fn1_affine(scale, shift));
}

// Affine precomposition in both parameters of an arity-2 component.
inline Fn2Ptr precompose_affine2(const Fn2Ptr& f, const Rat& sx, const Rat& ox,
                                 const Rat& sy, const Rat& oy) {
  Fn2Ptr u = fn2_from_x(fn1_affine(sx, ox));
  Fn2Ptr v = fn2_from_y(fn1_affine(sy, oy));
  return fn2_subst(f, u, v);
}

// D-fold parameter subdivision: order-q derivative bounds scale by D^-q, so
// certificates with bound B' close after D = ceil(B') pieces; the gridline
// fibers are covered by the companion constant patches.
inline long subdivide_factor(const Rat& bound) {
  if (bound <= 1) return 1;
  Int d = ceil_rat(bound);
  if (d > 64) return 64;
  return d.get_si();
}

// --- curve reparameterization --------------------------------------------------

// A curve patch: substitution psi: (0,1) -> I with all composite derivative
// bounds certified. "constant" marks endpoint patches covering single points.
struct CurvePatch {
  Fn1Ptr subst;
  bool constant = false;
  Rat const_value;
  std::map<std::pair<int, int>, Rat> cert;
  std::string construction;
};

struct CurveReparam {
  std::vector<CurvePatch> patches;
  std::vector<Rat> exceptional;  // isolated parameter values (patch endpoints)
  Rat B;
};

namespace detail {

// zero curves in one variable: isolated roots of d^q f for q = 0..qmax over
// the interval, hulled over all components, tangentials rejected upstream
inline std::vector<Rat> derivative_breaks(const std::vector<Fn1Ptr>& comps,
                                          const Interval& dom, int qmax,
                                          const Int& cap, long prec) {
  std::vector<Rat> cuts;
  for (const auto& c : comps) {
    for (int q = 0; q <= qmax; ++q) {
      Fn1Ptr g = q == 0 ? c : fn1_deriv(c, q);
      // skip exact-zero handles (their enclosure is [0,0] everywhere)
      Interval probe = g->eval(Interval(dom.mid()), prec);
      if (probe.lo == 0 && probe.hi == 0) continue;
      IsolationOptions opt;
      opt.prec = prec;
      opt.root_cap = cap;
      IsolationResult iso = isolate_zeros(*g, dom, opt);
      if (!iso.ok)
        throw IsolationFailure("derivative zero isolation: " + iso.detail);
      for (const auto& r : iso.roots) cuts.push_back(r.location.mid());
    }
  }
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
  return cuts;
}

}  // namespace detail

// r-reparameterization of a map F = (F_1..F_m): I -> (0,1)^m on an interval:
// power substitutions between the derivative zero curves, then D-fold
// subdivision until every composite certificate closes at 1.
inline CurveReparam reparam_single_curve(std::vector<Fn1Ptr> comps,
                                         const Interval& dom, int r,
                                         const Int& cap, long prec = 64) {
  if (r < 1) throw UnsupportedDimensions("reparameterization needs r >= 1");
  CurveReparam out;
  // normalize to (0,1) and include the identity among the components
  Rat a = dom.lo, w = dom.width();
  Fn1Ptr lambda = fn1_affine(w, a);
  std::vector<Fn1Ptr> base;
  base.push_back(lambda);
  for (const auto& c : comps) base.push_back(fn1_compose(c, lambda));

  // derivative zero breakpoints in (0,1) up to order r+1
  std::vector<Rat> cuts = detail::derivative_breaks(
      base, Interval(Rat(0), Rat(1)), r + 1, cap, prec);
  std::vector<Rat> grid{Rat(0)};
  for (const Rat& c : cuts) grid.push_back(c);
  grid.push_back(Rat(1));

  // candidate substitutions per gap: power maps from each end + midpoint
  struct Cand {
    Fn1Ptr s;
    bool constant = false;
    Rat cval;
    std::string log;
  };
  std::vector<Cand> cands;
  for (size_t i = 0; i + 1 < grid.size(); ++i) {
    Rat lo = grid[i], hi = grid[i + 1], mid = (lo + hi) / 2;
    if (!(hi > lo)) continue;
    // kappa: lo + (hi-lo)/2 * x^r ; zeta: hi - (hi-lo)/2 * x^r
    SparsePolynomial xr(1);
    Monomial m(1, 0);
    m[0] = r;
    xr.terms[m] = Coeff(Rat(1));
    Fn1Ptr powr = std::make_shared<Fn1Poly>(xr, std::vector<Fn1Ptr>{fn1_id()});
    Rat half = (hi - lo) / 2;
    cands.push_back({fn1_add(fn1_const(lo), fn1_compose(fn1_affine(half, Rat(0)), powr)),
                     false, Rat(0), "power-from-left"});
    cands.push_back({fn1_sub(fn1_const(hi), fn1_compose(fn1_affine(half, Rat(0)), powr)),
                     false, Rat(0), "power-from-right"});
    cands.push_back({fn1_const(mid), true, mid, "midpoint"});
    if (i + 1 < grid.size() - 1)
      cands.push_back({fn1_const(hi), true, hi, "breakpoint"});
  }
  for (const Rat& c : cuts) out.exceptional.push_back(a + w * c);

  // certification and subdivision loop
  for (const auto& cand : cands) {
    if (cand.constant) {
      CurvePatch p;
      p.subst = fn1_compose(lambda, cand.s);
      p.constant = true;
      Interval cv = p.subst->eval(Interval(rat(1, 2)), prec);
      p.const_value = cv.mid();
      p.construction = cand.log;
      out.patches.push_back(std::move(p));
      continue;
    }
    Fn1Ptr sub = cand.s;  // in normalized coordinates
    std::string log = cand.log;
    for (int round = 0; round < 8; ++round) {
      // composite components: substitution itself and every base comp o sub
      std::vector<Fn1Ptr> check{sub};
      for (size_t k = 1; k < base.size(); ++k)
        check.push_back(fn1_compose(base[k], sub));
      CertResult cr = certify_derivatives1(check, r, Rat(1), prec);
      if (cr.ok) {
        CurvePatch p;
        p.subst = fn1_compose(lambda, sub);
        p.cert = cr.bounds;
        p.construction = log;
        out.patches.push_back(std::move(p));
        break;
      }
      long D = subdivide_factor(cr.max_bound);
      if (D <= 1) D = 2;
      // keep piece 0..D-1 as separate patches; recurse via explicit loop
      std::vector<Fn1Ptr> pieces;
      for (long k = 0; k < D; ++k)
        pieces.push_back(precompose_affine1(sub, rat(1, D), rat(k, D)));
      // certify each piece; push the ones that close, keep splitting others
      std::vector<Fn1Ptr> pending;
      for (long k = 0; k < D; ++k) {
        std::vector<Fn1Ptr> check2{pieces[k]};
        for (size_t kk = 1; kk < base.size(); ++kk)
          check2.push_back(fn1_compose(base[kk], pieces[k]));
        CertResult cr2 = certify_derivatives1(check2, r, Rat(1), prec);
        if (cr2.ok) {
          CurvePatch p;
          p.subst = fn1_compose(lambda, pieces[k]);
          p.cert = cr2.bounds;
          p.construction = log + " /" + std::to_string(D) + " piece " +
                           std::to_string(k);
          out.patches.push_back(std::move(p));
        } else {
          pending.push_back(pieces[k]);
        }
        // gridline endpoint patches
        if (k > 0) {
          CurvePatch hat;
          Fn1Ptr at = fn1_compose(sub, fn1_const(rat(k, D)));
          hat.subst = fn1_compose(lambda, at);
          hat.constant = true;
          hat.const_value = hat.subst->eval(Interval(rat(1, 2)), prec).mid();
          hat.construction = log + " gridpoint";
          out.patches.push_back(std::move(hat));
        }
      }
      if (pending.empty()) break;
      if (pending.size() > 1) {
        // split independently in later rounds
        for (size_t pi = 1; pi < pending.size(); ++pi) {
          // treat by pushing back into candidate processing via recursion depth
          sub = pending[pi];
          // simple recursive handling: certify with a deeper budget
          std::vector<Fn1Ptr> check3{sub};
          for (size_t kk = 1; kk < base.size(); ++kk)
            check3.push_back(fn1_compose(base[kk], sub));
          CertResult cr3 = certify_derivatives1(check3, r, Rat(1), prec, 1024);
          if (cr3.ok) {
            CurvePatch p;
            p.subst = fn1_compose(lambda, sub);
            p.cert = cr3.bounds;
            p.construction = log + " refined";
            out.patches.push_back(std::move(p));
          } else {
            throw IsolationFailure("curve patch failed to close after split");
          }
        }
      }
      sub = pending[0];
      log += " /" + std::to_string(D);
    }
  }
  out.B = Rat(static_cast<long>(out.patches.size()));
  return out;
}

// --- uniform curve families -----------------------------------------------------

// Uniform r-reparameterization of the slice family F(., y) over a cell with
// constant or monotone boundaries. Strips come from transposed decompositions
// of the dominance products and of the stacked derivative zero sets; the
// substitutions are inverse-image maps on dominance gaps (order one) composed
// with power maps between derivative zero curves (higher order), subdivided
// until the per-strip slice certificates close at 1.
inline PatchFamily reparam_curve_family(const std::vector<Fn2Ptr>& F,
                                        const Cell& cell, int r, const Int& cap,
                                        long prec = 64) {
  if (r < 1) throw UnsupportedDimensions("reparameterization needs r >= 1");
  PatchFamily fam;
  // components with the identity adjoined
  std::vector<Fn2Ptr> comps{fn2_x()};
  comps.insert(comps.end(), F.begin(), F.end());

  // cell geometry: x spans cell.base; the family parameter is y. A constant
  // upper bound gives the box case; a certified decreasing upper boundary
  // gives the x-right-edge as its inverse.
  const Rat edge_inset = pow2(-16);
  Interval lo_at_a = cell.lower->eval(Interval(cell.base.lo + edge_inset), prec);
  Interval lo_at_b = cell.lower->eval(Interval(cell.base.hi - edge_inset), prec);
  Interval up_at_a = cell.upper->eval(Interval(cell.base.lo + edge_inset), prec);
  Interval up_at_b = cell.upper->eval(Interval(cell.base.hi - edge_inset), prec);
  bool lower_const = abs_rat(lo_at_a.mid() - lo_at_b.mid()) <= pow2(-30);
  bool upper_const = abs_rat(up_at_a.mid() - up_at_b.mid()) <= pow2(-30);
  if (!lower_const)
    throw NonMonotoneBoundary("family cells need a constant lower boundary");
  Fn1Ptr left_x = fn1_const(cell.base.lo);
  Fn1Ptr right_x;
  Interval yrange;
  if (upper_const) {
    right_x = fn1_const(cell.base.hi);
    yrange = Interval(lo_at_a.hi, up_at_a.lo);
  } else {
    int bsign;
    try {
      bsign = certified_sign(*fn1_deriv(cell.upper), cell.base, prec);
    } catch (const IsolationFailure&) {
      throw NonMonotoneBoundary("upper boundary not certified monotone");
    }
    if (bsign > 0)
      throw NonMonotoneBoundary("increasing boundary: flip coordinates first");
    right_x = std::make_shared<Fn1Inverse>(cell.upper, cell.base, bsign);
    yrange = Interval(up_at_b.hi, up_at_a.lo);
  }

  // gap structure: dominance-crossing curves of the slice derivatives plus
  // zero curves of the pure-x derivatives up to order r+1, all transposed
  // (functions x = b(y)); their breakpoints cut the parameter range.
  std::vector<Fn2Ptr> dcomps;
  for (const auto& c : comps) dcomps.push_back(fn2_partial(c, 0));
  std::vector<Rat> ycuts{yrange.lo, yrange.hi};
  std::vector<std::shared_ptr<Fn1Branch>> curves;
  Cell tcell{yrange, fn1_const(cell.base.lo), right_x};
  auto harvest = [&](const Fn2Ptr& g) {
    Interval probe =
        g->eval(Interval(cell.base.mid()), Interval(yrange.mid()), prec);
    if (probe.lo == 0 && probe.hi == 0) return;  // formally zero
    try {
      Interval rr = certified_range2(*g, cell.base, yrange, 40, 4);
      if (!rr.contains_zero()) return;  // certifiably sign-constant
    } catch (const Error&) {
    }
    BranchDecomposition dq = zero_set_decompose_core(
        fn2_transpose(g), tcell, cap, prec, 17, pow2(-16), 4096);
    for (const Rat& bp : dq.breakpoints) ycuts.push_back(bp);
    for (const auto& piece : dq.pieces)
      for (const auto& br : piece.branches) curves.push_back(br);
  };
  for (size_t k = 0; k < dcomps.size(); ++k)
    for (size_t l = k + 1; l < dcomps.size(); ++l)
      harvest(fn2_sub(fn2_mul(dcomps[k], dcomps[k]),
                      fn2_mul(dcomps[l], dcomps[l])));
  if (r >= 2) {
    for (const auto& c : comps)
      for (int q = 1; q <= r + 1; ++q) {
        Fn2Ptr g = c;
        for (int i = 0; i < q; ++i) g = fn2_partial(g, 0);
        harvest(g);
      }
  }
  std::sort(ycuts.begin(), ycuts.end());
  ycuts.erase(std::unique(ycuts.begin(), ycuts.end()), ycuts.end());

  // assemble strips; per strip the curves give the x-gaps, per gap either an
  // inverse-image substitution (r = 1) or power substitutions (r >= 2),
  // subdivided until the pure-x slice certificates close at 1.
  fam.strip_cuts = ycuts;
  for (size_t i = 0; i + 1 < ycuts.size(); ++i) {
    PatchFamily::Strip strip;
    strip.yspan = Interval(ycuts[i], ycuts[i + 1]);
    if (!(strip.yspan.width() > pow2(-20))) continue;
    std::vector<Fn1Ptr> gap_bounds{left_x};
    std::vector<std::pair<Rat, Fn1Ptr>> mids;
    for (const auto& br : curves) {
      if (br->xdom().lo > strip.yspan.lo || br->xdom().hi < strip.yspan.hi)
        continue;
      Interval v = br->eval(Interval(strip.yspan.mid()), prec);
      mids.push_back({v.mid(), br});
    }
    std::sort(mids.begin(), mids.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    for (const auto& [mv, br] : mids) gap_bounds.push_back(br);
    gap_bounds.push_back(right_x);

    Rat ymid = strip.yspan.mid();
    for (size_t gi = 0; gi + 1 < gap_bounds.size(); ++gi) {
      Fn1Ptr blo = gap_bounds[gi], bhi = gap_bounds[gi + 1];
      Interval glo = blo->eval(Interval(ymid), prec);
      Interval ghi = bhi->eval(Interval(ymid), prec);
      if (!(ghi.lo - glo.hi > pow2(-18))) continue;  // degenerate gap
      std::vector<std::pair<Fn2Ptr, std::string>> gap_subs;
      if (r == 1) {
        // dominant slice derivative on this gap, sampled then certified by
        // the closing loop; |G'| >= 1 holds because the identity competes
        Rat xprobe = (glo.hi + ghi.lo) / 2;
        size_t dom = 0;
        Rat best(-1);
        for (size_t k = 0; k < dcomps.size(); ++k) {
          Interval dv = dcomps[k]->eval(Interval(xprobe), Interval(ymid), prec);
          if (dv.mig() > best) {
            best = dv.mig();
            dom = k;
          }
        }
        if (dom == 0) {
          // identity dominates: affine onto the gap
          Fn2Ptr lo2 = fn2_from_y(blo), hi2 = fn2_from_y(bhi);
          Fn2Ptr gapw = fn2_sub(hi2, lo2);
          gap_subs.push_back(
              {fn2_add(lo2, fn2_mul(gapw, fn2_from_x(fn1_id()))), "affine-gap"});
        } else {
          Fn2Ptr G = comps[dom];
          Fn1Ptr ed_lo = fn1_add(blo, fn1_const(edge_inset));
          Fn1Ptr ed_hi = fn1_sub(bhi, fn1_const(edge_inset));
          Fn1Ptr cfun = fn1_curve(G, ed_lo, fn1_id());
          Fn1Ptr dfun = fn1_curve(G, ed_hi, fn1_id());
          Fn2Ptr rhs = fn2_add(fn2_from_y(cfun),
                               fn2_mul(fn2_from_x(fn1_id()),
                                       fn2_from_y(fn1_sub(dfun, cfun))));
          int dsign = certified_sign(
              *fn1_curve(fn2_partial(G, 0), fn1_id(), fn1_const(ymid)),
              Interval(glo.hi, ghi.lo), prec);
          gap_subs.push_back(
              {fn2_solve_x(G, rhs, blo, bhi, dsign), "inverse-image"});
        }
        if (gi > 0) gap_subs.push_back({fn2_from_y(blo), "gap-curve"});
      } else {
        SparsePolynomial xr(1);
        Monomial m(1, 0);
        m[0] = r;
        xr.terms[m] = Coeff(Rat(1));
        Fn1Ptr powr =
            std::make_shared<Fn1Poly>(xr, std::vector<Fn1Ptr>{fn1_id()});
        Fn2Ptr xpow = fn2_from_x(powr);
        Fn2Ptr lo2 = fn2_from_y(blo), hi2 = fn2_from_y(bhi);
        Fn2Ptr halfgap = fn2_mul(fn2_const(rat(1, 2)), fn2_sub(hi2, lo2));
        gap_subs.push_back({fn2_add(lo2, fn2_mul(halfgap, xpow)), "power-from-left"});
        gap_subs.push_back({fn2_sub(hi2, fn2_mul(halfgap, xpow)), "power-from-right"});
        gap_subs.push_back({fn2_add(lo2, halfgap), "midline"});
        if (gi > 0) gap_subs.push_back({fn2_from_y(blo), "gap-curve"});
      }
      for (auto& [gsub, glog] : gap_subs) {
        Fn2Ptr sub = gsub;
        std::string log = glog;
        for (int round = 0; round < 8; ++round) {
          std::vector<Fn2Ptr> check{sub};
          for (const auto& c : comps) check.push_back(fn2_subst(c, sub, fn2_y()));
          CertResult cr = certify_derivatives2(check, r, Rat(1), prec, 256,
                                               Interval(Rat(0), Rat(1)),
                                               strip.yspan, 0);
          if (cr.ok) {
            strip.subs.push_back(sub);
            CertifiedPatch p;
            p.arity = 2;
            p.map2 = {sub};
            p.order = r;
            for (const auto& [k, v] : cr.bounds)
              if (k.second == 0) p.cert[k] = v;
            p.construction = log;
            strip.patches.push_back(std::move(p));
            break;
          }
          long D = subdivide_factor(cr.max_bound);
          if (D <= 1) D = 2;
          if (round == 7 || D > 64)
            throw IsolationFailure("slice certificates failed to close");
          // subdivide in x only (slice direction), keep one level per round
          std::vector<Fn2Ptr> pieces;
          for (long k = 0; k < D; ++k)
            pieces.push_back(
                fn2_subst(sub, fn2_from_x(fn1_affine(rat(1, D), rat(k, D))),
                          fn2_y()));
          // certify all pieces now; any failure re-enters with finer split
          bool all_ok = true;
          std::vector<std::pair<Fn2Ptr, CertResult>> done;
          for (const auto& piece : pieces) {
            std::vector<Fn2Ptr> check2{piece};
            for (const auto& c : comps)
              check2.push_back(fn2_subst(c, piece, fn2_y()));
            CertResult cr2 = certify_derivatives2(check2, r, Rat(1), prec, 256,
                                                  Interval(Rat(0), Rat(1)),
                                                  strip.yspan, 0);
            if (!cr2.ok) all_ok = false;
            done.push_back({piece, cr2});
          }
          if (all_ok) {
            int k = 0;
            for (auto& [piece, cr2] : done) {
              strip.subs.push_back(piece);
              CertifiedPatch p;
              p.arity = 2;
              p.map2 = {piece};
              p.order = r;
              for (const auto& [kk, v] : cr2.bounds)
                if (kk.second == 0) p.cert[kk] = v;
              p.construction = log + " /" + std::to_string(D) + " piece " +
                               std::to_string(k++);
              strip.patches.push_back(std::move(p));
            }
            // gridpoint constants
            for (long k2 = 1; k2 < D; ++k2) {
              Fn2Ptr at = fn2_subst(sub, fn2_const(rat(k2, D)), fn2_y());
              strip.subs.push_back(at);
              CertifiedPatch p;
              p.arity = 2;
              p.map2 = {at};
              p.order = r;
              p.construction = log + " gridline";
              strip.patches.push_back(std::move(p));
            }
            break;
          }
          sub = pieces[0];
          log += " (resplit)";
        }
      }
    }
    fam.strips.push_back(std::move(strip));
  }
  fam.B = Rat(0);
  for (const auto& s : fam.strips)
    fam.B = max_rat(fam.B, Rat(static_cast<long>(s.subs.size())));
  return fam;
}

// --- unit subdivision (patch-level) ----------------------------------------------

// D-fold linear precomposition of every patch parameter, D = ceil(B'), plus
// the gridline constant patches. Order-q derivative bounds divide by D^q, so
// inputs with certificates <= B' come out with certificates <= 1.
inline std::vector<CertifiedPatch> subdivide_unit(
    const std::vector<CertifiedPatch>& patches, const Rat& bound, int r,
    long prec = 64) {
  long D = subdivide_factor(bound);
  std::vector<CertifiedPatch> out;
  for (const auto& p : patches) {
    if (D == 1) {
      out.push_back(p);
      continue;
    }
    if (p.arity == 1) {
      for (long k = 0; k < D; ++k) {
        CertifiedPatch q = p;
        q.map1.clear();
        for (const auto& c : p.map1)
          q.map1.push_back(precompose_affine1(c, rat(1, D), rat(k, D)));
        for (auto& [key, v] : q.cert) {
          Rat scale = 1;
          for (int i = 0; i < key.first; ++i) scale /= D;
          v = v * scale;
        }
        q.construction = p.construction + " /" + std::to_string(D);
        out.push_back(std::move(q));
        if (k > 0) {
          CertifiedPatch hat = p;
          hat.map1.clear();
          for (const auto& c : p.map1)
            hat.map1.push_back(fn1_compose(c, fn1_const(rat(k, D))));
          hat.construction = p.construction + " gridpoint";
          out.push_back(std::move(hat));
        }
      }
    } else {
      for (long kx = 0; kx < D; ++kx)
        for (long ky = 0; ky < D; ++ky) {
          CertifiedPatch q = p;
          q.map2.clear();
          for (const auto& c : p.map2)
            q.map2.push_back(precompose_affine2(c, rat(1, D), rat(kx, D),
                                                rat(1, D), rat(ky, D)));
          for (auto& [key, v] : q.cert) {
            Rat scale = 1;
            for (int i = 0; i < key.first + key.second; ++i) scale /= D;
            v = v * scale;
          }
          q.construction = p.construction + " /" + std::to_string(D) + "x" +
                           std::to_string(D);
          out.push_back(std::move(q));
        }
      // gridline patches: constants in one parameter
      for (long k = 1; k < D; ++k) {
        CertifiedPatch hx = p;
        hx.map2.clear();
        for (const auto& c : p.map2)
          hx.map2.push_back(fn2_subst(c, fn2_const(rat(k, D)), fn2_y()));
        hx.construction = p.construction + " gridline-x";
        out.push_back(std::move(hx));
        CertifiedPatch hy = p;
        hy.map2.clear();
        for (const auto& c : p.map2)
          hy.map2.push_back(fn2_subst(c, fn2_x(), fn2_const(rat(k, D))));
        hy.construction = p.construction + " gridline-y";
        out.push_back(std::move(hy));
      }
    }
  }
  (void)r;
  (void)prec;
  return out;
}

// --- second-variable taming ---------------------------------------------------

struct TameResult {
  std::vector<Fn1Ptr> subs;       // substitutions of the second variable
  std::vector<Rat> exceptional;   // removed parameter values
  Rat B;
};

// Substitutions of the second variable after which every component of f has
// both first-order partials bounded by 1 (given |df/dx| <= 1 certified).
// When a finite bound on |df/dy| certifies, the linear D-fold subdivision is
// the whole construction; otherwise the construction goes through the
// max-detector machinery: detect where |df/dy| peaks, reparameterize the
// detector graph family near the edge, take edge limits of the family and
// rescale their monotone pieces.
inline TameResult tame_second_variable(const std::vector<Fn2Ptr>& comps,
                                       const ImplicitWitness& first_comp_witness,
                                       const Interval& yspan, int r,
                                       long prec = 64,
                                       bool force_full = false) {
  TameResult out;
  // fast path: a certified finite bound on |df/dy| makes the linear D-fold
  // subdivision the entire construction
  if (!force_full) {
    try {
      std::vector<Fn2Ptr> dys;
      for (const auto& c : comps) dys.push_back(fn2_partial(c, 1));
      CertResult cr = certify_derivatives2(dys, 0, Rat(1), prec, 512,
                                           Interval(Rat(0), Rat(1)), yspan);
      if (cr.max_bound < pow2(16)) {
        long D = subdivide_factor(cr.max_bound);
        Rat w = yspan.width();
        for (long k = 0; k < D; ++k) {
          out.subs.push_back(fn1_affine(w / D, yspan.lo + w * Rat(k) / Rat(D)));
          if (k > 0) out.exceptional.push_back(yspan.lo + w * Rat(k) / Rat(D));
        }
        out.B = Rat(D);
        return out;
      }
    } catch (const Error&) {
      // fall through to the full construction
    }
  }
  // full construction via maximum detection of (df/dy)^2
  ImplicitWitness d = derivative_witness(first_comp_witness, 1);
  ImplicitWitness g2 = mul_witness(d, d);
  auto detectors = max_detector_decompose(g2, yspan, prec);
  std::vector<Fn1Ptr> raw;
  std::vector<Rat> cuts{yspan.lo, yspan.hi};
  for (const auto& det : detectors) {
    cuts.push_back(det.cell.base.lo);
    cuts.push_back(det.cell.base.hi);
    // family h(y, t) = (s(y,t), f(s(y,t), y)) reparameterized in y for small
    // t, contracted toward t -> 0+
    Fn2Ptr sel;
    if (det.selector_is_t)
      sel = fn2_y();
    else if (det.selector_is_one_minus_t)
      sel = fn2_sub(fn2_const(Rat(1)), fn2_y());
    else
      sel = fn2_from_x(det.selector_of_y);
    // (y,t) -> f(sel(y,t), y)
    Fn2Ptr fsel = fn2_subst(comps[0], sel, fn2_x());
    Cell hc{det.cell.base, fn1_const(Rat(0)), det.cell.upper};
    PatchFamily hf = reparam_curve_family({fsel, sel}, hc, r, Int(1) << 16, prec);
    for (const auto& strip : hf.strips) {
      if (!(strip.yspan.lo <= pow2(-8))) continue;  // only the t -> 0 strips
      for (const auto& sub : strip.subs) {
        Fn1Ptr mu = fn1_limit_edge(
            fn2_transpose(sub), fn1_const(Rat(0)), +1, strip.yspan.width() / 4);
        raw.push_back(mu);
      }
    }
  }
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
  // monotone rescaling of the limits onto unit pieces, then certify
  for (const auto& mu : raw) {
    for (size_t i = 0; i + 1 < cuts.size(); ++i) {
      Interval piece(cuts[i], cuts[i + 1]);
      if (!(piece.width() > pow2(-16))) continue;
      Fn1Ptr resc = fn1_compose(mu, fn1_affine(piece.width(), piece.lo));
      out.subs.push_back(resc);
    }
  }
  for (const Rat& c : cuts)
    if (c != yspan.lo && c != yspan.hi) out.exceptional.push_back(c);
  // enforcement: each substitution must leave first partials <= 1; subdivide
  std::vector<Fn1Ptr> final_subs;
  for (const auto& s : out.subs) {
    std::vector<Fn2Ptr> check;
    for (const auto& c : comps) check.push_back(fn2_subst(c, fn2_x(), fn2_from_y(s)));
    CertResult cr = certify_derivatives2(check, 1, Rat(1), prec, 256);
    long D = cr.ok ? 1 : subdivide_factor(cr.max_bound);
    for (long k = 0; k < D; ++k)
      final_subs.push_back(
          fn1_compose(s, fn1_affine(rat(1, D), rat(k, D))));
  }
  out.subs = final_subs;
  out.B = Rat(static_cast<long>(out.subs.size()));
  return out;
}

// Higher-order taming, by induction on the second-variable order: at stage k
// the stacked derivative map of every current substitution feeds the
// second-variable tamer, compositions are D-subdivided until all mixed
// certificates with alpha_2 <= k close at 1.
inline TameResult tame_higher(const std::vector<Fn2Ptr>& comps,
                              const ImplicitWitness& first_comp_witness,
                              const Interval& yspan, int r, int kmax,
                              long prec = 64) {
  TameResult cur;
  cur.subs = {fn1_affine(yspan.width(), yspan.lo)};  // identity onto yspan
  cur.B = Rat(1);
  for (int k = 1; k <= kmax; ++k) {
    std::vector<Fn1Ptr> next;
    std::vector<Rat> exceptional = cur.exceptional;
    for (const auto& phi : cur.subs) {
      // stacked derivatives (f_phi)^(alpha), |alpha| <= r-1, alpha2 <= k-1
      std::vector<Fn2Ptr> stacked;
      for (const auto& c : comps) {
        Fn2Ptr fphi = fn2_subst(c, fn2_x(), fn2_from_y(phi));
        for (int a1 = 0; a1 + k - 1 <= r - 1 && a1 <= r - 1; ++a1)
          for (int a2 = 0; a2 <= k - 1 && a1 + a2 <= r - 1; ++a2) {
            Fn2Ptr g = fphi;
            for (int i = 0; i < a1; ++i) g = fn2_partial(g, 0);
            for (int i = 0; i < a2; ++i) g = fn2_partial(g, 1);
            stacked.push_back(g);
          }
      }
      // tame the stack's second variable on (0,1)
      TameResult t = tame_second_variable(stacked, first_comp_witness,
                                          Interval(Rat(0), Rat(1)), r + 1, prec);
      for (const auto& psi : t.subs) next.push_back(fn1_compose(phi, psi));
      for (const Rat& e : t.exceptional) exceptional.push_back(e);
    }
    // enforcement loop on the full mixed certificates at this stage
    std::vector<Fn1Ptr> closed;
    std::vector<std::pair<Fn1Ptr, int>> queue;
    for (const auto& phi : next) queue.push_back({phi, 0});
    while (!queue.empty()) {
      auto [cand, round] = queue.back();
      queue.pop_back();
      std::vector<Fn2Ptr> check;
      for (const auto& c : comps)
        check.push_back(fn2_subst(c, fn2_x(), fn2_from_y(cand)));
      check.push_back(fn2_from_y(cand));
      CertResult cr = certify_derivatives2(check, r, Rat(1), prec, 256,
                                           Interval(Rat(0), Rat(1)),
                                           Interval(Rat(0), Rat(1)), k);
      if (cr.ok) {
        closed.push_back(cand);
        continue;
      }
      if (round >= 6)
        throw IsolationFailure("higher taming failed to close");
      long D = subdivide_factor(cr.max_bound);
      if (D <= 1) D = 2;
      for (long j = 0; j < D; ++j)
        queue.push_back(
            {fn1_compose(cand, fn1_affine(rat(1, D), rat(j, D))), round + 1});
    }
    cur.subs = closed;
    cur.exceptional = exceptional;
  }
  cur.B = Rat(static_cast<long>(cur.subs.size()));
  return cur;
}

// --- cell and surface parameterization ---------------------------------------

// r-parameterization of the cell (g,h)_(a,b): reparameterize the boundary
// pair as a curve map, then blend linearly in the second parameter.
inline std::vector<CertifiedPatch> param_cell(const Cell& cell, int r,
                                              const Int& cap, long prec = 64) {
  check_cell_order(cell, prec);
  CurveReparam cr = reparam_single_curve({cell.lower, cell.upper}, cell.base, r,
                                         cap, prec);
  std::vector<CertifiedPatch> out;
  for (const auto& cp : cr.patches) {
    // psi(x,y) = (phi(x), (1-y) g(phi(x)) + y h(phi(x)))
    Fn2Ptr phi2 = fn2_from_x(cp.subst);
    Fn2Ptr glo = fn2_from_x(fn1_compose(cell.lower, cp.subst));
    Fn2Ptr ghi = fn2_from_x(fn1_compose(cell.upper, cp.subst));
    Fn2Ptr ylin = fn2_y();
    Fn2Ptr blend = fn2_add(glo, fn2_mul(ylin, fn2_sub(ghi, glo)));
    CertifiedPatch p;
    p.arity = 2;
    p.target_dim = 2;
    p.map2 = {phi2, blend};
    p.order = r;
    p.construction = "cell-blend o " + cp.construction;
    auto chart = std::make_shared<Chart>();
    chart->u = phi2;
    chart->v = blend;
    chart->kind = Chart::Kind::UOfXOnly;
    p.chart = chart;
    // certification + enforcement
    std::vector<Fn2Ptr> comps = p.map2;
    for (int round = 0; round < 6; ++round) {
      CertResult res = certify_derivatives2(comps, r, Rat(1), prec, 512);
      if (res.ok) {
        p.cert = res.bounds;
        out.push_back(p);
        break;
      }
      long D = subdivide_factor(res.max_bound);
      if (D <= 1) D = 2;
      if (round == 5) throw IsolationFailure("cell patch failed to close");
      std::vector<CertifiedPatch> split = subdivide_unit({p}, Rat(D), r, prec);
      bool all_ok = true;
      std::vector<CertifiedPatch> done;
      for (auto& sp : split) {
        CertResult r2 = certify_derivatives2(sp.map2, r, Rat(1), prec, 512);
        if (!r2.ok) all_ok = false;
        sp.cert = r2.bounds;
        // rebuild charts for split pieces
        auto ch = std::make_shared<Chart>();
        ch->u = sp.map2[0];
        ch->v = sp.map2[1];
        ch->kind = Chart::Kind::UOfXOnly;
        sp.chart = ch;
        done.push_back(sp);
      }
      if (all_ok) {
        for (auto& sp : done) out.push_back(std::move(sp));
        break;
      }
    }
  }
  return out;
}

struct SurfaceReparam {
  std::vector<CertifiedPatch> patches;        // arity 2 substitutions into (0,1)^2
  std::vector<std::pair<Rat, CurveReparam>> edge_curves;  // fibers y = const
  std::vector<Rat> exceptional;
};

// r-reparameterization of F: (0,1)^2 -> (0,1)^n: strips and slice
// substitutions from the curve family, second-variable substitutions from
// higher taming, gridline fibers as one-dimensional curves.
inline SurfaceReparam reparam_surface(const std::vector<Fn2Ptr>& F,
                                      const ImplicitWitness& wit, int r,
                                      const Int& cap, long prec = 64) {
  SurfaceReparam out;
  Cell unit = Cell::box(Interval(Rat(0), Rat(1)), Interval(Rat(0), Rat(1)));
  PatchFamily fam = reparam_curve_family(F, unit, r, cap, prec);
  std::vector<Rat> fiber_values;
  for (const Rat& c : fam.strip_cuts)
    if (c > 0 && c < 1) fiber_values.push_back(c);

  for (const auto& strip : fam.strips) {
    // stacked map: substitutions and composites on this strip
    std::vector<Fn2Ptr> stacked;
    for (const auto& sub : strip.subs) {
      stacked.push_back(sub);
      for (const auto& c : F) stacked.push_back(fn2_subst(c, sub, fn2_y()));
    }
    TameResult tame =
        tame_higher(stacked, wit, strip.yspan, r, r, prec);
    for (const Rat& e : tame.exceptional) {
      Rat val = e;
      if (val > 0 && val < 1) fiber_values.push_back(val);
    }
    for (const auto& sub : strip.subs) {
      for (const auto& psi : tame.subs) {
        // sigma(x, y) = (sub(x, psi(y)), psi(y))
        Fn2Ptr psi2 = fn2_from_y(psi);
        Fn2Ptr u = fn2_subst(sub, fn2_x(), psi2);
        CertifiedPatch p;
        p.arity = 2;
        p.target_dim = 2;
        p.map2 = {u, psi2};
        p.order = r;
        auto chart = std::make_shared<Chart>();
        chart->u = u;
        chart->v = psi2;
        chart->kind = Chart::Kind::VOfYOnly;
        p.chart = chart;
        p.construction = "strip-slice o tame";
        // certification of the substitution pair and composites, with
        // enforcement subdivision
        bool placed = false;
        std::vector<CertifiedPatch> queue{p};
        for (int round = 0; round < 6 && !queue.empty(); ++round) {
          std::vector<CertifiedPatch> next_queue;
          for (auto& q : queue) {
            std::vector<Fn2Ptr> comps = q.map2;
            for (const auto& c : F)
              comps.push_back(fn2_subst(c, q.map2[0], q.map2[1]));
            CertResult res = certify_derivatives2(comps, r, Rat(1), prec, 384);
            if (res.ok) {
              q.cert = res.bounds;
              auto ch = std::make_shared<Chart>();
              ch->u = q.map2[0];
              ch->v = q.map2[1];
              ch->kind = Chart::Kind::VOfYOnly;
              q.chart = ch;
              out.patches.push_back(q);
              placed = true;
            } else {
              long D = subdivide_factor(res.max_bound);
              if (D <= 1) D = 2;
              auto split = subdivide_unit({q}, Rat(D), r, prec);
              for (auto& sp : split) next_queue.push_back(sp);
            }
          }
          queue = next_queue;
        }
        if (!queue.empty())
          throw IsolationFailure("surface patch failed to close");
        (void)placed;
      }
    }
  }
  // fiber curves at exceptional ordinates
  std::sort(fiber_values.begin(), fiber_values.end());
  fiber_values.erase(std::unique(fiber_values.begin(), fiber_values.end()),
                     fiber_values.end());
  for (const Rat& a : fiber_values) {
    std::vector<Fn1Ptr> fiber;
    for (const auto& c : F)
      fiber.push_back(fn1_curve(c, fn1_id(), fn1_const(a)));
    out.edge_curves.push_back(
        {a, reparam_single_curve(fiber, Interval(Rat(0), Rat(1)), r, cap, prec)});
    out.exceptional.push_back(a);
  }
  return out;
}

// r-parameterization of graph(F) over the cell (g,h)_(a,b): compose cell
// patches with reparameterizations of F through them. Targets are the two
// base coordinates followed by the components of F.
struct GraphParam {
  std::vector<CertifiedPatch> patches;  // arity 2, target 2 + n
  struct FiberCurve {
    CertifiedPatch patch;  // arity 1, target 2 + n
  };
  std::vector<FiberCurve> fibers;
  std::vector<std::string> notes;
};

inline GraphParam param_surface_graph(const Cell& cell,
                                      const std::vector<Fn2Ptr>& F,
                                      const ImplicitWitness& wit, int r,
                                      const Int& cap, long prec = 64) {
  GraphParam out;
  std::vector<CertifiedPatch> cells = param_cell(cell, r, cap, prec);
  for (const auto& cp : cells) {
    // F through the cell chart
    std::vector<Fn2Ptr> Fcell;
    for (const auto& c : F)
      Fcell.push_back(fn2_subst(c, cp.map2[0], cp.map2[1]));
    SurfaceReparam rep = reparam_surface(Fcell, wit, r, cap, prec);
    for (const auto& sp : rep.patches) {
      CertifiedPatch g;
      g.arity = 2;
      g.target_dim = 2 + static_cast<int>(F.size());
      Fn2Ptr bx = fn2_subst(cp.map2[0], sp.map2[0], sp.map2[1]);
      Fn2Ptr by = fn2_subst(cp.map2[1], sp.map2[0], sp.map2[1]);
      g.map2 = {bx, by};
      for (const auto& c : Fcell)
        g.map2.push_back(fn2_subst(c, sp.map2[0], sp.map2[1]));
      g.order = r;
      auto chart = std::make_shared<Chart>(*cp.chart);
      chart->inner = sp.chart;
      g.chart = chart;
      g.construction = cp.construction + " | " + sp.construction;
      CertResult res = certify_derivatives2(g.map2, r, Rat(1), prec, 512);
      if (!res.ok) {
        // final enforcement
        auto split = subdivide_unit({g}, res.max_bound, r, prec);
        for (auto& sg : split) {
          CertResult r2 = certify_derivatives2(sg.map2, r, Rat(1), prec, 512);
          if (!r2.ok)
            throw IsolationFailure("graph patch failed to close");
          sg.cert = r2.bounds;
          sg.chart = g.chart;  // base chart unchanged up to the affine pieces
          out.patches.push_back(std::move(sg));
        }
      } else {
        g.cert = res.bounds;
        out.patches.push_back(std::move(g));
      }
    }
    for (const auto& [a, fib] : rep.edge_curves) {
      for (const auto& fp : fib.patches) {
        CertifiedPatch g;
        g.arity = 1;
        g.target_dim = 2 + static_cast<int>(F.size());
        Fn1Ptr xcurve = fn1_curve(cp.map2[0], fp.subst, fn1_const(a));
        Fn1Ptr ycurve = fn1_curve(cp.map2[1], fp.subst, fn1_const(a));
        g.map1 = {xcurve, ycurve};
        for (const auto& c : Fcell)
          g.map1.push_back(fn1_curve(c, fp.subst, fn1_const(a)));
        g.order = r;
        g.construction = "fiber y=" + rat_str(a) + " | " + fp.construction;
        CertResult res = certify_derivatives1(g.map1, r, Rat(1), prec, 256);
        if (!res.ok) {
          long D = subdivide_factor(res.max_bound);
          auto split = subdivide_unit({g}, Rat(D), r, prec);
          for (auto& sg : split) {
            CertResult r2 = certify_derivatives1(sg.map1, r, Rat(1), prec, 256);
            if (!r2.ok)
              throw IsolationFailure("fiber patch failed to close");
            sg.cert = r2.bounds;
            out.fibers.push_back({std::move(sg)});
          }
        } else {
          g.cert = res.bounds;
          out.fibers.push_back({std::move(g)});
        }
      }
    }
  }
  return out;
}

}  // namespace pfc
