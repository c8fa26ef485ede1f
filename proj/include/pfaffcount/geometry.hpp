#pragma once

#include "pfaffcount/witness_ops.hpp"

namespace pfc {

// --- Khovanskii-style component bounds ----------------------------------------
//
// Explicit upper bound for the number of connected components of a Pfaffian
// variety V(g_1,...,g_k) inside an open box of R^n, for functions with a
// common chain of order r and degree alpha, superposition degrees <= beta.
// The classical statements give such a bound effectively; the concrete
// formula pinned here reduces the system to a single equation by summing
// squares (degree 2*beta) and uses the product form
//   2^{r(r-1)/2} * B' * (alpha + 2 B')^{n-1} * ((2n-1)(alpha + B'))^r
// multiplied by 3^n to account for intersections with the box faces. It is
// documented as a regression constant: monotone in every argument and never
// an underestimate on the certified corpus.
inline Int khovanskii_bound_formula(int n, int r, unsigned alpha, unsigned beta,
                                    int k) {
  if (k == 0) return Int(1);
  if (n <= 0) return Int(1);
  Int a = std::max<unsigned>(alpha, 1);
  Int bp = 2 * std::max<unsigned>(beta, 1);
  Int acc = 1;
  // 2^{r(r-1)/2}
  mpz_mul_2exp(acc.get_mpz_t(), acc.get_mpz_t(),
               static_cast<unsigned long>(r) * (r - 1) / 2);
  acc *= bp;
  Int t1 = a + 2 * bp;
  for (int i = 0; i < n - 1; ++i) acc *= t1;
  Int t2 = (2 * n - 1) * (a + bp);
  for (int i = 0; i < r; ++i) acc *= t2;
  Int faces = 1;
  for (int i = 0; i < n; ++i) faces *= 3;
  acc *= faces;
  return acc;
}

// Bound for a concrete system with a common chain on a box domain.
inline Int khovanskii_bound(const std::vector<PfaffianFunction>& system,
                            const std::vector<Interval>& box) {
  if (system.empty())
    return khovanskii_bound_formula(static_cast<int>(box.size()), 0, 0, 0, 0);
  const ValidatedChain& c = system.front().chain;
  unsigned beta = 0;
  for (const auto& g : system) {
    if (!(g.chain == c))
      throw Error("khovanskii_bound: functions must share a chain");
    beta = std::max(beta, g.beta());
  }
  (void)box;
  return khovanskii_bound_formula(c.n(), c.order(), c.alpha(), beta,
                                  static_cast<int>(system.size()));
}

// Components of the zero set of an implicitly defined function: the witness
// system together with one extra equation pinning the value coordinate to 0.
inline Int zero_component_bound(const ImplicitWitness& w) {
  const ValidatedChain& c = w.chain();
  unsigned beta = 1;
  for (const auto& g : w.system) beta = std::max(beta, g.beta());
  return khovanskii_bound_formula(w.n + w.m, c.order(), c.alpha(), beta,
                                  w.m + 1);
}

// Cap used by the planar decomposers for breakpoint / branch counts.
inline Int decomposition_cap(const ImplicitWitness& w) {
  const ValidatedChain& c = w.chain();
  unsigned beta = 1;
  for (const auto& g : w.system) beta = std::max(beta, g.beta());
  // system + value-coordinate equation + d/dy equation
  return khovanskii_bound_formula(w.n + w.m, c.order(),
                                  std::max<unsigned>(c.alpha(), beta),
                                  beta + c.alpha(), w.m + 2);
}

// --- certified univariate root isolation --------------------------------------

struct RootTube {
  Interval location;   // width <= iso_width, flanked by certified signs
  int left_sign;       // sign of f at location.lo side
};

struct IsolationResult {
  bool ok = false;
  std::vector<RootTube> roots;
  std::string detail;
};

struct IsolationOptions {
  long prec = 80;
  Rat iso_width = pow2(-30);
  long max_leaves = 8192;
  Int root_cap = Int(1) << 20;
};

// Adaptive sign bisection. Certifies: outside the returned tubes f has no
// zeros; each tube has certified opposite signs on its flanks (so contains
// an odd number of zeros, counted with multiplicity). Tangential zeros make
// ok = false rather than silently merging.
inline IsolationResult isolate_zeros(const Fn1& f, const Interval& dom,
                                     const IsolationOptions& opt = {}) {
  IsolationResult res;
  struct Leaf {
    Interval iv;
    int sign;  // +1, -1, 0 = straddles
  };
  std::vector<Leaf> leaves;
  std::vector<Interval> work{dom};
  long used = 0;
  while (!work.empty()) {
    Interval cur = work.back();
    work.pop_back();
    if (++used > opt.max_leaves) {
      res.detail = "leaf budget exhausted";
      return res;
    }
    Interval v = f.eval(cur, opt.prec);
    if (v.contains_zero() && cur.width() > opt.iso_width) {
      // first-order sharpening keeps the classification error proportional
      // to the derivative, which adaptive bisection needs near roots
      try {
        Series1 s = f.taylor(cur, 1, opt.prec);
        Rat m = cur.mid();
        Interval mv = f.eval(Interval(m), opt.prec) +
                      s.c[1] * Interval(cur.lo - m, cur.hi - m);
        v = intersect(v, mv);
      } catch (const Error&) {
      }
      // tiny magnitudes sit under the dyadic rounding floor: escalate
      for (long p = 2 * opt.prec; v.contains_zero() && v.mag() <= pow2(-(opt.prec - 8)) && p <= 8 * opt.prec; p *= 2)
        v = intersect(v, f.eval(cur, p));
    }
    if (v.lo > 0)
      leaves.push_back({cur, +1});
    else if (v.hi < 0)
      leaves.push_back({cur, -1});
    else if (cur.width() <= opt.iso_width)
      leaves.push_back({cur, 0});
    else {
      Rat m = cur.mid();
      work.push_back(Interval(m, cur.hi));
      work.push_back(Interval(cur.lo, m));
    }
  }
  std::sort(leaves.begin(), leaves.end(),
            [](const Leaf& a, const Leaf& b) { return a.iv.lo < b.iv.lo; });
  // merge adjacent unknown leaves into clusters; check flank signs
  size_t i = 0;
  while (i < leaves.size()) {
    if (leaves[i].sign != 0) {
      ++i;
      continue;
    }
    size_t j = i;
    Interval cluster = leaves[i].iv;
    while (j + 1 < leaves.size() && leaves[j + 1].sign == 0) {
      ++j;
      cluster = hull(cluster, leaves[j].iv);
    }
    int left = (i == 0) ? 0 : leaves[i - 1].sign;
    int right = (j + 1 >= leaves.size()) ? 0 : leaves[j + 1].sign;
    if (left != 0 && right != 0 && left != right) {
      res.roots.push_back({cluster, left});
    } else if (left != 0 && right != 0 && left == right) {
      res.detail = "tangential cluster at " + interval_str(cluster);
      return res;  // even-order contact: refuse to guess
    } else {
      // cluster touches the domain boundary: treat as a root tube anchored
      // at the edge only if it is genuinely small
      if (cluster.width() > Rat(4) * opt.iso_width * 4) {
        res.detail = "unresolved boundary cluster";
        return res;
      }
      res.roots.push_back({cluster, left != 0 ? left : -right});
    }
    i = j + 1;
  }
  if (Int(static_cast<long>(res.roots.size())) > opt.root_cap) {
    res.detail = "root cap exceeded";
    return res;
  }
  res.ok = true;
  return res;
}

// --- effective monotonicity ----------------------------------------------------

enum class PieceShape { Increasing, Decreasing, Constant };

struct MonotonePiece {
  Interval range;  // open piece between breakpoints
  PieceShape shape;
};

struct MonotoneDecomposition {
  std::vector<Rat> breakpoints;            // dyadic
  std::vector<Interval> breakpoint_tubes;  // certified zero tubes of f'
  std::vector<MonotonePiece> pieces;
  Int cap;  // Khovanskii-derived bound the breakpoint count respects
};

inline MonotoneDecomposition monotone_decompose_fn(const Fn1Ptr& f,
                                                   const Interval& dom,
                                                   const Int& cap,
                                                   long prec = 80) {
  Fn1Ptr df = fn1_deriv(f);
  IsolationOptions opt;
  opt.prec = prec;
  opt.root_cap = cap;
  IsolationResult iso = isolate_zeros(*df, dom, opt);
  if (!iso.ok) throw IsolationFailure("monotone decomposition: " + iso.detail);
  MonotoneDecomposition out;
  out.cap = cap;
  Rat prev = dom.lo;
  for (size_t i = 0; i <= iso.roots.size(); ++i) {
    Rat hi = (i == iso.roots.size()) ? dom.hi : iso.roots[i].location.lo;
    if (prev < hi) {
      Interval piece(prev, hi);
      // sign of f' on the piece: certified by the isolation (no zeros here);
      // an exact-zero enclosure marks a constant piece
      Interval probe = df->eval(Interval(piece.mid()), prec);
      PieceShape shape;
      if (probe.lo > 0)
        shape = PieceShape::Increasing;
      else if (probe.hi < 0)
        shape = PieceShape::Decreasing;
      else if (probe.lo == 0 && probe.hi == 0)
        shape = PieceShape::Constant;
      else {
        // escalate precision at a few points
        Interval p2 = df->eval(Interval(piece.mid()), prec * 4);
        if (p2.lo > 0)
          shape = PieceShape::Increasing;
        else if (p2.hi < 0)
          shape = PieceShape::Decreasing;
        else if (p2.lo == 0 && p2.hi == 0)
          shape = PieceShape::Constant;
        else
          throw IsolationFailure("piece sign undecidable");
      }
      out.pieces.push_back({piece, shape});
    }
    if (i < iso.roots.size()) {
      out.breakpoints.push_back(dyadic_floor(iso.roots[i].location.mid(), 40));
      out.breakpoint_tubes.push_back(iso.roots[i].location);
      prev = iso.roots[i].location.hi;
    }
  }
  return out;
}

inline MonotoneDecomposition monotone_decompose(const ImplicitWitness& w,
                                                const Interval& dom,
                                                long prec = 80) {
  if (w.n != 1) throw UnsupportedDimensions("monotone decomposition is unary");
  ImplicitWitness dw = derivative_witness(w, 0);
  return monotone_decompose_fn(w.fn(), dom, zero_component_bound(dw), prec);
}

// --- cells ---------------------------------------------------------------------

// Planar cell (g, h)_(a,b): the region between two graphs over an interval.
struct Cell {
  Interval base;  // (a, b)
  Fn1Ptr lower, upper;

  static Cell box(const Interval& xs, const Interval& ys) {
    return Cell{xs, fn1_const(ys.lo), fn1_const(ys.hi)};
  }
  Interval yspan(const Interval& x, long prec) const {
    return Interval(lower->eval(x, prec).lo, upper->eval(x, prec).hi);
  }
};

// Certify lower < upper over the base: interval separation at mesh points
// plus a sign-certified gap on the whole base.
inline void check_cell_order(const Cell& c, long prec = 64) {
  Fn1Ptr gap = fn1_sub(c.upper, c.lower);
  int sign = certified_sign(*gap, c.base, prec);
  if (sign <= 0) throw NonMonotoneBoundary("cell bounds out of order");
}

// --- zero-set decomposition -----------------------------------------------------

struct BranchDecomposition {
  Interval base;
  bool transposed = false;
  std::vector<Rat> breakpoints;            // eta_1 < ... < eta_N, dyadic
  std::vector<Interval> breakpoint_tubes;  // certified enclosures
  struct Piece {
    Interval span;  // open interval between breakpoints
    std::vector<std::shared_ptr<Fn1Branch>> branches;  // ordered ascending
    std::vector<ImplicitWitness> witnesses;            // per branch
  };
  std::vector<Piece> pieces;
  Rat B;     // common complexity bound for the branch witnesses
  Int cap;   // Khovanskii-derived count cap

  size_t total_branches() const {
    size_t n = 0;
    for (const auto& p : pieces) n += p.branches.size();
    return n;
  }
};

namespace detail {

struct SliceIsolation {
  bool ok = false;
  std::vector<RootTube> roots;
};

inline SliceIsolation isolate_slice(const Fn2Ptr& f, const Rat& x,
                                    const Interval& yspan, const Int& cap,
                                    long prec, long max_leaves = 8192) {
  Fn1Ptr slice = fn1_curve(f, fn1_const(x), fn1_id());
  IsolationOptions opt;
  opt.prec = prec;
  opt.root_cap = cap;
  opt.max_leaves = max_leaves;
  IsolationResult iso = isolate_zeros(*slice, yspan, opt);
  SliceIsolation out;
  out.ok = iso.ok;
  out.roots = iso.roots;
  return out;
}

}  // namespace detail

// Core planar zero-set decomposer working on an evaluable handle. Breakpoint
// abscissae are located where the per-slice root count changes or slice
// isolation degenerates; between them the zero set is covered by ordered
// branch handles certified at mesh points (residual bracketing by
// construction, df/dy bounded away from 0, strict branch separation).
inline BranchDecomposition zero_set_decompose_core(
    const Fn2Ptr& f, const Cell& cell, const Int& cap, long prec = 80,
    int mesh_points = 33, Rat bp_width = pow2(-30), long slice_leaves = 8192) {
  BranchDecomposition out;
  out.base = cell.base;
  out.cap = cap;
  const Rat inset = min_rat(pow2(-16), cell.base.width() / 1024);

  auto yspan_at = [&](const Rat& x) {
    Interval y = cell.yspan(Interval(x), prec);
    return Interval(y.lo + inset, y.hi - inset);
  };

  struct SliceInfo {
    Rat x;
    bool ok;
    std::vector<RootTube> roots;
  };
  auto probe = [&](const Rat& x) {
    detail::SliceIsolation s =
        detail::isolate_slice(f, x, yspan_at(x), cap, prec, slice_leaves);
    return SliceInfo{x, s.ok, s.roots};
  };

  // mesh probes
  std::vector<SliceInfo> mesh;
  for (int i = 1; i < mesh_points - 1; ++i) {
    Rat x = cell.base.lo + cell.base.width() * Rat(i) / Rat(mesh_points - 1);
    mesh.push_back(probe(x));
  }

  // locate breakpoints between adjacent probes that disagree
  std::vector<Interval> bp_tubes;
  auto differs = [](const SliceInfo& a, const SliceInfo& b) {
    if (a.ok != b.ok) return true;
    return a.roots.size() != b.roots.size();
  };
  long bp_budget = 64;
  for (size_t i = 0; i + 1 < mesh.size(); ++i) {
    if (!differs(mesh[i], mesh[i + 1])) continue;
    SliceInfo lo = mesh[i], hi = mesh[i + 1];
    while (hi.x - lo.x > bp_width) {
      if (--bp_budget < 0) throw IsolationFailure("breakpoint bisection budget");
      Rat m = (lo.x + hi.x) / 2;
      SliceInfo mi = probe(m);
      if (differs(lo, mi))
        hi = mi;
      else
        lo = mi;
    }
    bp_tubes.push_back(Interval(lo.x, hi.x));
    if (Int(static_cast<long>(bp_tubes.size())) > cap)
      throw IsolationFailure("breakpoint count exceeds Khovanskii cap");
  }
  std::sort(bp_tubes.begin(), bp_tubes.end(),
            [](const Interval& a, const Interval& b) { return a.lo < b.lo; });

  // assemble pieces between breakpoints
  std::vector<Rat> cuts{cell.base.lo};
  for (const auto& t : bp_tubes) {
    out.breakpoints.push_back(dyadic_floor(t.mid(), 40));
    out.breakpoint_tubes.push_back(t);
    cuts.push_back(t.lo);
    cuts.push_back(t.hi);
  }
  cuts.push_back(cell.base.hi);

  for (size_t pi = 0; pi + 1 < cuts.size(); pi += 2) {
    Interval span(cuts[pi], cuts[pi + 1]);
    if (!(span.width() > 0)) continue;
    BranchDecomposition::Piece piece;
    piece.span = span;
    // seed mesh across the piece
    int seeds_n = 17;
    std::vector<std::vector<Fn1Branch::Seed>> seeds;
    size_t count = SIZE_MAX;
    for (int i = 1; i < seeds_n; ++i) {
      Rat x = span.lo + span.width() * Rat(i) / Rat(seeds_n);
      SliceInfo s = probe(x);
      if (!s.ok)
        throw IsolationFailure("slice isolation failed inside a piece at x = " +
                               rat_str(x));
      if (count == SIZE_MAX) {
        count = s.roots.size();
        seeds.assign(count, {});
      } else if (s.roots.size() != count) {
        throw IsolationFailure("root count changed inside a piece");
      }
      for (size_t b = 0; b < count; ++b)
        seeds[b].push_back({x, s.roots[b].location});
    }
    if (count == SIZE_MAX || count == 0) {
      out.pieces.push_back(std::move(piece));
      continue;
    }
    if (Int(static_cast<long>(count)) > cap)
      throw IsolationFailure("branch count exceeds Khovanskii cap");
    // branch handles + mesh certification
    Fn2Ptr dfdy = fn2_partial(f, 1);
    for (size_t b = 0; b < count; ++b) {
      // nondegeneracy along the seed tubes; sign of df/dy must be constant
      int sign = 0;
      for (const auto& sd : seeds[b]) {
        Interval dv = dfdy->eval(Interval(sd.x), sd.y, prec);
        int s = dv.lo > 0 ? 1 : (dv.hi < 0 ? -1 : 0);
        if (s == 0)
          throw IsolationFailure("df/dy enclosure hits 0 along a branch");
        if (sign == 0) sign = s;
        if (s != sign)
          throw IsolationFailure("df/dy changes sign along a branch");
      }
      piece.branches.push_back(
          std::make_shared<Fn1Branch>(f, span, seeds[b], sign));
    }
    // strict ordering at the seed mesh
    for (size_t b = 0; b + 1 < count; ++b)
      for (size_t k = 0; k < seeds[b].size(); ++k)
        if (!(seeds[b][k].y.hi < seeds[b + 1][k].y.lo))
          throw IsolationFailure("branch tubes overlap");
    out.pieces.push_back(std::move(piece));
  }
  return out;
}

// Witness-level decomposition: attaches to every branch an implicit witness
// whose system is the parent system with one extra equation pinning the value
// coordinate to zero. The common bound is ClosureFormulas::branch(B).
inline BranchDecomposition zero_set_decompose(const ImplicitWitness& w,
                                              const Cell& cell,
                                              long prec = 80) {
  if (w.n != 2) throw UnsupportedDimensions("zero-set decomposition is planar");
  for (const auto& p : w.system)
    if (p.superposition.is_zero())
      throw IdenticallyZero("system contains the zero superposition");
  // certify non-vanishing somewhere
  {
    RandomSource rng(11);
    bool found = false;
    for (int t = 0; t < 256 && !found; ++t) {
      Rat x = rng.rat_in(cell.base.lo, cell.base.hi);
      Interval ys = cell.yspan(Interval(x), prec);
      Rat y = rng.rat_in(ys.lo, ys.hi);
      Interval v = w.fn2()->eval(Interval(x), Interval(y), prec);
      if (!v.contains_zero()) found = true;
    }
    if (!found)
      throw IdenticallyZero("no sample with enclosure excluding 0 found");
  }
  BranchDecomposition out =
      zero_set_decompose_core(w.fn2(), cell, decomposition_cap(w), prec);
  out.B = ClosureFormulas::branch(w.B);
  // attach branch witnesses: parent system + value-coordinate equation
  const ValidatedChain& ch = w.chain();
  int dim = w.n + w.m;
  SparsePolynomial value_eq = SparsePolynomial::var(2, dim + ch.order());
  for (auto& piece : out.pieces) {
    for (auto& br : piece.branches) {
      ImplicitWitness bw;
      bw.kind = w.kind;
      bw.n = 1;
      bw.m = w.m + 1;
      bw.domain = DomainBox::box({piece.span});
      bw.working_box = {piece.span};
      bw.V = w.V;
      bw.system = w.system;
      bw.system.push_back(PfaffianFunction::from_poly(ch, value_eq));
      bw.aux1 = {br};
      bw.B = out.B;
      bw.label = "branch";
      piece.witnesses.push_back(std::move(bw));
    }
  }
  return out;
}

// Transposed version: branches are functions of y. The cell is given in the
// original coordinates; the decomposition runs on the swapped handle.
inline BranchDecomposition transposed_zero_decompose(const ImplicitWitness& w,
                                                     const Cell& swapped_cell,
                                                     long prec = 80) {
  ImplicitWitness t = w;
  t.aux2.clear();
  for (const auto& a : w.aux2) t.aux2.push_back(fn2_transpose(a));
  BranchDecomposition out = zero_set_decompose(t, swapped_cell, prec);
  out.transposed = true;
  return out;
}

// --- boundary limits -------------------------------------------------------------

struct LimitDecomposition {
  std::vector<Rat> breakpoints;
  struct Piece {
    Interval span;
    Fn1Ptr limit;               // contracted edge-limit evaluator
    ImplicitWitness witness;    // carries the parent system; mesh-certified
  };
  std::vector<Piece> pieces;
  Rat B;
};

// Pointwise limits of f(x, y) as y tends to the chosen edge of the cell.
// Pieces split where the contracted mesh values jump; each piece carries an
// edge-limit evaluator and a mesh-certified witness with bound limit(B).
inline LimitDecomposition limit_decompose(const ImplicitWitness& w,
                                          const Cell& cell, bool upper_edge,
                                          long prec = 64, int mesh = 17) {
  if (w.n != 2) throw UnsupportedDimensions("limit decomposition is planar");
  Fn1Ptr edge = upper_edge ? cell.upper : cell.lower;
  Rat gap0 = cell.base.width() / 8;
  {
    Interval ys = cell.yspan(Interval(cell.base.mid()), prec);
    gap0 = min_rat(gap0, ys.width() / 8);
  }
  Fn1Ptr lim = fn1_limit_edge(w.fn2(), edge, upper_edge ? -1 : +1, gap0);
  // contract at mesh abscissae; fail LimitDivergence where contraction stalls
  std::vector<Rat> xs;
  std::vector<Interval> vals;
  for (int i = 1; i < mesh; ++i) {
    Rat x = cell.base.lo + cell.base.width() * Rat(i) / Rat(mesh);
    xs.push_back(x);
    vals.push_back(lim->eval(Interval(x), prec));
  }
  // jump detection: split where adjacent limit enclosures are separated by
  // more than the local scale
  LimitDecomposition out;
  out.B = ClosureFormulas::limit(w.B);
  std::vector<Rat> cuts{cell.base.lo};
  for (size_t i = 0; i + 1 < vals.size(); ++i) {
    Rat gapv = max_rat(vals[i].width(), vals[i + 1].width());
    Interval d = vals[i + 1] - vals[i];
    Rat scale = max_rat(Rat(16) * gapv, rat(1, 4));
    if (d.mag() > scale) cuts.push_back((xs[i] + xs[i + 1]) / 2);
  }
  cuts.push_back(cell.base.hi);
  for (size_t i = 0; i + 1 < cuts.size(); ++i) {
    LimitDecomposition::Piece p;
    p.span = Interval(cuts[i], cuts[i + 1]);
    p.limit = lim;
    ImplicitWitness bw;
    bw.kind = w.kind;
    bw.n = 1;
    bw.m = w.m;
    bw.domain = DomainBox::box({p.span});
    bw.working_box = {p.span};
    bw.V = w.V;
    bw.system = w.system;
    bw.aux1 = {lim};
    bw.B = out.B;
    bw.label = "edge-limit";
    p.witness = std::move(bw);
    out.pieces.push_back(std::move(p));
    if (i + 2 < cuts.size()) out.breakpoints.push_back(cuts[i + 1]);
  }
  return out;
}

// --- max detectors ----------------------------------------------------------------

struct MaxDetector {
  Cell cell;        // (0, f)_(a', b') in (y, t) coordinates
  Fn1Ptr selector_of_y;  // psi(y, t) = selector(y) when t-independent
  bool selector_is_t = false;
  bool selector_is_one_minus_t = false;

  // evaluate psi(y, t)
  Interval eval(const Interval& y, const Interval& t, long prec) const {
    if (selector_is_t) return t;
    if (selector_is_one_minus_t) return Interval(Rat(1)) - t;
    return selector_of_y->eval(y, prec);
  }
};

namespace detail {

struct SelectorCandidate {
  Fn1Ptr of_y;  // null for the endpoint selectors
  bool is_t = false, is_one_minus_t = false;

  // value of g at the candidate point, as a handle on (y, t)
  Fn2Ptr g_value(const Fn2Ptr& g_xy) const {
    if (is_t) return fn2_subst(g_xy, fn2_y(), fn2_x());
    if (is_one_minus_t)
      return fn2_subst(g_xy, fn2_sub(fn2_const(Rat(1)), fn2_y()), fn2_x());
    return fn2_subst(g_xy, fn2_from_x(of_y), fn2_x());
  }
  Interval point(const Rat& y, const Rat& t, long prec) const {
    if (is_t) return Interval(t);
    if (is_one_minus_t) return Interval(Rat(1) - t);
    return of_y->eval(Interval(y), prec);
  }
};

}  // namespace detail

// Detect maximums of g(., y) over [t, 1-t]. Per strip of the transposed
// decomposition of dg/dx, the candidate selectors are the critical branches
// plus the endpoints t and 1-t. Candidates that are certifiably dominated on
// the whole strip are dropped (this absorbs the squared-difference factors
// whose zero sets are tangential); the surviving pairwise comparisons are
// decomposed, their crossing curves cut the strip, and on each resulting cell
// the winner is certified on a seeded sample.
inline std::vector<MaxDetector> max_detector_decompose(const ImplicitWitness& g,
                                                       const Interval& ybase,
                                                       long prec = 64,
                                                       int samples = 100) {
  ImplicitWitness dg = derivative_witness(g, 0);
  Cell swapped = Cell::box(ybase, Interval(Rat(0), Rat(1)));
  BranchDecomposition crit = transposed_zero_decompose(dg, swapped, prec);
  const Rat tin = rat(1, 64);
  const Rat top = rat(1, 2);
  const Int cap = decomposition_cap(g) * 4;

  std::vector<MaxDetector> out;
  for (const auto& strip : crit.pieces) {
    std::vector<detail::SelectorCandidate> cands;
    for (const auto& br : strip.branches) cands.push_back({br, false, false});
    cands.push_back({nullptr, true, false});
    cands.push_back({nullptr, false, true});

    // pairwise elimination / crossing collection on (y, t) in
    // strip x (tin, top - tin)
    Cell yt_cell = Cell::box(strip.span, Interval(tin, top - tin));
    std::vector<bool> dead(cands.size(), false);
    std::vector<Rat> ycuts{strip.span.lo, strip.span.hi};
    std::vector<std::shared_ptr<Fn1Branch>> crossing_curves;
    const Rat tol = pow2(-20);
    // range of g(cand_a) - g(cand_b) over the strip, as a hull of per-ordinate
    // slice ranges (mesh-level, like every drop decision here). Candidates
    // whose value does not depend on t (the critical branches) contribute a
    // single enclosure per ordinate, so sup(A - B(t)) = sup A - inf B stays
    // tight; endpoint-vs-endpoint pairs go through a 1D slice range.
    const Interval tspan(tin, top - tin);
    // depth 9 keeps the mean-value leaf error (~width^2) below the drop
    // tolerance so near-tangential comparisons resolve
    auto value_range_at = [&](const detail::SelectorCandidate& c, const Rat& y) {
      if (!c.of_y) {
        Fn1Ptr slice = fn1_curve(c.g_value(g.fn2()), fn1_const(y), fn1_id());
        return certified_range(*slice, tspan, 48, 9);
      }
      Interval phi = c.of_y->eval(Interval(y), 64);
      return g.fn2()->eval(phi, Interval(y), 64);
    };
    std::map<std::pair<size_t, size_t>, Interval> cache;
    auto delta_range = [&](size_t a, size_t b) {
      bool flip = a > b;
      auto key = flip ? std::make_pair(b, a) : std::make_pair(a, b);
      auto it = cache.find(key);
      if (it == cache.end()) {
        Interval acc;
        bool first = true;
        for (int i = 1; i < 16; ++i) {
          Rat y = strip.span.lo + strip.span.width() * Rat(i) / Rat(16);
          Interval r;
          if (cands[key.first].of_y || cands[key.second].of_y) {
            r = value_range_at(cands[key.first], y) -
                value_range_at(cands[key.second], y);
          } else {
            Fn2Ptr delta = fn2_sub(cands[key.first].g_value(g.fn2()),
                                   cands[key.second].g_value(g.fn2()));
            Fn1Ptr slice = fn1_curve(delta, fn1_const(y), fn1_id());
            r = certified_range(*slice, tspan, 48, 6);
          }
          acc = first ? r : hull(acc, r);
          first = false;
        }
        it = cache.emplace(key, acc).first;
      }
      Interval range = it->second;
      Fn2Ptr delta = fn2_sub(cands[a].g_value(g.fn2()),
                             cands[b].g_value(g.fn2()));
      return std::make_pair(delta, flip ? -range : range);
    };
    // dominance and tie elimination
    for (size_t a = 0; a < cands.size(); ++a)
      for (size_t b = 0; b < cands.size(); ++b) {
        if (a == b || dead[a] || dead[b]) continue;
        auto [delta, range] = delta_range(a, b);
        bool a_never_wins = range.hi <= tol;
        bool tie = a_never_wins && range.lo >= -tol;
        if (tie) {
          if (a > b) dead[a] = true;
        } else if (a_never_wins) {
          dead[a] = true;
        }
      }
    // genuine crossings among survivors
    for (size_t a = 0; a < cands.size(); ++a)
      for (size_t b = a + 1; b < cands.size(); ++b) {
        if (dead[a] || dead[b]) continue;
        auto [delta, range] = delta_range(a, b);
        if (range.hi <= tol || range.lo >= -tol) continue;  // one-signed
        BranchDecomposition cross = zero_set_decompose_core(
            delta, yt_cell, cap, prec, 17, pow2(-12), 2048);
        for (const Rat& bp : cross.breakpoints) ycuts.push_back(bp);
        for (const auto& piece : cross.pieces)
          for (const auto& curve : piece.branches)
            crossing_curves.push_back(curve);
      }
    std::sort(ycuts.begin(), ycuts.end());
    ycuts.erase(std::unique(ycuts.begin(), ycuts.end()), ycuts.end());

    RandomSource rng(17);
    for (size_t yi = 0; yi + 1 < ycuts.size(); ++yi) {
      Interval yspan(ycuts[yi], ycuts[yi + 1]);
      if (!(yspan.width() > pow2(-24))) continue;
      // cell top: lowest crossing curve over this span, else top
      Fn1Ptr cell_top = fn1_const(top);
      Interval best_val(top);
      for (const auto& curve : crossing_curves) {
        if (curve->xdom().lo > yspan.lo || curve->xdom().hi < yspan.hi) continue;
        Interval v = curve->eval(Interval(yspan.mid()), prec);
        if (v.hi < best_val.lo) {
          best_val = v;
          cell_top = curve;
        }
      }
      // certify a winner on the cell by seeded sampling
      const detail::SelectorCandidate* winner = nullptr;
      for (size_t ci = 0; ci < cands.size() && !winner; ++ci) {
        if (dead[ci]) continue;
        bool ok = true;
        RandomSource r2 = rng;
        for (int s = 0; s < samples && ok; ++s) {
          Rat y = r2.rat_in(yspan.lo, yspan.hi);
          Interval tmax = cell_top->eval(Interval(y), prec);
          Rat tcap = min_rat(tmax.lo, top);
          if (!(tcap > tin)) continue;
          Rat t = r2.rat_in(tin, tcap);
          Interval psi = cands[ci].point(y, t, prec);
          if (psi.lo < t - pow2(-20) || psi.hi > Rat(1) - t + pow2(-20)) {
            ok = false;
            break;
          }
          Interval gpsi = Interval(Rat(0));
          if (cands[ci].is_t)
            gpsi = g.fn2()->eval(Interval(t), Interval(y), prec);
          else if (cands[ci].is_one_minus_t)
            gpsi = g.fn2()->eval(Interval(Rat(1) - t), Interval(y), prec);
          else
            gpsi = g.fn2()->eval(psi, Interval(y), prec);
          for (int q = 0; q < 16; ++q) {
            Rat sx = r2.rat_in(t, Rat(1) - t);
            Interval gs = g.fn2()->eval(Interval(sx), Interval(y), prec);
            if (gpsi.hi < gs.lo - pow2(-20)) {
              ok = false;
              break;
            }
          }
        }
        if (ok) winner = &cands[ci];
      }
      if (!winner)
        throw IsolationFailure("no selector certifies on cell over " +
                               interval_str(yspan));
      MaxDetector det;
      det.cell = Cell{yspan, fn1_const(Rat(0)), cell_top};
      det.selector_of_y = winner->of_y;
      det.selector_is_t = winner->is_t;
      det.selector_is_one_minus_t = winner->is_one_minus_t;
      out.push_back(std::move(det));
    }
  }
  if (Int(static_cast<long>(out.size())) > cap * 4)
    throw IsolationFailure("detector cell count exceeds cap");
  return out;
}

}  // namespace pfc
