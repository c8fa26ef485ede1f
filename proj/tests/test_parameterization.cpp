#include "doctest.h"
#include "pfaffcount/parameterization.hpp"

using namespace pfc;

namespace {

std::vector<std::string> XY{"x", "y"};
std::vector<std::string> X{"x"};

ImplicitWitness poly_witness2(const std::string& text, const Interval& bx,
                              const Interval& by) {
  SparsePolynomial p = parse_polynomial(text, XY);
  return pfaffian_graph_witness(poly_pfaffian(p), {bx, by});
}

// midpoint central difference
Rat fd_mid(const Interval& plus, const Interval& minus, const Rat& h) {
  Rat d = Rat(1) / (2 * h);
  return (d * (plus - minus)).mid();
}

// central finite-difference estimate of d^(a1,a2) f at a rational point,
// step h, from high-precision midpoint evaluations
Rat fd_estimate2(const Fn2Ptr& f, const Rat& x, const Rat& y, int a1, int a2,
                 const Rat& h, long prec = 120) {
  // first-order stencils composed per axis
  if (a1 > 0) {
    Fn2Ptr dummy;
    Rat p = fd_estimate2(f, x + h, y, a1 - 1, a2, h, prec);
    Rat m = fd_estimate2(f, x - h, y, a1 - 1, a2, h, prec);
    return (p - m) / (2 * h);
  }
  if (a2 > 0) {
    Rat p = fd_estimate2(f, x, y + h, a1, a2 - 1, h, prec);
    Rat m = fd_estimate2(f, x, y - h, a1, a2 - 1, h, prec);
    return (p - m) / (2 * h);
  }
  return f->eval(Interval(x), Interval(y), prec).mid();
}

void check_patch_certs_by_fd(const CertifiedPatch& p, int points,
                             uint64_t seed) {
  RandomSource rng(seed);
  Rat h = pow2(-8);
  for (int s = 0; s < points; ++s) {
    Rat x = rng.rat_in(rat(1, 8), rat(7, 8));
    Rat y = rng.rat_in(rat(1, 8), rat(7, 8));
    for (const auto& [key, bound] : p.cert) {
      auto [a1, a2] = key;
      if (a1 + a2 == 0 || a1 + a2 > p.order) continue;
      for (const auto& comp : p.map2) {
        Rat fd = fd_estimate2(comp, x, y, a1, a2, h);
        // documented FD error: h^2/6 * sup of the (|alpha|+2)-order bounds,
        // coarsely dominated by (|alpha|+2)! * cert-scale; use a generous
        // fixed slack for the corpus scale
        Rat slack = h * h * Rat(64) + pow2(-40);
        CHECK(abs_rat(fd) <= bound + slack);
      }
    }
  }
}

}  // namespace

TEST_CASE("curve reparam: identity is a single affine patch") {
  CurveReparam cr = reparam_single_curve({fn1_id()}, Interval(Rat(0), Rat(1)),
                                         1, Int(100));
  REQUIRE(cr.patches.size() >= 1);
  bool found_full = false;
  for (const auto& p : cr.patches) {
    if (p.constant) continue;
    for (const auto& [k, v] : p.cert) CHECK(v <= 1);
    found_full = true;
  }
  CHECK(found_full);
}

TEST_CASE("curve reparam: x^4 at r=2 closes below 1") {
  SparsePolynomial p = parse_polynomial("x^4", X);
  Fn1Ptr f = Fn1Pfaffian::direct(poly_pfaffian(p));
  CurveReparam cr = reparam_single_curve({f}, Interval(Rat(0), Rat(1)), 2,
                                         Int(1000));
  REQUIRE(!cr.patches.empty());
  int full = 0;
  for (const auto& patch : cr.patches) {
    if (patch.constant) continue;
    ++full;
    for (const auto& [k, v] : patch.cert) CHECK(v <= 1);
    // finite-difference spot check on the composite f o subst
    Fn1Ptr comp = fn1_compose(f, patch.subst);
    RandomSource rng(5);
    Rat h = pow2(-10);
    for (int i = 0; i < 20; ++i) {
      Rat x = rng.rat_in(rat(1, 8), rat(7, 8));
      Interval fp = comp->eval(Interval(x + h), 120);
      Interval fm = comp->eval(Interval(x - h), 120);
      Rat fd = fd_mid(fp, fm, h);
      CHECK(abs_rat(fd) <= Rat(1) + rat(1, 100));
    }
  }
  CHECK(full >= 2);
}

TEST_CASE("curve reparam: theta on (0,1) at r=3") {
  CurveReparam cr = reparam_single_curve({fn1_theta()}, Interval(Rat(0), Rat(1)),
                                         3, Int(10000));
  REQUIRE(!cr.patches.empty());
  for (const auto& patch : cr.patches)
    for (const auto& [k, v] : patch.cert) CHECK(v <= 1);
}

TEST_CASE("curve reparam covers the interval") {
  SparsePolynomial p = parse_polynomial("x^4", X);
  Fn1Ptr f = Fn1Pfaffian::direct(poly_pfaffian(p));
  CurveReparam cr = reparam_single_curve({f}, Interval(Rat(0), Rat(1)), 2,
                                         Int(1000));
  RandomSource rng(7);
  for (int i = 0; i < 200; ++i) {
    Rat t = rng.rat_in(Rat(0), Rat(1));
    bool near_exceptional = false;
    for (const Rat& e : cr.exceptional)
      if (abs_rat(t - e) < pow2(-18)) near_exceptional = true;
    if (near_exceptional) continue;
    bool covered = false;
    for (const auto& patch : cr.patches) {
      if (patch.constant) {
        if (abs_rat(patch.const_value - t) <= pow2(-20)) covered = true;
        continue;
      }
      // invert by monotone trisection
      Rat a(0), b(1);
      for (int it = 0; it < 60 && !covered; ++it) {
        Rat w = b - a;
        Rat m1 = a + w / 3, m2 = b - w / 3;
        Interval v1 = patch.subst->eval(Interval(m1), 64);
        Interval v2 = patch.subst->eval(Interval(m2), 64);
        Interval va = patch.subst->eval(Interval(a), 64);
        bool incr = va.mid() < patch.subst->eval(Interval(b), 64).mid();
        bool moved = false;
        if ((incr && v1.hi < t) || (!incr && v1.lo > t)) {
          a = m1;
          moved = true;
        }
        if ((incr && v2.lo > t) || (!incr && v2.hi < t)) {
          b = m2;
          moved = true;
        }
        if (!moved) break;
      }
      Interval img = patch.subst->eval(Interval((a + b) / 2), 80);
      if (abs_rat(img.mid() - t) <= pow2(-20)) covered = true;
      if (covered) break;
    }
    REQUIRE_MESSAGE(covered, "point " << rat_str(t) << " not covered");
  }
}

TEST_CASE("subdivide_unit scales certificates") {
  CertifiedPatch p;
  p.arity = 2;
  p.order = 2;
  p.map2 = {fn2_x(), fn2_y()};
  p.cert[{1, 0}] = Rat(4);
  p.cert[{1, 1}] = Rat(4);
  auto out = subdivide_unit({p}, Rat(4), 2);
  REQUIRE(out.size() >= 16);
  for (const auto& q : out) {
    if (q.construction.find("gridline") != std::string::npos) continue;
    CHECK(q.cert.at({1, 0}) <= 1);
    CHECK(q.cert.at({1, 1}) <= rat(1, 4));
  }
  // B' = 1 leaves patches unchanged
  auto same = subdivide_unit({p}, Rat(1), 2);
  CHECK(same.size() == 1);
}

TEST_CASE("family reparam: identity component dominates for xy") {
  SparsePolynomial pr = parse_polynomial("x*y", XY);
  Fn2Ptr f = Fn2Pfaffian::direct(poly_pfaffian(pr));
  Cell unit = Cell::box(Interval(Rat(0), Rat(1)), Interval(Rat(0), Rat(1)));
  PatchFamily fam = reparam_curve_family({f}, unit, 2, Int(100000));
  REQUIRE(!fam.strips.empty());
  // slice property: same substitutions work for sampled ordinates per strip
  RandomSource rng(11);
  for (const auto& strip : fam.strips) {
    for (int ys = 0; ys < 10; ++ys) {
      Rat y = rng.rat_in(strip.yspan.lo, strip.yspan.hi);
      for (const auto& patch : strip.patches) {
        for (const auto& [k, v] : patch.cert) {
          if (k.second != 0) continue;
          CHECK(v <= 1);
        }
      }
      // derivative spot check of one substitution slice at this ordinate
      if (!strip.subs.empty()) {
        Fn1Ptr slice = fn1_curve(strip.subs[0], fn1_id(), fn1_const(y));
        Interval d = slice->deriv(Interval(rat(1, 2)), 1, 64);
        CHECK(d.mag() <= Rat(1) + pow2(-10));
      }
    }
  }
}

TEST_CASE("family reparam: x^2 with crossing dominance at r=2") {
  SparsePolynomial pr = parse_polynomial("x^2", XY);
  Fn2Ptr f = Fn2Pfaffian::direct(poly_pfaffian(pr));
  Cell unit = Cell::box(Interval(Rat(0), Rat(1)), Interval(Rat(0), Rat(1)));
  PatchFamily fam = reparam_curve_family({f}, unit, 2, Int(100000));
  REQUIRE(!fam.strips.empty());
  // slice derivative certificates hold: F o sub and sub have pure-x bounds <= 1
  RandomSource rng(13);
  int checked = 0;
  for (const auto& strip : fam.strips) {
    for (const auto& sub : strip.subs) {
      for (int ys = 0; ys < 5; ++ys) {
        Rat y = rng.rat_in(strip.yspan.lo, strip.yspan.hi);
        Fn1Ptr slice = fn1_curve(sub, fn1_id(), fn1_const(y));
        Fn1Ptr comp = fn1_curve(f, slice, fn1_const(y));
        Rat h = pow2(-10);
        for (int i = 0; i < 20; ++i) {
          Rat x = rng.rat_in(rat(1, 8), rat(7, 8));
          Interval fp = comp->eval(Interval(x + h), 100);
          Interval fm = comp->eval(Interval(x - h), 100);
          Rat fd = fd_mid(fp, fm, h);
          CHECK(abs_rat(fd) <= Rat(1) + rat(1, 50));
          ++checked;
        }
      }
    }
  }
  CHECK(checked > 100);
}

TEST_CASE("tame second variable: y-independent map is trivial") {
  SparsePolynomial pr = parse_polynomial("1/2 x", XY);
  Fn2Ptr f = Fn2Pfaffian::direct(poly_pfaffian(pr));
  ImplicitWitness w = poly_witness2("1/2 x", Interval(Rat(0), Rat(1)),
                                    Interval(Rat(0), Rat(1)));
  TameResult t = tame_second_variable({f}, w, Interval(Rat(0), Rat(1)), 2);
  CHECK(t.subs.size() == 1);
  Interval v = t.subs[0]->eval(Interval(rat(1, 3)), 64);
  CHECK(v.contains(rat(1, 3)));
}

TEST_CASE("tame second variable: x*y closes first partials") {
  SparsePolynomial pr = parse_polynomial("x*y", XY);
  Fn2Ptr f = Fn2Pfaffian::direct(poly_pfaffian(pr));
  ImplicitWitness w = poly_witness2("x*y", Interval(Rat(0), Rat(1)),
                                    Interval(Rat(0), Rat(1)));
  TameResult t = tame_second_variable({f}, w, Interval(Rat(0), Rat(1)), 2);
  REQUIRE(!t.subs.empty());
  RandomSource rng(17);
  Rat h = pow2(-10);
  for (const auto& s : t.subs) {
    Fn2Ptr fs = fn2_subst(f, fn2_x(), fn2_from_y(s));
    for (int i = 0; i < 100; ++i) {
      Rat x = rng.rat_in(rat(1, 8), rat(7, 8));
      Rat y = rng.rat_in(rat(1, 8), rat(7, 8));
      Rat fdx = fd_mid(fs->eval(Interval(x + h), Interval(y), 100), fs->eval(Interval(x - h), Interval(y), 100), h);
      Rat fdy = fd_mid(fs->eval(Interval(x), Interval(y + h), 100), fs->eval(Interval(x), Interval(y - h), 100), h);
      CHECK(abs_rat(fdx) <= Rat(1) + rat(1, 100));
      CHECK(abs_rat(fdy) <= Rat(1) + rat(1, 100));
    }
  }
}

TEST_CASE("tame second variable: theta(10y) compresses y") {
  // f(x,y) = theta(10 y): |df/dy| up to 10; taming must split y
  Fn2Ptr f = fn2_from_y(fn1_compose(fn1_theta(), fn1_affine(Rat(10), Rat(0))));
  ImplicitWitness w = theta_witness();  // bookkeeping witness for the corpus
  TameResult t = tame_second_variable({f}, w, Interval(Rat(0), Rat(1)), 2);
  REQUIRE(t.subs.size() >= 2);
  RandomSource rng(19);
  Rat h = pow2(-10);
  for (const auto& s : t.subs) {
    Fn2Ptr fs = fn2_subst(f, fn2_x(), fn2_from_y(s));
    for (int i = 0; i < 25; ++i) {
      Rat y = rng.rat_in(rat(1, 8), rat(7, 8));
      Rat fdy = fd_mid(fs->eval(Interval(rat(1, 2)), Interval(y + h), 100), fs->eval(Interval(rat(1, 2)), Interval(y - h), 100), h);
      CHECK(abs_rat(fdy) <= Rat(1) + rat(1, 100));
    }
  }
}

TEST_CASE("tame higher: k = 0 gives the identity family") {
  SparsePolynomial pr = parse_polynomial("x*y", XY);
  Fn2Ptr f = Fn2Pfaffian::direct(poly_pfaffian(pr));
  ImplicitWitness w = poly_witness2("x*y", Interval(Rat(0), Rat(1)),
                                    Interval(Rat(0), Rat(1)));
  TameResult t = tame_higher({f}, w, Interval(Rat(0), Rat(1)), 2, 0);
  REQUIRE(t.subs.size() == 1);
  Interval v = t.subs[0]->eval(Interval(rat(2, 7)), 64);
  CHECK(v.contains(rat(2, 7)));
}

TEST_CASE("tame higher: x*y mixed certificates close at r=2, k=2") {
  SparsePolynomial pr = parse_polynomial("x*y", XY);
  Fn2Ptr f = Fn2Pfaffian::direct(poly_pfaffian(pr));
  ImplicitWitness w = poly_witness2("x*y", Interval(Rat(0), Rat(1)),
                                    Interval(Rat(0), Rat(1)));
  TameResult t = tame_higher({f}, w, Interval(Rat(0), Rat(1)), 2, 2);
  REQUIRE(!t.subs.empty());
  for (const auto& s : t.subs) {
    std::vector<Fn2Ptr> check{fn2_subst(f, fn2_x(), fn2_from_y(s))};
    CertResult cr = certify_derivatives2(check, 2, Rat(1), 64, 512);
    CHECK(cr.ok);
  }
}

TEST_CASE("param_cell: unit box is the identity patch") {
  Cell unit = Cell::box(Interval(Rat(0), Rat(1)), Interval(Rat(0), Rat(1)));
  auto patches = param_cell(unit, 2, Int(1000));
  REQUIRE(!patches.empty());
  for (const auto& p : patches)
    for (const auto& [k, v] : p.cert) CHECK(v <= 1);
  // images cover: sample points hit some patch preimage
  RandomSource rng(23);
  for (int i = 0; i < 100; ++i) {
    Rat x = rng.rat_in(rat(1, 16), rat(15, 16));
    Rat y = rng.rat_in(rat(1, 16), rat(15, 16));
    bool covered = false;
    for (const auto& p : patches) {
      Interval px, py;
      if (!p.chart->invert(Interval(x), Interval(y), 48, px, py)) continue;
      Interval ix = p.chart->eval_u(px, py, 64);
      Interval iy = p.chart->eval_v(px, py, 64);
      if (abs_rat(ix.mid() - x) <= pow2(-20) && abs_rat(iy.mid() - y) <= pow2(-20))
        covered = true;
      if (covered) break;
    }
    REQUIRE(covered);
  }
}

TEST_CASE("param_cell: triangle cell 0 < y < x") {
  Cell tri{Interval(Rat(0), Rat(1)), fn1_const(Rat(0)), fn1_id()};
  auto patches = param_cell(tri, 2, Int(1000));
  REQUIRE(!patches.empty());
  for (const auto& p : patches)
    for (const auto& [k, v] : p.cert) CHECK(v <= 1);
  RandomSource rng(29);
  int covered_count = 0, tried = 0;
  for (int i = 0; i < 300 && tried < 100; ++i) {
    Rat x = rng.rat_in(rat(1, 16), rat(15, 16));
    Rat y = rng.rat_in(rat(1, 1024), Rat(1));
    if (!(y < x)) continue;
    ++tried;
    bool covered = false;
    for (const auto& p : patches) {
      Interval px, py;
      if (!p.chart->invert(Interval(x), Interval(y), 48, px, py)) continue;
      Interval ix = p.chart->eval_u(px, py, 64);
      Interval iy = p.chart->eval_v(px, py, 64);
      if (abs_rat(ix.mid() - x) <= pow2(-20) && abs_rat(iy.mid() - y) <= pow2(-20))
        covered = true;
      if (covered) break;
    }
    if (covered) ++covered_count;
  }
  CHECK(covered_count >= tried * 95 / 100);
}

TEST_CASE("param_cell: theta upper boundary") {
  Cell c{Interval(Rat(0), Rat(1)), fn1_const(Rat(0)), fn1_theta()};
  auto patches = param_cell(c, 2, Int(100000));
  REQUIRE(!patches.empty());
  for (const auto& p : patches)
    for (const auto& [k, v] : p.cert) CHECK(v <= 1);
}

TEST_CASE("reparam_surface: constant map reduces to affine cover") {
  Fn2Ptr f = fn2_const(rat(1, 2));
  ImplicitWitness w = poly_witness2("1/2", Interval(Rat(0), Rat(1)),
                                    Interval(Rat(0), Rat(1)));
  SurfaceReparam rep = reparam_surface({f}, w, 2, Int(100000));
  REQUIRE(!rep.patches.empty());
  for (const auto& p : rep.patches)
    for (const auto& [k, v] : p.cert) CHECK(v <= 1);
}

TEST_CASE("reparam_surface: x*y at r=2 with fd cross-check") {
  SparsePolynomial pr = parse_polynomial("x*y", XY);
  Fn2Ptr f = Fn2Pfaffian::direct(poly_pfaffian(pr));
  ImplicitWitness w = poly_witness2("x*y", Interval(Rat(0), Rat(1)),
                                    Interval(Rat(0), Rat(1)));
  SurfaceReparam rep = reparam_surface({f}, w, 2, Int(100000));
  REQUIRE(!rep.patches.empty());
  for (const auto& p : rep.patches) {
    for (const auto& [k, v] : p.cert) CHECK(v <= 1);
  }
  // composite checks on a couple of patches
  int limit = 2;
  for (const auto& p : rep.patches) {
    if (limit-- <= 0) break;
    check_patch_certs_by_fd(p, 10, 31);
  }
}
