#include "doctest.h"
#include "pfaffcount/geometry.hpp"

using namespace pfc;

namespace {

std::vector<std::string> XY{"x", "y"};
std::vector<std::string> X{"x"};

ImplicitWitness poly_witness1(const std::string& text, const Interval& box) {
  SparsePolynomial p = parse_polynomial(text, X);
  return pfaffian_graph_witness(poly_pfaffian(p), {box});
}

ImplicitWitness poly_witness2(const std::string& text, const Interval& bx,
                              const Interval& by) {
  SparsePolynomial p = parse_polynomial(text, XY);
  return pfaffian_graph_witness(poly_pfaffian(p), {bx, by});
}

// f(x,y) = y - exp(rate*x): chain c1 = exp(rate*x) over (x, y)
ImplicitWitness y_minus_exp_witness(const Coeff& rate, const Interval& bx,
                                    const Interval& by) {
  PfaffianChain ch;
  ch.n = 2;
  ch.r = 1;
  ch.var_names = XY;
  ch.domain = DomainBox::whole(2);
  int nv = 3;
  ch.defining = {{SparsePolynomial::var(2, nv) * rate, SparsePolynomial(nv)}};
  ch.init = {Builtin{BuiltinKind::ExpLinear, 0, {rate, Coeff(Rat(0))}}};
  ValidatedChain c = chain_validate(ch);
  SparsePolynomial p = SparsePolynomial::var(1, nv) - SparsePolynomial::var(2, nv);
  return pfaffian_graph_witness(PfaffianFunction::from_poly(c, p), {bx, by});
}

// independent dense-bisection oracle for roots of t -> f(t) on [lo, hi]
std::vector<Rat> bisection_roots(const Fn1& f, const Rat& lo, const Rat& hi,
                                 int grid = 1024) {
  std::vector<Rat> roots;
  Rat step = (hi - lo) / grid;
  Rat prev_x = lo;
  Interval prev = f.eval(Interval(lo), 128);
  for (int i = 1; i <= grid; ++i) {
    Rat x = lo + step * i;
    Interval cur = f.eval(Interval(x), 128);
    if ((prev.hi < 0 && cur.lo > 0) || (prev.lo > 0 && cur.hi < 0)) {
      Rat a = prev_x, b = x;
      bool a_neg = prev.hi < 0;
      for (int it = 0; it < 60; ++it) {
        Rat m = (a + b) / 2;
        Interval vm = f.eval(Interval(m), 160);
        if (vm.contains_zero()) break;
        if ((vm.hi < 0) == a_neg)
          a = m;
        else
          b = m;
      }
      roots.push_back((a + b) / 2);
    }
    prev = cur;
    prev_x = x;
  }
  return roots;
}

}  // namespace

TEST_CASE("khovanskii formula sanity and monotonicity") {
  CHECK(khovanskii_bound_formula(1, 0, 0, 2, 1) >= 2);
  CHECK(khovanskii_bound_formula(1, 1, 1, 1, 1) >= 1);
  CHECK(khovanskii_bound_formula(1, 0, 0, 0, 0) == 1);
  CHECK(khovanskii_bound_formula(1, 1, 2, 2, 1) <=
        khovanskii_bound_formula(2, 1, 2, 2, 1));
  CHECK(khovanskii_bound_formula(1, 1, 2, 2, 1) <=
        khovanskii_bound_formula(1, 2, 2, 2, 1));
  CHECK(khovanskii_bound_formula(1, 1, 2, 2, 1) <=
        khovanskii_bound_formula(1, 1, 3, 2, 1));
  CHECK(khovanskii_bound_formula(1, 1, 2, 2, 1) <=
        khovanskii_bound_formula(1, 1, 2, 3, 1));
}

TEST_CASE("khovanskii bound dominates certified root counts on a corpus") {
  struct Case {
    std::string name;
    Fn1Ptr fn;
    std::vector<PfaffianFunction> sys;
    Interval dom;
    size_t true_components;
  };
  std::vector<Case> corpus;
  auto add_poly = [&](const std::string& text, const Interval& dom,
                      size_t comps) {
    SparsePolynomial p = parse_polynomial(text, X);
    PfaffianFunction f = poly_pfaffian(p);
    corpus.push_back({text, Fn1Pfaffian::direct(f), {f}, dom, comps});
  };
  add_poly("x^2 - 1", Interval(Rat(-2), Rat(2)), 2);
  add_poly("x^3 - x", Interval(Rat(-2), Rat(2)), 3);
  add_poly("(x^2 - 1)(x^2 - 4)", Interval(Rat(-3), Rat(3)), 4);
  add_poly("x^2 + 1", Interval(Rat(-2), Rat(2)), 0);
  add_poly("x^5 - 2 x^3 + x - 1/4", Interval(Rat(-2), Rat(2)), 3);
  add_poly("x", Interval(Rat(-1), Rat(1)), 1);

  auto add_chain = [&](const PfaffianFunction& f, const std::string& name,
                       const Interval& dom, size_t comps) {
    corpus.push_back({name, Fn1Pfaffian::direct(f), {f}, dom, comps});
  };
  {
    ValidatedChain c = make_exp_chain(Coeff(Rat(1)));
    SparsePolynomial e = SparsePolynomial::var(1, 2);
    SparsePolynomial one = SparsePolynomial::constant(Rat(1), 2);
    add_chain(PfaffianFunction::from_poly(c, e - one), "exp(x)-1",
              Interval(Rat(-1), Rat(1)), 1);
    add_chain(PfaffianFunction::from_poly(c, e - one - one), "exp(x)-2",
              Interval(Rat(0), Rat(1)), 1);
    add_chain(PfaffianFunction::from_poly(c, e + one), "exp(x)+1",
              Interval(Rat(-1), Rat(1)), 0);
    add_chain(PfaffianFunction::from_poly(
                  c, SparsePolynomial::var(0, 2) * e - one),
              "x*exp(x)-1", Interval(Rat(0), Rat(1)), 1);
  }
  {
    ValidatedChain c = make_exp_chain(Coeff::named("ln2"));
    SparsePolynomial e = SparsePolynomial::var(1, 2);
    SparsePolynomial two = SparsePolynomial::constant(Rat(2), 2);
    add_chain(PfaffianFunction::from_poly(c, e - two), "2^x-2",
              Interval(Rat(0), Rat(2)), 1);
  }
  {
    ValidatedChain c = make_theta_chain();
    SparsePolynomial th = SparsePolynomial::var(0, 3) * SparsePolynomial::var(2, 3);
    SparsePolynomial half = SparsePolynomial::constant(rat(1, 2), 3);
    add_chain(PfaffianFunction::from_poly(c, th - half), "theta(x)-1/2",
              Interval(Rat(-2), Rat(2)), 1);
    add_chain(PfaffianFunction::from_poly(c, th * th - half * half),
              "theta^2-1/4", Interval(Rat(-2), Rat(2)), 2);
  }
  REQUIRE(corpus.size() >= 10);
  for (const auto& cs : corpus) {
    IsolationOptions opt;
    opt.prec = 96;
    IsolationResult iso = isolate_zeros(*cs.fn, cs.dom, opt);
    REQUIRE_MESSAGE(iso.ok, cs.name);
    CHECK_MESSAGE(iso.roots.size() == cs.true_components, cs.name);
    Int bound = khovanskii_bound(cs.sys, {cs.dom});
    CHECK_MESSAGE(bound >= Int(static_cast<long>(cs.true_components)), cs.name);
  }
}

TEST_CASE("zero component bound examples") {
  ImplicitWitness w = poly_witness1("x", Interval(Rat(-1), Rat(1)));
  CHECK(zero_component_bound(w) >= 1);
  PfaffianFunction e = make_exp_fn();
  ImplicitWitness we = pfaffian_graph_witness(e, {Interval(Rat(0), Rat(1))});
  CHECK(zero_component_bound(we) >= 0);
  IsolationResult iso = isolate_zeros(*we.fn(), Interval(Rat(0), Rat(1)), {});
  CHECK(iso.ok);
  CHECK(iso.roots.empty());
  ImplicitWitness wc = constant_witness(Rat(1), Interval(Rat(0), Rat(1)));
  CHECK(zero_component_bound(wc) >= 0);
}

TEST_CASE("monotone decomposition: x^2, theta, x^3 - x") {
  ImplicitWitness sq = poly_witness1("x^2", Interval(Rat(-1), Rat(1)));
  MonotoneDecomposition d = monotone_decompose(sq, Interval(Rat(-1), Rat(1)));
  REQUIRE(d.breakpoints.size() == 1);
  CHECK(abs_rat(d.breakpoints[0]) <= pow2(-28));
  REQUIRE(d.pieces.size() == 2);
  CHECK(d.pieces[0].shape == PieceShape::Decreasing);
  CHECK(d.pieces[1].shape == PieceShape::Increasing);

  ImplicitWitness th = theta_witness();
  MonotoneDecomposition dt = monotone_decompose(th, Interval(Rat(-1), Rat(1)));
  CHECK(dt.breakpoints.empty());
  REQUIRE(dt.pieces.size() == 1);
  CHECK(dt.pieces[0].shape == PieceShape::Increasing);

  ImplicitWitness cub = poly_witness1("x^3 - x", Interval(Rat(-2), Rat(2)));
  MonotoneDecomposition dc = monotone_decompose(cub, Interval(Rat(-2), Rat(2)));
  REQUIRE(dc.breakpoints.size() == 2);
  Interval r = rsqrt_i(Interval(Rat(3)), 60);
  CHECK(abs_rat(dc.breakpoints[0] + r.mid()) <= pow2(-25));
  CHECK(abs_rat(dc.breakpoints[1] - r.mid()) <= pow2(-25));
  CHECK(Int(static_cast<long>(dc.breakpoints.size())) <= dc.cap);
}

TEST_CASE("monotone labels verified pointwise") {
  ImplicitWitness cub = poly_witness1("x^3 - x", Interval(Rat(-2), Rat(2)));
  MonotoneDecomposition dc = monotone_decompose(cub, Interval(Rat(-2), Rat(2)));
  RandomSource rng(23);
  for (const auto& piece : dc.pieces) {
    for (int i = 0; i < 100; ++i) {
      Rat x1 = rng.rat_in(piece.range.lo, piece.range.hi);
      Rat x2 = rng.rat_in(piece.range.lo, piece.range.hi);
      if (x1 > x2) std::swap(x1, x2);
      if (x1 == x2) continue;
      Interval v1 = cub.fn()->eval(Interval(x1), 96);
      Interval v2 = cub.fn()->eval(Interval(x2), 96);
      if (piece.shape == PieceShape::Increasing) CHECK(v1.lo < v2.hi);
      if (piece.shape == PieceShape::Decreasing) CHECK(v1.hi > v2.lo);
    }
  }
}

TEST_CASE("zero set decompose: y - x^2 on (0,1)^2") {
  ImplicitWitness w = poly_witness2("y - x^2", Interval(Rat(0), Rat(1)),
                                    Interval(Rat(0), Rat(1)));
  BranchDecomposition d = zero_set_decompose(
      w, Cell::box(Interval(Rat(0), Rat(1)), Interval(Rat(0), Rat(1))));
  CHECK(d.breakpoints.empty());
  REQUIRE(d.pieces.size() == 1);
  REQUIRE(d.pieces[0].branches.size() == 1);
  Interval v = d.pieces[0].branches[0]->eval(Interval(rat(1, 2)), 80);
  CHECK(v.contains(rat(1, 4)));
  CHECK(Int(static_cast<long>(d.total_branches())) <= d.cap);
}

TEST_CASE("zero set decompose: y^2 - x has two ordered branches") {
  ImplicitWitness w = poly_witness2("y^2 - x", Interval(Rat(0), Rat(1)),
                                    Interval(Rat(-1), Rat(1)));
  BranchDecomposition d = zero_set_decompose(
      w, Cell::box(Interval(rat(1, 64), Rat(1)), Interval(Rat(-1), Rat(1))));
  REQUIRE(d.pieces.size() == 1);
  REQUIRE(d.pieces[0].branches.size() == 2);
  Interval lo = d.pieces[0].branches[0]->eval(Interval(rat(1, 4)), 80);
  Interval hi = d.pieces[0].branches[1]->eval(Interval(rat(1, 4)), 80);
  CHECK(lo.contains(rat(-1, 2)));
  CHECK(hi.contains(rat(1, 2)));
  CHECK(lo.hi < hi.lo);
}

TEST_CASE("zero set decompose: y - 2^x branch encloses sqrt(2) at 1/2") {
  ImplicitWitness w = y_minus_exp_witness(Coeff::named("ln2"),
                                          Interval(Rat(0), Rat(1)),
                                          Interval(Rat(0), Rat(3)));
  BranchDecomposition d = zero_set_decompose(
      w, Cell::box(Interval(Rat(0), Rat(1)), Interval(Rat(0), Rat(3))));
  REQUIRE(d.pieces.size() == 1);
  REQUIRE(d.pieces[0].branches.size() == 1);
  Interval v = d.pieces[0].branches[0]->eval(Interval(rat(1, 2)), 80);
  Interval s2 = sqrt_i(Interval(Rat(2)), 80);
  CHECK(v.intersects(s2));
  REQUIRE(d.pieces[0].witnesses.size() == 1);
  CHECK(d.pieces[0].witnesses[0].B == ClosureFormulas::branch(w.B));
}

TEST_CASE("transposed decompose: x - y^2, x*y - 1, and log2 branch") {
  {
    ImplicitWitness w = poly_witness2("x - y^2", Interval(Rat(0), Rat(1)),
                                      Interval(Rat(0), Rat(1)));
    BranchDecomposition d = transposed_zero_decompose(
        w, Cell::box(Interval(rat(1, 64), Rat(1)), Interval(Rat(0), Rat(1))));
    CHECK(d.transposed);
    REQUIRE(d.pieces.size() == 1);
    REQUIRE(d.pieces[0].branches.size() == 1);
    Interval v = d.pieces[0].branches[0]->eval(Interval(rat(1, 4)), 80);
    CHECK(v.contains(rat(1, 16)));
  }
  {
    ImplicitWitness w = poly_witness2("x*y - 1", Interval(Rat(1), Rat(2)),
                                      Interval(Rat(0), Rat(1)));
    BranchDecomposition d = transposed_zero_decompose(
        w, Cell::box(Interval(Rat(0), Rat(1)), Interval(Rat(1), Rat(2))));
    bool found = false;
    for (const auto& piece : d.pieces) {
      if (piece.branches.empty()) continue;
      if (piece.span.contains(rat(3, 4))) {
        Interval v = piece.branches[0]->eval(Interval(rat(3, 4)), 80);
        CHECK(v.contains(rat(4, 3)));
        found = true;
      }
    }
    CHECK(found);
  }
  {
    ImplicitWitness w = y_minus_exp_witness(Coeff::named("ln2"),
                                            Interval(Rat(0), Rat(1)),
                                            Interval(Rat(0), Rat(3)));
    BranchDecomposition d = transposed_zero_decompose(
        w, Cell::box(Interval(Rat(1), Rat(2)), Interval(Rat(0), Rat(1))));
    REQUIRE(d.pieces.size() >= 1);
    bool found = false;
    Rat y = sqrt_i(Interval(Rat(2)), 80).mid();  // 2^x = sqrt(2) at x = 1/2
    for (const auto& piece : d.pieces) {
      if (piece.branches.empty()) continue;
      if (!piece.span.contains(y)) continue;
      Interval v = piece.branches[0]->eval(Interval(y), 96);
      if (abs_rat(v.mid() - rat(1, 2)) <= pow2(-40)) found = true;
    }
    CHECK(found);
  }
}

TEST_CASE("decomposition matches dense bisection at 100 abscissae") {
  ImplicitWitness w = poly_witness2("y - x^2", Interval(Rat(0), Rat(1)),
                                    Interval(Rat(0), Rat(1)));
  BranchDecomposition d = zero_set_decompose(
      w, Cell::box(Interval(Rat(0), Rat(1)), Interval(Rat(0), Rat(1))));
  RandomSource rng(29);
  for (int i = 0; i < 100; ++i) {
    Rat x = rng.rat_in(rat(1, 16), rat(15, 16));
    Fn1Ptr slice = fn1_curve(w.fn2(), fn1_const(x), fn1_id());
    auto roots = bisection_roots(*slice, rat(1, 1024), rat(1023, 1024));
    REQUIRE(roots.size() == 1);
    Interval v = d.pieces[0].branches[0]->eval(Interval(x), 96);
    CHECK(abs_rat(v.mid() - roots[0]) <= rat(1, 10000000000L));
  }
}

TEST_CASE("limit decompose: y along the upper edge y = x") {
  ImplicitWitness w = poly_witness2("y", Interval(Rat(0), Rat(1)),
                                    Interval(Rat(0), Rat(1)));
  Cell c{Interval(rat(1, 16), Rat(1)), fn1_const(Rat(0)), fn1_id()};
  LimitDecomposition d = limit_decompose(w, c, true);
  REQUIRE(d.pieces.size() == 1);
  for (int i = 2; i < 8; ++i) {
    Rat x = rat(i, 8);
    if (!d.pieces[0].span.contains(x)) continue;
    Interval v = d.pieces[0].limit->eval(Interval(x), 60);
    CHECK(v.contains(x));
    CHECK(v.width() <= pow2(-12));
  }
}

TEST_CASE("limit decompose: x*y along the lower edge is 0") {
  ImplicitWitness w = poly_witness2("x*y", Interval(Rat(0), Rat(1)),
                                    Interval(Rat(0), Rat(1)));
  Cell c = Cell::box(Interval(rat(1, 16), Rat(1)), Interval(Rat(0), Rat(1)));
  LimitDecomposition d = limit_decompose(w, c, false);
  REQUIRE(d.pieces.size() == 1);
  Interval v = d.pieces[0].limit->eval(Interval(rat(1, 2)), 60);
  CHECK(v.contains(Rat(0)));
}

TEST_CASE("limit decompose: exp(-y/x) along the lower edge is 1") {
  PfaffianChain ch;
  ch.n = 2;
  ch.r = 2;
  ch.var_names = XY;
  ch.domain = DomainBox::whole(2);
  ch.domain.sides[0] = {Rat(0), std::nullopt};
  int nv = 4;
  SparsePolynomial c1 = SparsePolynomial::var(2, nv);
  SparsePolynomial c2 = SparsePolynomial::var(3, nv);
  SparsePolynomial y = SparsePolynomial::var(1, nv);
  ch.defining.assign(2, std::vector<SparsePolynomial>(2, SparsePolynomial(nv)));
  ch.defining[0][0] = c1 * c1 * Rat(-1);
  ch.defining[1][0] = y * c1 * c1 * c2;
  ch.defining[1][1] = c1 * c2 * Rat(-1);
  ch.init = {Builtin{BuiltinKind::Reciprocal, 0, {}},
             CustomInit{[](const std::vector<Interval>& box, long prec) {
               Interval ratio = box[1] * recip(box[0]);
               return exp_i(-ratio, prec);
             }}};
  ValidatedChain c = chain_validate(ch);
  PfaffianFunction f = PfaffianFunction::from_poly(c, c2);
  ImplicitWitness w = pfaffian_graph_witness(
      f, {Interval(rat(1, 8), Rat(1)), Interval(Rat(0), Rat(1))});
  Cell cell = Cell::box(Interval(rat(1, 8), Rat(1)), Interval(Rat(0), Rat(1)));
  LimitDecomposition d = limit_decompose(w, cell, false);
  REQUIRE(d.pieces.size() >= 1);
  Interval v = d.pieces[0].limit->eval(Interval(rat(1, 2)), 48);
  CHECK(v.contains(Rat(1)));
}

TEST_CASE("max detector: -(x - 1/2)^2 selects the interior branch 1/2") {
  ImplicitWitness g = poly_witness2("-(x - 1/2)(x - 1/2)",
                                    Interval(Rat(0), Rat(1)),
                                    Interval(Rat(0), Rat(1)));
  auto dets = max_detector_decompose(g, Interval(rat(1, 16), rat(15, 16)));
  REQUIRE(dets.size() >= 1);
  for (const auto& det : dets) {
    CHECK(!det.selector_is_t);
    CHECK(!det.selector_is_one_minus_t);
    Interval v = det.selector_of_y->eval(Interval(det.cell.base.mid()), 64);
    CHECK(v.contains(rat(1, 2)));
  }
}

TEST_CASE("max detector: g = x selects the right endpoint") {
  ImplicitWitness g = poly_witness2("x", Interval(Rat(0), Rat(1)),
                                    Interval(Rat(0), Rat(1)));
  auto dets = max_detector_decompose(g, Interval(rat(1, 16), rat(15, 16)));
  REQUIRE(dets.size() >= 1);
  for (const auto& det : dets) CHECK(det.selector_is_one_minus_t);
}

TEST_CASE("max detector: g = (x-y)^2 picks endpoints by side") {
  ImplicitWitness g = poly_witness2("(x - y)^2", Interval(Rat(0), Rat(1)),
                                    Interval(Rat(0), Rat(1)));
  auto dets = max_detector_decompose(g, Interval(rat(1, 16), rat(15, 16)));
  REQUIRE(dets.size() >= 2);
  RandomSource rng(31);
  for (const auto& det : dets) {
    CHECK((det.selector_is_t || det.selector_is_one_minus_t));
    for (int s = 0; s < 100; ++s) {
      Rat y = rng.rat_in(det.cell.base.lo, det.cell.base.hi);
      Interval tmax = det.cell.upper->eval(Interval(y), 64);
      Rat tcap = min_rat(tmax.lo, rat(31, 64));
      if (!(tcap > rat(1, 64))) continue;
      Rat t = rng.rat_in(rat(1, 64), tcap);
      Interval psi = det.eval(Interval(y), Interval(t), 64);
      Interval gpsi = g.fn2()->eval(psi, Interval(y), 64);
      for (int q = 0; q < 8; ++q) {
        Rat sx = rng.rat_in(t, Rat(1) - t);
        Interval gs = g.fn2()->eval(Interval(sx), Interval(y), 64);
        CHECK(gpsi.hi >= gs.lo - pow2(-20));
      }
    }
  }
}

TEST_CASE("decomposition soundness: sign prediction off the branches") {
  ImplicitWitness w = poly_witness2("y^2 - x", Interval(Rat(0), Rat(1)),
                                    Interval(Rat(-1), Rat(1)));
  Cell cell = Cell::box(Interval(rat(1, 64), Rat(1)), Interval(Rat(-1), Rat(1)));
  BranchDecomposition d = zero_set_decompose(w, cell);
  RandomSource rng(37);
  int checked = 0;
  for (int i = 0; i < 1000; ++i) {
    Rat x = rng.rat_in(cell.base.lo, cell.base.hi);
    Rat y = rng.rat_in(Rat(-1), Rat(1));
    bool near_bp = false;
    for (const auto& t : d.breakpoint_tubes)
      if (x >= t.lo - pow2(-20) && x <= t.hi + pow2(-20)) near_bp = true;
    if (near_bp) continue;
    const BranchDecomposition::Piece* piece = nullptr;
    for (const auto& p : d.pieces)
      if (p.span.contains(x)) piece = &p;
    if (!piece) continue;
    int below = 0;
    bool on_branch = false;
    for (const auto& br : piece->branches) {
      Interval v = br->eval(Interval(x), 96);
      if (v.contains(y)) on_branch = true;
      if (v.hi < y) ++below;
    }
    if (on_branch) continue;
    Interval val = w.fn2()->eval(Interval(x), Interval(y), 96);
    int expected_sign = (below % 2 == 0) ? +1 : -1;
    if (expected_sign > 0) CHECK(val.hi > 0);
    if (expected_sign < 0) CHECK(val.lo < 0);
    ++checked;
  }
  CHECK(checked > 800);
}
