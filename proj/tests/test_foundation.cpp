#include "doctest.h"
#include "pfaffcount/interval.hpp"
#include "pfaffcount/polynomial.hpp"
#include "pfaffcount/rational.hpp"
#include "pfaffcount/series.hpp"

using namespace pfc;

TEST_CASE("rational helpers") {
  CHECK(rat_height(rat(2, 3)) == 3);
  CHECK(rat_height(rat(-5, 2)) == 5);
  CHECK(dyadic_floor(rat(1, 3), 4) == rat(5, 16));
  CHECK(dyadic_ceil(rat(1, 3), 4) == rat(6, 16));
  CHECK(*iroot_exact(Int(27), 3) == 3);
  CHECK(!iroot_exact(Int(2), 2).has_value());
  CHECK(*qroot_exact(rat(4, 9), 2) == rat(2, 3));
}

TEST_CASE("rationals in interval of bounded height") {
  auto v = rationals_in_interval(Rat(0), Rat(1), Int(3));
  REQUIRE(v.size() == 3);
  CHECK(v[0] == rat(1, 3));
  CHECK(v[1] == rat(1, 2));
  CHECK(v[2] == rat(2, 3));
  auto w = rationals_in_interval(Rat(0), Rat(1), Int(3), false);
  CHECK(w.size() == 5);
}

TEST_CASE("interval ring ops are exact and contain products") {
  Interval a(rat(1, 3), rat(1, 2)), b(rat(-2), rat(5, 2));
  Interval p = a * b;
  CHECK(p.lo == -1);
  CHECK(p.hi == rat(5, 4));
  CHECK(pow_i(Interval(Rat(-2), Rat(1)), 2).lo == 0);
  CHECK(pow_i(Interval(Rat(-2), Rat(1)), 2).hi == 4);
}

TEST_CASE("sqrt and exp enclosures") {
  Interval s = sqrt_i(Interval(Rat(2)), 40);
  CHECK(s.lo * s.lo <= 2);
  CHECK(s.hi * s.hi >= 2);
  CHECK(s.width() <= pow2(-38));

  Interval e = exp_point(Rat(1), 48);
  // e = 2.718281828459045...
  CHECK(e.lo < rat(27182818285L, 10000000000L));
  CHECK(e.hi > rat(27182818284L, 10000000000L));
  CHECK(e.width() <= pow2(-46));

  Interval l2 = ln2_const(60);
  // ln 2 = 0.69314718055994530941...
  CHECK(l2.lo < parse_decimal("0.693147180560"));
  CHECK(l2.hi > parse_decimal("0.693147180559"));

  Interval l3 = ln_point(Rat(3), 60);
  CHECK(l3.lo < parse_decimal("1.09861228866811"));
  CHECK(l3.hi > parse_decimal("1.09861228866810"));
}

TEST_CASE("exp monotone refinement never disconnects") {
  Interval wide = exp_point(rat(1, 3), 20);
  Interval tight = exp_point(rat(1, 3), 80);
  CHECK(wide.intersects(tight));
  CHECK(wide.contains(tight));
}

TEST_CASE("series arithmetic: reciprocal and composition") {
  // f(t) = 1/(1+t) at t in [0, 0]: coefficients (-1)^k
  Series1 one_plus = Series1::identity(Interval(Rat(0)), 6);
  one_plus.c[0] = Interval(Rat(1));
  Series1 r = s_recip(one_plus, 80);
  for (int k = 0; k <= 6; ++k) {
    Rat expect = (k % 2 == 0) ? Rat(1) : Rat(-1);
    CHECK(r.c[k].contains(expect));
    CHECK(r.c[k].width() <= pow2(-60));
  }
}

TEST_CASE("coeff ring with named constants") {
  Coeff c = Coeff::named("ln2") * Rat(2) + Coeff(Rat(1));
  Interval e = c.enclosure(50);
  // 2 ln2 + 1 = 2.38629436...
  bool brackets = e.lo < parse_decimal("2.3862943612") && e.hi > parse_decimal("2.3862943611");
  CHECK(brackets);
  Coeff z = Coeff::named("ln2") - Coeff::named("ln2");
  CHECK(z.is_zero());
}

TEST_CASE("sparse polynomial ops and degree") {
  // p = x^2 y - 3/4 y + ln2
  std::vector<std::string> vars{"x", "y"};
  SparsePolynomial p = parse_polynomial("x^2*y - 3/4 y + ln2", vars);
  CHECK(p.degree() == 3);
  SparsePolynomial dx = p.derivative(0);
  CHECK(dx == parse_polynomial("2 x y", vars));
  SparsePolynomial dy = p.derivative(1);
  CHECK(dy == parse_polynomial("x^2 - 3/4", vars));
  Interval v = p.eval({Interval(Rat(2)), Interval(rat(1, 2))}, 60);
  // 4*(1/2) - 3/8 + ln2 = 1.625 + 0.693147...
  CHECK(v.lo < parse_decimal("2.3181472"));
  CHECK(v.hi > parse_decimal("2.3181471"));
}

TEST_CASE("polynomial parse round trip is bit exact") {
  std::vector<std::string> vars{"x", "f1"};
  SparsePolynomial p = parse_polynomial("-7/3 x^4 f1 + 1/2 x - 5", vars);
  SparsePolynomial q = parse_polynomial(p.str(vars), vars);
  CHECK(p == q);
}

TEST_CASE("substitute polynomials") {
  std::vector<std::string> xy{"x", "y"};
  SparsePolynomial p = parse_polynomial("x^2 + y", xy);
  SparsePolynomial u = parse_polynomial("x + y", xy);
  SparsePolynomial v = parse_polynomial("x y", xy);
  SparsePolynomial s = p.substitute({u, v});
  CHECK(s == parse_polynomial("x^2 + 2 x y + y^2 + x y", xy));
}
