#include "doctest.h"
#include "pfaffcount/witness_ops.hpp"

using namespace pfc;

namespace {

// pointwise agreement of two unary evaluators on a box, at seeded rationals
void check_agree(const Fn1Ptr& a, const Fn1Ptr& b, const Interval& box,
                 int pts, const Rat& tol, long prec = 96) {
  RandomSource rng(3);
  for (int i = 0; i < pts; ++i) {
    Rat x = rng.rat_in(box.lo, box.hi);
    Interval va = a->eval(Interval(x), prec);
    Interval vb = b->eval(Interval(x), prec);
    Interval d = va - vb;
    REQUIRE(d.mag() <= tol);
  }
}

}  // namespace

TEST_CASE("theta and theta_inv witnesses have complexity bound 3") {
  ImplicitWitness th = theta_witness();
  CHECK(th.B == 3);
  CHECK(theta_inv_witness().B == 3);
  for (const auto& p : th.system) CHECK(complexity_of(p) <= 3);
}

TEST_CASE("theta witness certifies: residuals and jacobian") {
  auto cert = certify_witness(theta_witness(), 32);
  CHECK(cert.ok);
  auto cert2 = certify_witness(theta_inv_witness(), 32);
  CHECK(cert2.ok);
}

TEST_CASE("theta_inv o theta is the identity within 2^-40") {
  ImplicitWitness comp = compose_witness(theta_inv_witness(), theta_witness());
  CHECK(comp.B == ClosureFormulas::compose(Rat(3), Rat(3), 1, 1));
  check_agree(comp.fn(), fn1_id(), Interval(Rat(-5), Rat(5)), 100, pow2(-40));
  auto cert = certify_witness(comp, 24);
  CHECK(cert.ok);
}

TEST_CASE("theta(0) = 0") {
  Interval v = theta_witness().fn()->eval(Interval(Rat(0)), 64);
  CHECK(v.contains(Rat(0)));
  CHECK(v.mag() <= pow2(-60));
}

TEST_CASE("compose over disjoint domains fails") {
  // inner image (roughly [-1,1] under theta) escapes a translated domain
  ImplicitWitness shifted = theta_inv_witness();
  shifted.domain = DomainBox::box({Interval(Rat(2), Rat(3))});
  CHECK_THROWS_AS(compose_witness(shifted, theta_witness()), ImageEscapesDomain);
}

TEST_CASE("compose identity keeps evaluation") {
  ImplicitWitness id = identity_witness(Interval(Rat(-2), Rat(2)));
  ImplicitWitness comp = compose_witness(id, theta_witness());
  ImplicitWitness base = theta_witness();
  check_agree(comp.fn(), base.fn(), Interval(Rat(-2), Rat(2)), 50, pow2(-40));
}

TEST_CASE("product and sum witnesses certify and evaluate") {
  ImplicitWitness mulp = mul_primitive_witness();
  auto cert = certify_witness(mulp, 24);
  CHECK(cert.ok);
  ImplicitWitness addp = add_primitive_witness();
  CHECK(certify_witness(addp, 24).ok);
}

TEST_CASE("mul(theta, const 1) equals theta pointwise") {
  ImplicitWitness w =
      mul_witness(theta_witness(), constant_witness(Rat(1), Interval(Rat(-8), Rat(8))));
  check_agree(w.fn(), theta_witness().fn(), Interval(Rat(-3), Rat(3)), 100,
              pow2(-40));
  CHECK(certify_witness(w, 16).ok);
}

TEST_CASE("add of two exp graph witnesses evaluates to 2 at x=0") {
  PfaffianFunction e = make_exp_fn();
  ImplicitWitness we = pfaffian_graph_witness(e, {Interval(Rat(-2), Rat(2))});
  // arithmetic closures need restricted inputs
  ImplicitWitness wr = restrict_witness(we, {Interval(rat(-3, 2), rat(3, 2))});
  ImplicitWitness sum = add_witness(wr, wr);
  Interval v = sum.fn()->eval(Interval(Rat(0)), 80);
  CHECK(v.contains(Rat(2)));
  CHECK(v.width() <= pow2(-30));
}

TEST_CASE("reciprocal witness: 1/x at 2") {
  ImplicitWitness id = identity_witness(Interval(rat(1, 8), Rat(8)));
  id.working_box = {Interval(rat(1, 8), Rat(8))};
  ImplicitWitness r = reciprocal_witness(id);
  Interval v = r.fn()->eval(Interval(Rat(2)), 80);
  CHECK(v.contains(rat(1, 2)));
}

TEST_CASE("reciprocal rejects images through zero") {
  ImplicitWitness id = identity_witness(Interval(Rat(-1), Rat(1)));
  CHECK_THROWS_AS(reciprocal_witness(id), ZeroInImage);
}

TEST_CASE("derivative witness of theta equals (1/sqrt(1+x^2))^3") {
  ImplicitWitness th = theta_witness();
  ImplicitWitness d = derivative_witness(th, 0);
  PfaffianFunction rs = PfaffianFunction::from_poly(
      make_theta_chain(),
      SparsePolynomial::var(1, 3) * SparsePolynomial::var(2, 3));  // f1*f2
  Fn1Ptr ref = Fn1Pfaffian::direct(rs);
  check_agree(d.fn(), ref, Interval(Rat(-3), Rat(3)), 100, pow2(-40));
  CHECK(certify_witness(d, 16).ok);
}

TEST_CASE("derivative witness of a constant is zero") {
  ImplicitWitness c = constant_witness(rat(7, 3), Interval(Rat(-4), Rat(4)));
  ImplicitWitness d = derivative_witness(c, 0);
  Interval v = d.fn()->eval(Interval(rat(1, 3)), 80);
  CHECK(v.contains(Rat(0)));
  CHECK(v.mag() <= pow2(-40));
}

TEST_CASE("derivative of x*x equals 2x") {
  ImplicitWitness id = identity_witness(Interval(Rat(-2), Rat(2)));
  ImplicitWitness sq = mul_witness(id, id);
  ImplicitWitness d = derivative_witness(sq, 0);
  check_agree(d.fn(), fn1_affine(Rat(2), Rat(0)), Interval(Rat(-2), Rat(2)), 100,
              pow2(-38));
}

TEST_CASE("inverse witness of theta matches theta_inv and keeps B") {
  ImplicitWitness th = theta_witness();
  th.working_box = {Interval(Rat(-6), Rat(6))};
  ImplicitWitness inv = inverse_witness(th);
  CHECK(inv.B == th.B);
  Fn1Ptr ref = fn1_theta_inv();
  RandomSource rng(5);
  for (int i = 0; i < 60; ++i) {
    Rat y = rng.rat_in(rat(-9, 10), rat(9, 10));
    Interval a = inv.fn()->eval(Interval(y), 80);
    Interval b = ref->eval(Interval(y), 80);
    Interval d = a - b;
    REQUIRE(d.mag() <= pow2(-35));
  }
}

TEST_CASE("inverse of the identity is the identity") {
  ImplicitWitness id = identity_witness(Interval(Rat(-1), Rat(1)));
  ImplicitWitness inv = inverse_witness(id);
  check_agree(inv.fn(), fn1_id(), Interval(rat(-9, 10), rat(9, 10)), 40, pow2(-40));
}

TEST_CASE("inverse of x^2 on (-1,1) reports a vanishing derivative") {
  ImplicitWitness id = identity_witness(Interval(Rat(-1), Rat(1)));
  ImplicitWitness sq = mul_witness(id, id);
  CHECK_THROWS_AS(inverse_witness(sq), DerivativeVanishes);
}

TEST_CASE("restriction bound depends on B only, not on the sub-box") {
  PfaffianFunction e = make_exp_fn();
  ImplicitWitness we = pfaffian_graph_witness(e, {Interval(Rat(-4), Rat(4))});
  std::vector<std::pair<Rat, Rat>> boxes = {
      {Rat(0), Rat(1)}, {Rat(0), Rat(2)}, {Rat(-1), Rat(1)}, {rat(1, 3), rat(2, 3)},
      {Rat(-3), Rat(3)}, {rat(-1, 7), rat(5, 7)}, {Rat(1), Rat(2)},
      {rat(-5, 2), rat(-1, 2)}, {rat(1, 100), rat(99, 100)}, {Rat(-2), Rat(0)}};
  Rat first_bound;
  bool have = false;
  for (const auto& [lo, hi] : boxes) {
    ImplicitWitness r = restrict_witness(we, {Interval(lo, hi)});
    if (!have) {
      first_bound = r.B;
      have = true;
    }
    CHECK(r.B == first_bound);
  }
}

TEST_CASE("restriction with the whole domain escapes") {
  ImplicitWitness id = identity_witness(Interval(Rat(0), Rat(1)));
  ImplicitWitness ip = id;
  ip.kind = WitnessKind::Implicit;
  CHECK_THROWS_AS(restrict_witness(ip, {Interval(Rat(0), Rat(1))}), ClosureEscapes);
}

TEST_CASE("restricted theta-graph witness still evaluates and certifies") {
  PfaffianFunction th = make_theta_fn();
  ImplicitWitness w = pfaffian_graph_witness(th, {Interval(Rat(-6), Rat(6))});
  ImplicitWitness r = restrict_witness(w, {Interval(Rat(-5), Rat(5))});
  check_agree(r.fn(), fn1_theta(), Interval(Rat(-5), Rat(5)), 100, pow2(-40));
  auto cert = certify_witness(r, 16);
  CHECK(cert.ok);
}

TEST_CASE("closure formulas are monotone in each argument") {
  Rat b1(3), b2(5);
  CHECK(ClosureFormulas::compose(b1, b1, 1, 1) <= ClosureFormulas::compose(b2, b1, 1, 1));
  CHECK(ClosureFormulas::compose(b1, b1, 1, 1) <= ClosureFormulas::compose(b1, b2, 1, 1));
  CHECK(ClosureFormulas::compose(b1, b1, 1, 1) <= ClosureFormulas::compose(b1, b1, 3, 1));
  CHECK(ClosureFormulas::add(b1, b1, 1, 1) <= ClosureFormulas::add(b2, b1, 2, 1));
  CHECK(ClosureFormulas::mul(b1, b1, 1, 1) <= ClosureFormulas::mul(b2, b2, 1, 2));
  CHECK(ClosureFormulas::reciprocal(b1, 1) <= ClosureFormulas::reciprocal(b2, 2));
  CHECK(ClosureFormulas::derivative(b1, 1, 1) <= ClosureFormulas::derivative(b2, 1, 1));
  CHECK(ClosureFormulas::derivative(b1, 1, 1) <= ClosureFormulas::derivative(b1, 2, 1));
  CHECK(ClosureFormulas::restrict_bound(b1) <= ClosureFormulas::restrict_bound(b2));
}
