#include "doctest.h"
#include "pfaffcount/chain.hpp"
#include "pfaffcount/eval.hpp"

using namespace pfc;

namespace {

PfaffianChain exp_chain_raw() {
  PfaffianChain ch;
  ch.n = 1;
  ch.r = 1;
  ch.var_names = {"x"};
  ch.domain = DomainBox::whole(1);
  ch.defining = {{SparsePolynomial::var(1, 2)}};  // f1' = f1
  ch.init = {Builtin{BuiltinKind::ExpLinear, 0, {Coeff(Rat(1))}}};
  return ch;
}

}  // namespace

TEST_CASE("chain_validate accepts the exp chain with alpha 1") {
  ValidatedChain c = chain_validate(exp_chain_raw());
  CHECK(c.alpha() == 1);
  CHECK(c.order() == 1);
}

TEST_CASE("chain_validate on the single-function 1/sqrt(1+x^2) chain: alpha 4") {
  PfaffianChain ch;
  ch.n = 1;
  ch.r = 1;
  ch.var_names = {"x"};
  ch.domain = DomainBox::whole(1);
  // f1' = -x f1^3, total degree 4 with this encoding
  SparsePolynomial x = SparsePolynomial::var(0, 2), f1 = SparsePolynomial::var(1, 2);
  ch.defining = {{x * f1 * f1 * f1 * Rat(-1)}};
  ch.init = {Builtin{BuiltinKind::InvSqrtOnePlusSq, 0, {}}};
  ValidatedChain c = chain_validate(ch);
  CHECK(c.alpha() == 4);
}

TEST_CASE("triangularity violation is rejected") {
  PfaffianChain ch;
  ch.n = 1;
  ch.r = 2;
  ch.var_names = {"x"};
  ch.domain = DomainBox::whole(1);
  // f1' mentions f2: forbidden
  ch.defining = {{SparsePolynomial::var(2, 3)}, {SparsePolynomial::var(1, 3)}};
  ch.init = {Builtin{BuiltinKind::ExpLinear, 0, {Coeff(Rat(1))}},
             Builtin{BuiltinKind::ExpLinear, 0, {Coeff(Rat(1))}}};
  CHECK_THROWS_AS(chain_validate(ch), TriangularityViolation);
}

TEST_CASE("complexity of stock functions") {
  CHECK(complexity_of(make_exp_fn()) == 1);
  CHECK(complexity_of(make_theta_fn()) <= 3);
  CHECK(complexity_of(make_theta_inv_fn()) <= 3);
}

TEST_CASE("derive: exp reproduces itself; theta' = (1/sqrt(1+x^2))^3") {
  PfaffianFunction e = make_exp_fn();
  PfaffianFunction de = derive(e, 0);
  CHECK(de.superposition == e.superposition);

  PfaffianFunction th = make_theta_fn();
  PfaffianFunction dth = derive(th, 0);
  // theta' should equal f2^3 = f1 * f2 over this chain (f2^2 = f1).
  // Check pointwise against (1+x^2)^(-3/2) at a few rationals.
  for (long i = -2; i <= 2; ++i) {
    Rat x = rat(i, 3);
    Interval got = eval_at(dth, {x}, pow2(-40));
    Interval want = rsqrt_i(Interval(Rat(1) + x * x), 60);
    want = round_out(pow_i(want, 3), 50);
    CHECK(got.intersects(want));
  }
}

TEST_CASE("derive of a constant is zero") {
  ValidatedChain c = make_exp_chain(Coeff(Rat(1)));
  PfaffianFunction k = PfaffianFunction::from_poly(
      c, SparsePolynomial::constant(Rat(5), 2));
  PfaffianFunction dk = derive(k, 0);
  CHECK(dk.superposition.is_zero());
}

TEST_CASE("derive is linear after normalization") {
  PfaffianFunction th = make_theta_fn();
  ValidatedChain c = th.chain;
  SparsePolynomial a = SparsePolynomial::var(0, 3) * SparsePolynomial::var(1, 3);
  SparsePolynomial b = SparsePolynomial::var(2, 3);
  PfaffianFunction fa = PfaffianFunction::from_poly(c, a);
  PfaffianFunction fb = PfaffianFunction::from_poly(c, b);
  Rat ca = rat(3, 7), cb = rat(-2, 5);
  PfaffianFunction fsum =
      PfaffianFunction::from_poly(c, a * ca + b * cb);
  SparsePolynomial lhs = derive(fsum, 0).superposition;
  SparsePolynomial rhs = derive(fa, 0).superposition * ca +
                         derive(fb, 0).superposition * cb;
  CHECK(lhs == rhs);
}

TEST_CASE("eval: exp at 0 and 1") {
  PfaffianFunction e = make_exp_fn();
  Interval at0 = eval_at(e, {Rat(0)}, pow2(-40));
  CHECK(at0.contains(Rat(1)));
  CHECK(at0.width() <= pow2(-40));
  Interval at1 = eval_at(e, {Rat(1)}, pow2(-40));
  Interval eref = euler_e(60);
  CHECK(at1.intersects(eref));
}

TEST_CASE("eval: theta(1) encloses 1/sqrt(2)") {
  PfaffianFunction th = make_theta_fn();
  Interval v = eval_at(th, {Rat(1)}, pow2(-40));
  Interval ref = rsqrt_i(Interval(Rat(2)), 60);
  CHECK(v.intersects(ref));
  CHECK(v.width() <= pow2(-40));
}

TEST_CASE("validated integration route agrees with closed form for exp") {
  // Same ODE, but anchored at 0 with value 1 instead of tagged builtin.
  PfaffianChain ch = exp_chain_raw();
  ch.init = {Anchor{{Rat(0)}, Interval(Rat(1))}};
  ValidatedChain c = chain_validate(ch);
  PfaffianFunction f = PfaffianFunction::from_poly(c, SparsePolynomial::var(1, 2));
  Interval via_ode = eval_at(f, {Rat(1)}, pow2(-30));
  Interval closed = euler_e(60);
  CHECK(via_ode.intersects(closed));
  CHECK(via_ode.width() <= pow2(-30));
}

TEST_CASE("validated integration for the theta chain anchored at 0") {
  PfaffianChain ch;
  ch.n = 1;
  ch.r = 2;
  ch.var_names = {"x"};
  ch.domain = DomainBox::whole(1);
  int nv = 3;
  SparsePolynomial x = SparsePolynomial::var(0, nv);
  SparsePolynomial f1 = SparsePolynomial::var(1, nv);
  SparsePolynomial f2 = SparsePolynomial::var(2, nv);
  ch.defining = {{x * f1 * f1 * Rat(-2)}, {x * f1 * f2 * Rat(-1)}};
  ch.init = {Anchor{{Rat(0)}, Interval(Rat(1))}, Anchor{{Rat(0)}, Interval(Rat(1))}};
  ValidatedChain c = chain_validate(ch);
  PfaffianFunction th = PfaffianFunction::from_poly(c, x.remap(nv, {0}) * f2);
  Interval v = eval_at(th, {Rat(1)}, pow2(-24));
  Interval ref = rsqrt_i(Interval(Rat(2)), 60);
  CHECK(v.intersects(ref));
}

TEST_CASE("finite differences match symbolic derivative with certified error") {
  // |f(x+h) - f(x-h)| / 2h - f'(x) is bounded by h^2/6 * sup|f'''|; we use
  // the series third coefficient over a bracket as the certified bound.
  PfaffianFunction th = make_theta_fn();
  PfaffianFunction dth = derive(th, 0);
  ChainEval ev(th.chain);
  RandomSource rng(7);
  Rat h = pow2(-20);
  for (int trial = 0; trial < 100; ++trial) {
    Rat x = rng.rat_in(Rat(-2), Rat(2));
    Interval fp = eval_at(th, {x + h}, pow2(-60));
    Interval fm = eval_at(th, {x - h}, pow2(-60));
    Interval fd = Rat(1) / (2 * h) * (fp - fm);
    Interval sym = eval_at(dth, {x}, pow2(-60));
    auto series = ev.series_line({x}, {Rat(1)}, Interval(-h, h), 3, 80);
    // theta = x*f2: third derivative bound via product series
    Series1 xs = Series1::identity(Interval(x - h, x + h), 3);
    Series1 prod = xs * series[1];
    Rat third_bound = prod.c[3].mag() * 6;
    Rat err = Rat(10) * h * h * third_bound + pow2(-55);
    Interval diff = fd - sym;
    CHECK(diff.mag() <= err);
  }
}

TEST_CASE("enclosure monotonicity under width refinement") {
  PfaffianFunction th = make_theta_fn();
  Interval wide = eval_at(th, {rat(1, 3)}, pow2(-10));
  Interval tight = eval_at(th, {rat(1, 3)}, pow2(-50));
  CHECK(wide.intersects(tight));
}
