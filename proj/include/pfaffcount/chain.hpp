#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <variant>
#include <vector>

#include "pfaffcount/polynomial.hpp"

namespace pfc {

// Open box with optional infinite endpoints, one slot per variable.
struct DomainBox {
  struct Side {
    std::optional<Rat> lo, hi;  // nullopt = -inf / +inf
    bool bounded() const { return lo && hi; }
    bool contains(const Rat& v) const {
      if (lo && !(v > *lo)) return false;
      if (hi && !(v < *hi)) return false;
      return true;
    }
    bool contains_interval(const Interval& x) const {
      if (lo && !(x.lo > *lo)) return false;
      if (hi && !(x.hi < *hi)) return false;
      return true;
    }
  };
  std::vector<Side> sides;

  static DomainBox whole(int n) {
    DomainBox d;
    d.sides.resize(n);
    return d;
  }
  static DomainBox box(const std::vector<Interval>& b) {
    DomainBox d;
    for (const auto& s : b) d.sides.push_back({s.lo, s.hi});
    return d;
  }
  int dim() const { return static_cast<int>(sides.size()); }
  bool contains_point(const std::vector<Rat>& p) const {
    for (size_t i = 0; i < sides.size(); ++i)
      if (!sides[i].contains(p[i])) return false;
    return true;
  }
  bool contains_box(const std::vector<Interval>& b) const {
    for (size_t i = 0; i < sides.size(); ++i)
      if (!sides[i].contains_interval(b[i])) return false;
    return true;
  }
};

// Closed-form evaluation tags for the chain functions the test corpus uses.
// ExpLinear covers exp(L(x)) for a linear form L with Coeff coefficients
// (exp(x), 2^x = exp(ln2*x), 2^{x+y}, ...); the others are the standard
// algebraic companions.
enum class BuiltinKind {
  ExpLinear,
  InvSqrtOnePlusSq,
  InvSqrtOneMinusSq,
  InvOnePlusSq,
  InvOneMinusSq,
  Reciprocal,
};

struct Builtin {
  BuiltinKind kind;
  int var = 0;                // argument variable for univariate kinds
  std::vector<Coeff> linear;  // ExpLinear: coefficients per variable
};

// Anchor data for chains evaluated by validated integration.
struct Anchor {
  std::vector<Rat> point;
  Interval value;
};

// Direct range evaluator for chain functions that arise as compositions
// (e.g. conjugation by theta^{-1}); takes the coordinate box and a precision.
struct CustomInit {
  std::function<Interval(const std::vector<Interval>&, long)> range;
};

using ChainInit = std::variant<Builtin, Anchor, CustomInit>;

// Triangular system of polynomial ODEs: defining[j][i] is the polynomial
// giving d f_{j+1} / d x_{i+1}, written in the n coordinate variables
// followed by the r chain-function slots. Triangularity: entry (i,j) may
// mention slots f_1..f_{j+1} only... slots beyond j are forbidden.
struct PfaffianChain {
  int n = 0;
  int r = 0;
  std::optional<unsigned> declared_alpha;
  std::vector<std::string> var_names;                     // size n
  DomainBox domain;                                       // in R^n
  std::vector<std::vector<SparsePolynomial>> defining;    // [j][i], n+r vars
  std::vector<ChainInit> init;                            // size r

  std::vector<std::string> all_names() const {
    std::vector<std::string> names = var_names;
    for (int j = 0; j < r; ++j) names.push_back("f" + std::to_string(j + 1));
    return names;
  }
};

// A chain whose invariants have been checked; alpha is the recomputed degree.
class ValidatedChain {
 public:
  ValidatedChain() = default;
  ValidatedChain(std::shared_ptr<const PfaffianChain> c, unsigned alpha)
      : chain_(std::move(c)), alpha_(alpha) {}

  const PfaffianChain& get() const { return *chain_; }
  const std::shared_ptr<const PfaffianChain>& ptr() const { return chain_; }
  unsigned alpha() const { return alpha_; }
  int n() const { return chain_->n; }
  int order() const { return chain_->r; }
  bool valid() const { return static_cast<bool>(chain_); }

  bool operator==(const ValidatedChain& o) const { return chain_ == o.chain_; }

 private:
  std::shared_ptr<const PfaffianChain> chain_;
  unsigned alpha_ = 0;
};

// Checks triangularity and recomputes the chain degree. If the chain declares
// a degree bound, every defining polynomial must respect it.
inline ValidatedChain chain_validate(const PfaffianChain& chain) {
  if (static_cast<int>(chain.defining.size()) != chain.r)
    throw DegreeMismatch("chain has " + std::to_string(chain.defining.size()) +
                         " rows for order " + std::to_string(chain.r));
  unsigned alpha = 0;
  for (int j = 0; j < chain.r; ++j) {
    if (static_cast<int>(chain.defining[j].size()) != chain.n)
      throw DegreeMismatch("row " + std::to_string(j + 1) + " has wrong arity");
    for (int i = 0; i < chain.n; ++i) {
      const SparsePolynomial& p = chain.defining[j][i];
      if (p.nvars != chain.n + chain.r)
        throw DegreeMismatch("defining polynomial ring arity mismatch");
      int mv = p.max_var();
      if (mv >= chain.n + j + 1)
        throw TriangularityViolation(
            "entry (" + std::to_string(i + 1) + "," + std::to_string(j + 1) +
            ") mentions f" + std::to_string(mv - chain.n + 1));
      alpha = std::max(alpha, p.degree());
    }
  }
  if (chain.declared_alpha && *chain.declared_alpha < alpha)
    throw DegreeMismatch("declared degree " +
                         std::to_string(*chain.declared_alpha) +
                         " below actual " + std::to_string(alpha));
  auto sp = std::make_shared<PfaffianChain>(chain);
  return ValidatedChain(sp, alpha);
}

// Polynomial superposition of coordinates and chain functions.
struct PfaffianFunction {
  ValidatedChain chain;
  SparsePolynomial superposition;  // in n + r variables

  unsigned beta() const { return superposition.degree(); }

  static PfaffianFunction from_poly(const ValidatedChain& c,
                                    SparsePolynomial p) {
    if (p.nvars != c.n() + c.order())
      throw DegreeMismatch("superposition ring arity mismatch");
    PfaffianFunction f;
    f.chain = c;
    f.superposition = std::move(p);
    return f;
  }
};

// Least admissible complexity bound: max(n, r, alpha, beta).
inline Rat complexity_of(const PfaffianFunction& f) {
  unsigned m = std::max<unsigned>(
      {static_cast<unsigned>(f.chain.n()), static_cast<unsigned>(f.chain.order()),
       f.chain.alpha(), f.beta()});
  return Rat(static_cast<long>(m));
}

// Symbolic partial derivative over the same chain: chain rule with the
// defining polynomials substituted for the chain-function derivatives. The
// degree of the result is recomputed from the output, not estimated.
inline PfaffianFunction derive(const PfaffianFunction& f, int var) {
  const PfaffianChain& ch = f.chain.get();
  if (var < 0 || var >= ch.n) throw DomainViolation("derive: bad variable index");
  SparsePolynomial out = f.superposition.derivative(var);
  for (int j = 0; j < ch.r; ++j) {
    SparsePolynomial dj = f.superposition.derivative(ch.n + j);
    if (dj.is_zero()) continue;
    out += dj * ch.defining[j][var];
  }
  out.normalize();
  return PfaffianFunction::from_poly(f.chain, std::move(out));
}

// --- stock chains -----------------------------------------------------------

inline ValidatedChain make_exp_chain(const Coeff& rate,
                                     const std::string& var = "x") {
  // f1 = exp(rate*x):  df1/dx = rate*f1
  PfaffianChain ch;
  ch.n = 1;
  ch.r = 1;
  ch.var_names = {var};
  ch.domain = DomainBox::whole(1);
  SparsePolynomial p = SparsePolynomial::var(1, 2) * rate;
  ch.defining = {{p}};
  Builtin b{BuiltinKind::ExpLinear, 0, {rate}};
  ch.init = {b};
  return chain_validate(ch);
}

// Chain (f1, f2) = (1/(1+x^2), 1/sqrt(1+x^2)), degree 3. Supports theta.
inline ValidatedChain make_theta_chain() {
  PfaffianChain ch;
  ch.n = 1;
  ch.r = 2;
  ch.var_names = {"x"};
  ch.domain = DomainBox::whole(1);
  int nv = 3;  // x, f1, f2
  SparsePolynomial x = SparsePolynomial::var(0, nv);
  SparsePolynomial f1 = SparsePolynomial::var(1, nv);
  SparsePolynomial f2 = SparsePolynomial::var(2, nv);
  // f1' = -2x f1^2 ; f2' = -x f1 f2
  ch.defining = {{x * f1 * f1 * Rat(-2)}, {x * f1 * f2 * Rat(-1)}};
  ch.init = {Builtin{BuiltinKind::InvOnePlusSq, 0, {}},
             Builtin{BuiltinKind::InvSqrtOnePlusSq, 0, {}}};
  return chain_validate(ch);
}

// Chain (f1, f2) = (1/(1-x^2), 1/sqrt(1-x^2)) on (-1,1), degree 3.
inline ValidatedChain make_theta_inv_chain() {
  PfaffianChain ch;
  ch.n = 1;
  ch.r = 2;
  ch.var_names = {"x"};
  ch.domain = DomainBox::box({Interval(Rat(-1), Rat(1))});
  int nv = 3;
  SparsePolynomial x = SparsePolynomial::var(0, nv);
  SparsePolynomial f1 = SparsePolynomial::var(1, nv);
  SparsePolynomial f2 = SparsePolynomial::var(2, nv);
  // f1' = 2x f1^2 ; f2' = x f1 f2
  ch.defining = {{x * f1 * f1 * Rat(2)}, {x * f1 * f2}};
  ch.init = {Builtin{BuiltinKind::InvOneMinusSq, 0, {}},
             Builtin{BuiltinKind::InvSqrtOneMinusSq, 0, {}}};
  return chain_validate(ch);
}

// theta(x) = x / sqrt(1+x^2) as a Pfaffian function of complexity 3.
inline PfaffianFunction make_theta_fn() {
  ValidatedChain c = make_theta_chain();
  SparsePolynomial p = SparsePolynomial::var(0, 3) * SparsePolynomial::var(2, 3);
  return PfaffianFunction::from_poly(c, p);
}

// theta^{-1}(x) = x / sqrt(1-x^2) on (-1,1), complexity 3.
inline PfaffianFunction make_theta_inv_fn() {
  ValidatedChain c = make_theta_inv_chain();
  SparsePolynomial p = SparsePolynomial::var(0, 3) * SparsePolynomial::var(2, 3);
  return PfaffianFunction::from_poly(c, p);
}

inline PfaffianFunction make_exp_fn(const Coeff& rate = Coeff(Rat(1))) {
  ValidatedChain c = make_exp_chain(rate);
  return PfaffianFunction::from_poly(c, SparsePolynomial::var(1, 2));
}

}  // namespace pfc
