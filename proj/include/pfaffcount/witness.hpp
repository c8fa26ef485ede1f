#pragma once

#include "pfaffcount/fn_implicit.hpp"

namespace pfc {

enum class WitnessKind { Implicit, RestrictedImplicit };  // IP / IRP
enum class CertLevel { MeshCertified, GloballyCertified };

// The closure calculus returns a new complexity bound with every operation.
// The paper-level results only assert that such bounds exist and are
// effective; the concrete formulas below are this library's pinned choices.
// They are monotone nondecreasing in every argument, derived from the
// constructions in witness_ops (each construction's actual system complexity
// is asserted against its formula in the test suite), and treated as
// regression constants. RestrictFormula depends on B alone: the restriction
// bound must not depend on the sub-box taken.
struct ClosureFormulas {
  static Rat compose(const Rat& bf, const Rat& bg, int mf, int mg) {
    return bf + bg + Rat(mf + mg) + 2;
  }
  static Rat add(const Rat& bf, const Rat& bg, int mf, int mg) {
    return bf + bg + Rat(mf + mg) + 12;
  }
  static Rat mul(const Rat& bf, const Rat& bg, int mf, int mg) {
    return bf + bg + Rat(mf + mg) + 12;
  }
  static Rat reciprocal(const Rat& b, int m) { return b + Rat(m) + 8; }
  static Rat derivative(const Rat& b, int m, int n) {
    return Rat(m + 2) * (Rat(3) * b + Rat(8)) + Rat(n);
  }
  static Rat restrict_bound(const Rat& b) { return Rat(3) * b + 6; }
  static Rat branch(const Rat& b) { return b + 2; }
  static Rat limit(const Rat& b) { return Rat(2) * b + 6; }
};

// Membership certificate for a function implicitly defined from (restricted)
// Pfaffian data: the symbolic system, the auxiliary evaluators, the domain
// data and a complexity bound. The number of auxiliary functions m is
// tracked separately from B.
struct ImplicitWitness {
  WitnessKind kind = WitnessKind::RestrictedImplicit;
  int n = 1;  // domain dimension (1 or 2)
  int m = 1;  // auxiliary functions; f1 is the represented function
  DomainBox domain;                    // open subset of R^n
  std::vector<Interval> working_box;   // bounded box used for certification
  DomainBox V;                         // open box in R^{n+m}
  std::vector<PfaffianFunction> system;  // m functions, common chain
  std::vector<Fn1Ptr> aux1;            // evaluators when n == 1
  std::vector<Fn2Ptr> aux2;            // evaluators when n == 2
  Rat B;                               // complexity bound
  CertLevel level = CertLevel::MeshCertified;
  bool boundary_closure_certified = false;
  std::string label;

  const ValidatedChain& chain() const { return system.at(0).chain; }
  Fn1Ptr fn() const { return aux1.at(0); }
  Fn2Ptr fn2() const { return aux2.at(0); }

  Interval eval1(const Interval& x, long prec) const {
    return aux1.at(0)->eval(x, prec);
  }
  Interval eval2(const Interval& x, const Interval& y, long prec) const {
    return aux2.at(0)->eval(x, y, prec);
  }
};

inline Interval theta_map(const Interval& v, long prec) {
  return round_out(v * rsqrt_i(Interval(Rat(1)) + pow_i(v, 2), prec + 8), prec);
}

// --- chain merging -----------------------------------------------------------

// Assemble several validated chains over a common coordinate space. var_maps
// give, per chain, the new index of each of its variables. Returns the merged
// chain and the function-slot offset of each input chain.
inline ValidatedChain chain_merge(
    const std::vector<ValidatedChain>& chains,
    const std::vector<std::vector<int>>& var_maps, int n_new,
    const std::vector<std::string>& names, const DomainBox& domain,
    std::vector<int>* offsets_out = nullptr) {
  PfaffianChain out;
  out.n = n_new;
  out.var_names = names;
  out.domain = domain;
  int r_total = 0;
  for (const auto& c : chains) r_total += c.order();
  out.r = r_total;
  out.defining.resize(r_total, std::vector<SparsePolynomial>(
                                   n_new, SparsePolynomial(n_new + r_total)));
  out.init.resize(r_total, Builtin{BuiltinKind::Reciprocal, 0, {}});
  std::vector<int> offsets;
  int off = 0;
  for (size_t ci = 0; ci < chains.size(); ++ci) {
    const PfaffianChain& ch = chains[ci].get();
    const std::vector<int>& vm = var_maps[ci];
    offsets.push_back(off);
    // variable map for polys: coords then function slots
    std::vector<int> full_map(ch.n + ch.r);
    for (int i = 0; i < ch.n; ++i) full_map[i] = vm[i];
    for (int j = 0; j < ch.r; ++j) full_map[ch.n + j] = n_new + off + j;
    for (int j = 0; j < ch.r; ++j) {
      for (int i = 0; i < ch.n; ++i) {
        SparsePolynomial p = ch.defining[j][i].remap(n_new + r_total, full_map);
        out.defining[off + j][vm[i]] = out.defining[off + j][vm[i]] + p;
      }
      // init data: remap builtin variable indices / linear forms
      if (std::holds_alternative<Builtin>(ch.init[j])) {
        Builtin b = std::get<Builtin>(ch.init[j]);
        if (b.kind == BuiltinKind::ExpLinear) {
          std::vector<Coeff> lin(n_new, Coeff(Rat(0)));
          for (size_t i = 0; i < b.linear.size(); ++i) lin[vm[i]] = b.linear[i];
          b.linear = lin;
        } else {
          b.var = vm[b.var];
        }
        out.init[off + j] = b;
      } else if (std::holds_alternative<Anchor>(ch.init[j])) {
        Anchor a = std::get<Anchor>(ch.init[j]);
        std::vector<Rat> pt(n_new, Rat(0));
        for (int i = 0; i < ch.n; ++i) pt[vm[i]] = a.point[i];
        out.init[off + j] = Anchor{pt, a.value};
      } else {
        CustomInit c = std::get<CustomInit>(ch.init[j]);
        std::vector<int> vmc = vm;
        int old_n = ch.n;
        out.init[off + j] = CustomInit{
            [c, vmc, old_n](const std::vector<Interval>& box, long prec) {
              std::vector<Interval> sel(old_n, Interval(Rat(0)));
              for (int i = 0; i < old_n; ++i) sel[i] = box[vmc[i]];
              return c.range(sel, prec);
            }};
      }
    }
    off += ch.r;
  }
  if (offsets_out) *offsets_out = offsets;
  return chain_validate(out);
}

// The theta-inverse companion pair 1/(1-v^2), 1/sqrt(1-v^2) in coordinate c
// of an n-dimensional space, as a standalone chain for merging.
inline ValidatedChain theta_inv_pair_chain(int coord, int n_new,
                                           const std::vector<std::string>& names,
                                           const DomainBox& domain) {
  PfaffianChain ch;
  ch.n = n_new;
  ch.r = 2;
  ch.var_names = names;
  ch.domain = domain;
  int nv = n_new + 2;
  SparsePolynomial v = SparsePolynomial::var(coord, nv);
  SparsePolynomial h1 = SparsePolynomial::var(n_new, nv);
  SparsePolynomial h2 = SparsePolynomial::var(n_new + 1, nv);
  ch.defining.assign(2, std::vector<SparsePolynomial>(n_new, SparsePolynomial(nv)));
  ch.defining[0][coord] = v * h1 * h1 * Rat(2);
  ch.defining[1][coord] = v * h1 * h2;
  ch.init = {Builtin{BuiltinKind::InvOneMinusSq, coord, {}},
             Builtin{BuiltinKind::InvSqrtOneMinusSq, coord, {}}};
  return chain_validate(ch);
}

namespace detail {

inline std::vector<std::string> coord_names(int n) {
  std::vector<std::string> v;
  for (int i = 0; i < n; ++i) v.push_back("v" + std::to_string(i + 1));
  return v;
}

inline DomainBox graph_space_domain(int n_plus_m) {
  return DomainBox::whole(n_plus_m);
}

inline Rat actual_complexity(const std::vector<PfaffianFunction>& system,
                             int dimV) {
  Rat b(dimV);
  for (const auto& p : system) {
    b = max_rat(b, complexity_of(p));
    b = max_rat(b, Rat(dimV));
  }
  return b;
}

}  // namespace detail

// --- library witnesses -------------------------------------------------------

// theta: m = 1, V = R^2, system p(v1, v2) = theta(v1) - v2, complexity 3.
inline ImplicitWitness theta_witness() {
  ImplicitWitness w;
  w.kind = WitnessKind::RestrictedImplicit;
  w.n = 1;
  w.m = 1;
  w.domain = DomainBox::whole(1);
  w.working_box = {Interval(Rat(-8), Rat(8))};
  w.V = DomainBox::whole(2);
  // chain on (v1, v2): c1 = 1/(1+v1^2), c2 = 1/sqrt(1+v1^2)
  PfaffianChain ch;
  ch.n = 2;
  ch.r = 2;
  ch.var_names = detail::coord_names(2);
  ch.domain = DomainBox::whole(2);
  int nv = 4;
  SparsePolynomial v1 = SparsePolynomial::var(0, nv);
  SparsePolynomial c1 = SparsePolynomial::var(2, nv);
  SparsePolynomial c2 = SparsePolynomial::var(3, nv);
  ch.defining.assign(2, std::vector<SparsePolynomial>(2, SparsePolynomial(nv)));
  ch.defining[0][0] = v1 * c1 * c1 * Rat(-2);
  ch.defining[1][0] = v1 * c1 * c2 * Rat(-1);
  ch.init = {Builtin{BuiltinKind::InvOnePlusSq, 0, {}},
             Builtin{BuiltinKind::InvSqrtOnePlusSq, 0, {}}};
  ValidatedChain vc = chain_validate(ch);
  // p = v1*c2 - v2
  SparsePolynomial p = v1 * c2 - SparsePolynomial::var(1, nv);
  w.system = {PfaffianFunction::from_poly(vc, p)};
  w.aux1 = {fn1_theta()};
  w.B = Rat(3);
  w.boundary_closure_certified = true;  // theta image closure is [-1,1] x [-1,1]
  w.label = "theta";
  return w;
}

// theta^{-1} on (-1,1): q(v1, v2) = v1 - theta(v2), complexity 3.
inline ImplicitWitness theta_inv_witness() {
  ImplicitWitness w;
  w.kind = WitnessKind::RestrictedImplicit;
  w.n = 1;
  w.m = 1;
  w.domain = DomainBox::box({Interval(Rat(-1), Rat(1))});
  w.working_box = {Interval(rat(-127, 128), rat(127, 128))};
  w.V = DomainBox::whole(2);
  PfaffianChain ch;
  ch.n = 2;
  ch.r = 2;
  ch.var_names = detail::coord_names(2);
  ch.domain = DomainBox::whole(2);
  int nv = 4;
  SparsePolynomial v2 = SparsePolynomial::var(1, nv);
  SparsePolynomial c1 = SparsePolynomial::var(2, nv);
  SparsePolynomial c2 = SparsePolynomial::var(3, nv);
  ch.defining.assign(2, std::vector<SparsePolynomial>(2, SparsePolynomial(nv)));
  ch.defining[0][1] = v2 * c1 * c1 * Rat(-2);
  ch.defining[1][1] = v2 * c1 * c2 * Rat(-1);
  ch.init = {Builtin{BuiltinKind::InvOnePlusSq, 1, {}},
             Builtin{BuiltinKind::InvSqrtOnePlusSq, 1, {}}};
  ValidatedChain vc = chain_validate(ch);
  SparsePolynomial q = SparsePolynomial::var(0, nv) - v2 * c2;
  w.system = {PfaffianFunction::from_poly(vc, q)};
  w.aux1 = {fn1_theta_inv()};
  w.B = Rat(3);
  w.boundary_closure_certified = true;
  w.label = "theta_inv";
  return w;
}

// Identity on an interval: p(v1, v2) = v1 - v2 (polynomial system, r = 0).
inline ImplicitWitness identity_witness(const Interval& dom) {
  ImplicitWitness w;
  w.n = 1;
  w.m = 1;
  w.domain = DomainBox::box({dom});
  w.working_box = {dom};
  w.V = DomainBox::whole(2);
  PfaffianChain ch;
  ch.n = 2;
  ch.r = 0;
  ch.var_names = detail::coord_names(2);
  ch.domain = DomainBox::whole(2);
  ValidatedChain vc = chain_validate(ch);
  SparsePolynomial p = SparsePolynomial::var(0, 2) - SparsePolynomial::var(1, 2);
  w.system = {PfaffianFunction::from_poly(vc, p)};
  w.aux1 = {fn1_id()};
  w.B = Rat(2);
  w.boundary_closure_certified = true;
  w.label = "id";
  return w;
}

// Constant c: IRP system theta^{-1}(v2) - c.
inline ImplicitWitness constant_witness(const Rat& c, const Interval& dom,
                                        int n = 1) {
  ImplicitWitness w;
  w.n = n;
  w.m = 1;
  std::vector<Interval> db(n, dom);
  w.domain = DomainBox::box(db);
  w.working_box = db;
  int dim = n + 1;
  w.V = DomainBox::whole(dim);
  w.V.sides[n] = {Rat(-1), Rat(1)};
  ValidatedChain vc = theta_inv_pair_chain(n, dim, detail::coord_names(dim),
                                           w.V);
  int nv = dim + 2;
  SparsePolynomial p = SparsePolynomial::var(n, nv) *
                           SparsePolynomial::var(dim + 1, nv) -
                       SparsePolynomial::constant(c, nv);
  w.system = {PfaffianFunction::from_poly(vc, p)};
  if (n == 1)
    w.aux1 = {fn1_const(c)};
  else
    w.aux2 = {fn2_const(c)};
  w.B = max_rat(Rat(4), Rat(dim));
  w.boundary_closure_certified = true;
  w.label = "const " + rat_str(c);
  return w;
}

// Chain with no chain functions: plain polynomials.
inline ValidatedChain trivial_chain(int n) {
  PfaffianChain ch;
  ch.n = n;
  ch.r = 0;
  ch.var_names = detail::coord_names(n);
  ch.domain = DomainBox::whole(n);
  return chain_validate(ch);
}

inline PfaffianFunction poly_pfaffian(const SparsePolynomial& p) {
  return PfaffianFunction::from_poly(trivial_chain(p.nvars), p);
}

// IP witness for the graph of a Pfaffian function on its chain domain:
// p(x, z) = z - P(x, chain(x)).
inline ImplicitWitness pfaffian_graph_witness(const PfaffianFunction& f,
                                              std::vector<Interval> working) {
  const PfaffianChain& ch = f.chain.get();
  ImplicitWitness w;
  w.kind = WitnessKind::Implicit;
  w.n = ch.n;
  w.m = 1;
  w.domain = ch.domain;
  w.working_box = std::move(working);
  int dim = ch.n + 1;
  w.V = DomainBox::whole(dim);
  // merge: chain variables map to the first n coords of the graph space
  std::vector<int> vm(ch.n);
  for (int i = 0; i < ch.n; ++i) vm[i] = i;
  ValidatedChain vc = chain_merge({f.chain}, {vm}, dim,
                                  detail::coord_names(dim), w.V);
  int nv = dim + ch.r;
  std::vector<int> full(ch.n + ch.r);
  for (int i = 0; i < ch.n; ++i) full[i] = i;
  for (int j = 0; j < ch.r; ++j) full[ch.n + j] = dim + j;
  SparsePolynomial p =
      SparsePolynomial::var(ch.n, nv) - f.superposition.remap(nv, full);
  w.system = {PfaffianFunction::from_poly(vc, p)};
  if (ch.n == 1)
    w.aux1 = {Fn1Pfaffian::direct(f)};
  else if (ch.n == 2)
    w.aux2 = {Fn2Pfaffian::direct(f)};
  else
    throw UnsupportedDimensions("graph witness needs n <= 2");
  w.B = detail::actual_complexity(w.system, dim);
  w.label = "graph";
  return w;
}

}  // namespace pfc
