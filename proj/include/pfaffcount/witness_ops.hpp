#pragma once

#include "pfaffcount/witness.hpp"

namespace pfc {

namespace detail {

// theta'(s) expressed in the image coordinate v = theta(s):
// theta'(s) = (1 - v^2)^{3/2} = (1 - v^2)^2 * h2(v), with h2 = 1/sqrt(1-v^2).
inline SparsePolynomial theta_prime_poly(int coord, int h2_slot, int nv) {
  SparsePolynomial v = SparsePolynomial::var(coord, nv);
  SparsePolynomial one = SparsePolynomial::constant(Rat(1), nv);
  SparsePolynomial u = one - v * v;
  return u * u * SparsePolynomial::var(h2_slot, nv);
}

// Symbolic determinant by Laplace expansion along the first column.
inline SparsePolynomial poly_det(const std::vector<std::vector<SparsePolynomial>>& m) {
  size_t k = m.size();
  if (k == 0) throw Error("poly_det: empty");
  if (k == 1) return m[0][0];
  int nv = m[0][0].nvars;
  SparsePolynomial acc(nv);
  for (size_t i = 0; i < k; ++i) {
    if (m[i][0].is_zero()) continue;
    std::vector<std::vector<SparsePolynomial>> minor;
    for (size_t r = 0; r < k; ++r) {
      if (r == i) continue;
      minor.push_back(std::vector<SparsePolynomial>(m[r].begin() + 1, m[r].end()));
    }
    SparsePolynomial term = m[i][0] * poly_det(minor);
    acc += (i % 2 == 0) ? term : -term;
  }
  return acc;
}

inline Interval range1(const Fn1& f, const Interval& box, long prec) {
  return certified_range(f, box, prec);
}

inline void check_formula(const Rat& actual, const Rat& pinned,
                          const std::string& what) {
  if (actual > pinned)
    throw CertificationUnavailable("closure formula for " + what +
                                   " under-estimates: actual " +
                                   rat_str(actual) + " > " + rat_str(pinned));
}

}  // namespace detail

// --- composition -------------------------------------------------------------

// Witness for outer(inner_1, ..., inner_k). All inners share the domain;
// kinds must agree with the outer kind. Stacked system: outer equations with
// input coordinates replaced by the inner value slots, plus every inner
// system; the Jacobian stays block-triangular. B' is passed by the specific
// operation wrapper (compose / add / mul / reciprocal formulas).
inline ImplicitWitness compose_multi(const ImplicitWitness& outer,
                                     const std::vector<ImplicitWitness>& inners,
                                     const Rat& pinned_bound,
                                     const std::string& label) {
  if (static_cast<int>(inners.size()) != outer.n)
    throw Error("compose_multi: arity mismatch");
  const ImplicitWitness& first = inners.at(0);
  int n = first.n;
  for (const auto& in : inners) {
    if (in.n != n) throw Error("compose_multi: inner arity mismatch");
    if (in.kind != outer.kind)
      throw Error("compose_multi: mixed witness kinds; restrict first");
  }
  // image containment pre-check on the working box
  for (size_t i = 0; i < inners.size(); ++i) {
    Interval img;
    if (n == 1)
      img = detail::range1(*inners[i].fn(), inners[i].working_box[0], 64);
    else
      img = certified_range2(*inners[i].fn2(), inners[i].working_box[0],
                             inners[i].working_box[1], 64);
    const auto& side = outer.domain.sides[i];
    bool ok = (!side.lo || img.lo > *side.lo) && (!side.hi || img.hi < *side.hi);
    if (!ok)
      throw ImageEscapesDomain("component " + std::to_string(i + 1) +
                               " image " + interval_str(img) +
                               " escapes outer domain");
  }

  int mg = outer.m;
  std::vector<int> inner_m;
  int m_in_total = 0;
  for (const auto& in : inners) {
    inner_m.push_back(in.m);
    m_in_total += in.m;
  }
  int m_new = mg + m_in_total;
  int dim = n + m_new;

  // coordinate layout: x (n) | w (outer aux, mg) | z^1 .. z^k (inner aux)
  auto z_start = [&](size_t i) {
    int s = n + mg;
    for (size_t j = 0; j < i; ++j) s += inner_m[j];
    return s;
  };

  // merged chain: outer chain then inner chains
  std::vector<ValidatedChain> chains{outer.chain()};
  std::vector<std::vector<int>> maps;
  {
    std::vector<int> vm(outer.n + mg);
    for (int i = 0; i < outer.n; ++i) vm[i] = z_start(i);  // input -> inner value
    for (int j = 0; j < mg; ++j) vm[outer.n + j] = n + j;
    maps.push_back(vm);
  }
  for (size_t i = 0; i < inners.size(); ++i) {
    chains.push_back(inners[i].chain());
    std::vector<int> vm(n + inner_m[i]);
    for (int c = 0; c < n; ++c) vm[c] = c;
    for (int k = 0; k < inner_m[i]; ++k) vm[n + k] = z_start(i) + k;
    maps.push_back(vm);
  }

  DomainBox Vnew = DomainBox::whole(dim);
  for (int c = 0; c < n; ++c) Vnew.sides[c] = first.V.sides[c];
  for (int j = 0; j < mg; ++j) Vnew.sides[n + j] = outer.V.sides[outer.n + j];
  for (size_t i = 0; i < inners.size(); ++i)
    for (int k = 0; k < inner_m[i]; ++k)
      Vnew.sides[z_start(i) + k] = inners[i].V.sides[n + k];

  std::vector<int> offsets;
  ValidatedChain merged = chain_merge(chains, maps, dim,
                                      detail::coord_names(dim), Vnew, &offsets);
  int r_total = merged.order();

  ImplicitWitness w;
  w.kind = outer.kind;
  w.n = n;
  w.m = m_new;
  w.domain = first.domain;
  w.working_box = first.working_box;
  w.V = Vnew;
  // systems
  auto remap_system = [&](const ImplicitWitness& src, const std::vector<int>& vm,
                          int offset) {
    const PfaffianChain& ch = src.chain().get();
    for (const auto& p : src.system) {
      std::vector<int> full(ch.n + ch.r);
      for (int i = 0; i < ch.n; ++i) full[i] = vm[i];
      for (int j = 0; j < ch.r; ++j) full[ch.n + j] = dim + offset + j;
      w.system.push_back(PfaffianFunction::from_poly(
          merged, p.superposition.remap(dim + r_total, full)));
    }
  };
  remap_system(outer, maps[0], offsets[0]);
  for (size_t i = 0; i < inners.size(); ++i)
    remap_system(inners[i], maps[i + 1], offsets[i + 1]);

  // evaluators
  if (n == 1) {
    if (outer.n == 1) {
      for (int j = 0; j < mg; ++j)
        w.aux1.push_back(fn1_compose(outer.aux1[j], inners[0].aux1[0]));
    } else {
      for (int j = 0; j < mg; ++j)
        w.aux1.push_back(fn1_curve(outer.aux2[j], inners[0].aux1[0],
                                   inners[1].aux1[0]));
    }
    for (const auto& in : inners)
      w.aux1.insert(w.aux1.end(), in.aux1.begin(), in.aux1.end());
  } else {
    if (outer.n == 1) {
      for (int j = 0; j < mg; ++j)
        w.aux2.push_back(fn2_outer1(outer.aux1[j], inners[0].aux2[0]));
    } else {
      for (int j = 0; j < mg; ++j)
        w.aux2.push_back(fn2_subst(outer.aux2[j], inners[0].aux2[0],
                                   inners[1].aux2[0]));
    }
    for (const auto& in : inners)
      w.aux2.insert(w.aux2.end(), in.aux2.begin(), in.aux2.end());
  }
  w.B = pinned_bound;
  detail::check_formula(detail::actual_complexity(w.system, dim), w.B, label);
  w.level = CertLevel::MeshCertified;
  w.label = label;
  return w;
}

inline ImplicitWitness compose_witness(const ImplicitWitness& g,
                                       const ImplicitWitness& f) {
  Rat b = ClosureFormulas::compose(f.B, g.B, f.m, g.m);
  return compose_multi(g, {f}, b, "compose");
}

// --- the product / sum primitives (two-variable witnesses) -------------------

namespace detail {

// Common scaffold for the product and sum witnesses on R^2: m = 4, chain of
// theta-inverse pairs on the three slot coordinates, equations
//   q1..q3: v_c^2 + thetainv(v_{slot})^2 - 1   (c = 1,2,3)
//   q4:     kind-specific relation tying slot products together.
inline ImplicitWitness arith_primitive(bool product) {
  ImplicitWitness w;
  w.kind = WitnessKind::RestrictedImplicit;
  w.n = 2;
  w.m = 4;
  w.domain = DomainBox::whole(2);
  w.working_box = {Interval(Rat(-8), Rat(8)), Interval(Rat(-8), Rat(8))};
  int dim = 6;
  w.V = DomainBox::whole(dim);
  for (int c = 3; c < 6; ++c) w.V.sides[c] = {Rat(-1), Rat(1)};

  // chain: theta-inverse pairs at coordinates 3, 4, 5
  std::vector<ValidatedChain> chains;
  std::vector<std::vector<int>> maps;
  for (int c = 3; c < 6; ++c) {
    chains.push_back(theta_inv_pair_chain(c, dim, coord_names(dim), w.V));
    std::vector<int> vm(dim);
    for (int i = 0; i < dim; ++i) vm[i] = i;
    maps.push_back(vm);
  }
  std::vector<int> offsets;
  ValidatedChain merged =
      chain_merge(chains, maps, dim, coord_names(dim), w.V, &offsets);
  int nv = dim + merged.order();
  auto V = [&](int i) { return SparsePolynomial::var(i, nv); };
  auto thinv = [&](int c) {
    // thetainv(v_c) = v_c * h2^{(c)}; pair for coord c sits at offset (c-3)*2
    return V(c) * V(dim + (c - 3) * 2 + 1);
  };
  SparsePolynomial one = SparsePolynomial::constant(Rat(1), nv);
  std::vector<SparsePolynomial> sys;
  for (int c = 0; c < 3; ++c)
    sys.push_back(V(c) * V(c) + thinv(c + 3) * thinv(c + 3) - one);
  if (product)
    sys.push_back(V(2) * thinv(3) * thinv(4) * thinv(5) -
                  V(0) * V(1) * thinv(5) * thinv(5));
  else
    sys.push_back(V(2) * thinv(3) * thinv(4) * thinv(5) -
                  (V(0) * thinv(4) + V(1) * thinv(3)) * thinv(5) * thinv(5));
  for (auto& p : sys)
    w.system.push_back(PfaffianFunction::from_poly(merged, p));

  Fn2Ptr x = fn2_x(), y = fn2_y();
  Fn2Ptr val = product ? fn2_mul(x, y) : fn2_add(x, y);
  auto rsq = [&](Fn2Ptr g) {
    // 1/sqrt(1+g^2) as an evaluable handle via the stock chain in one slot
    PfaffianFunction rs = PfaffianFunction::from_poly(
        make_theta_chain(), SparsePolynomial::var(2, 3));
    return fn2_outer1(Fn1Pfaffian::direct(rs), g);
  };
  w.aux2 = {val, rsq(x), rsq(y), rsq(val)};
  w.B = detail::actual_complexity(w.system, dim);
  w.boundary_closure_certified = true;
  w.label = product ? "mul-primitive" : "add-primitive";
  return w;
}

}  // namespace detail

inline ImplicitWitness mul_primitive_witness() {
  return detail::arith_primitive(true);
}
inline ImplicitWitness add_primitive_witness() {
  return detail::arith_primitive(false);
}

inline ImplicitWitness add_witness(const ImplicitWitness& f,
                                   const ImplicitWitness& g) {
  Rat b = ClosureFormulas::add(f.B, g.B, f.m, g.m);
  return compose_multi(add_primitive_witness(), {f, g}, b, "add");
}

inline ImplicitWitness mul_witness(const ImplicitWitness& f,
                                   const ImplicitWitness& g) {
  Rat b = ClosureFormulas::mul(f.B, g.B, f.m, g.m);
  return compose_multi(mul_primitive_witness(), {f, g}, b, "mul");
}

// Reciprocal primitive on (0, inf): aux (1/x, 1/sqrt(1+x^2)) with
//   p1 = v1^2 + thetainv(v3)^2 - 1,  p2 = thetainv(v3)^2 - v2^2.
inline ImplicitWitness reciprocal_primitive_witness() {
  ImplicitWitness w;
  w.kind = WitnessKind::RestrictedImplicit;
  w.n = 1;
  w.m = 2;
  w.domain = DomainBox::whole(1);
  w.domain.sides[0] = {Rat(0), std::nullopt};
  w.working_box = {Interval(rat(1, 64), Rat(64))};
  int dim = 3;
  w.V = DomainBox::whole(dim);
  w.V.sides[2] = {Rat(-1), Rat(1)};
  ValidatedChain merged =
      theta_inv_pair_chain(2, dim, detail::coord_names(dim), w.V);
  int nv = dim + 2;
  auto V = [&](int i) { return SparsePolynomial::var(i, nv); };
  SparsePolynomial thinv3 = V(2) * V(dim + 1);
  SparsePolynomial one = SparsePolynomial::constant(Rat(1), nv);
  w.system = {
      PfaffianFunction::from_poly(merged, V(0) * V(0) + thinv3 * thinv3 - one),
      PfaffianFunction::from_poly(merged, thinv3 * thinv3 - V(1) * V(1))};
  PfaffianFunction rs = PfaffianFunction::from_poly(make_theta_chain(),
                                                    SparsePolynomial::var(2, 3));
  w.aux1 = {fn1_recip(fn1_id()), Fn1Pfaffian::direct(rs)};
  w.B = detail::actual_complexity(w.system, dim);
  w.label = "recip-primitive";
  return w;
}

inline ImplicitWitness reciprocal_witness(const ImplicitWitness& f) {
  // certified image away from 0
  Interval img;
  if (f.n == 1)
    img = detail::range1(*f.fn(), f.working_box[0], 64);
  else
    img = certified_range2(*f.fn2(), f.working_box[0], f.working_box[1], 64);
  if (img.contains_zero())
    throw ZeroInImage("reciprocal: image encloses 0: " + interval_str(img));
  ImplicitWitness prim = reciprocal_primitive_witness();
  if (img.hi < 0) {
    // 1/f = -(1/(-f)): route through the (0,inf) primitive composed with -x.
    throw ZeroInImage("reciprocal: negative-image route not provided; negate first");
  }
  Rat b = ClosureFormulas::reciprocal(f.B, f.m);
  return compose_multi(prim, {f}, b, "reciprocal");
}

// --- derivative --------------------------------------------------------------

// Witness for the partial derivative d f / d x_dir via implicit
// differentiation: one new equation thetainv(u) * det(M) + det(M_1<-c) = 0,
// where M is the theta-corrected Jacobian of the system in the aux slots and
// c the column for the differentiation direction.
inline ImplicitWitness derivative_witness(const ImplicitWitness& f, int dir) {
  const int n = f.n, m = f.m;
  if (m > 8) throw UnsupportedDimensions("derivative witness with m > 8");
  bool irp = f.kind == WitnessKind::RestrictedImplicit;
  int dim_old = n + m;
  int dim = n + m + 1;  // x | u | z
  // var map old -> new: coords shift by one after x-block
  std::vector<int> vmap(dim_old);
  for (int i = 0; i < n; ++i) vmap[i] = i;
  for (int k = 0; k < m; ++k) vmap[n + k] = n + 1 + k;

  DomainBox Vnew = DomainBox::whole(dim);
  for (int i = 0; i < n; ++i) Vnew.sides[i] = f.V.sides[i];
  Vnew.sides[n] = irp ? DomainBox::Side{Rat(-1), Rat(1)} : DomainBox::Side{};
  for (int k = 0; k < m; ++k) Vnew.sides[n + 1 + k] = f.V.sides[n + k];

  // merged chain: old chain + theta-inverse pairs for (dir, u, z-slots)
  std::vector<ValidatedChain> chains{f.chain()};
  std::vector<std::vector<int>> maps{vmap};
  std::vector<int> pair_coords;
  if (irp) {
    pair_coords.push_back(dir);
    pair_coords.push_back(n);  // u slot
    for (int k = 0; k < m; ++k) pair_coords.push_back(n + 1 + k);
    for (int c : pair_coords) {
      chains.push_back(theta_inv_pair_chain(c, dim, detail::coord_names(dim), Vnew));
      std::vector<int> idm(dim);
      for (int i = 0; i < dim; ++i) idm[i] = i;
      maps.push_back(idm);
    }
  }
  std::vector<int> offsets;
  ValidatedChain merged =
      chain_merge(chains, maps, dim, detail::coord_names(dim), Vnew, &offsets);
  int r_total = merged.order();
  int nv = dim + r_total;

  auto h2_slot = [&](int which_pair) {
    return dim + offsets[1 + which_pair] + 1;
  };
  auto theta_prime = [&](int coord) -> SparsePolynomial {
    if (!irp) return SparsePolynomial::constant(Rat(1), nv);
    for (size_t i = 0; i < pair_coords.size(); ++i)
      if (pair_coords[i] == coord)
        return detail::theta_prime_poly(coord, h2_slot(static_cast<int>(i)), nv);
    throw Error("theta_prime: no pair for coordinate");
  };

  // remap an old PfaffianFunction into the new ring
  const PfaffianChain& oldch = f.chain().get();
  std::vector<int> full(oldch.n + oldch.r);
  for (int i = 0; i < oldch.n; ++i) full[i] = vmap[i];
  for (int j = 0; j < oldch.r; ++j) full[oldch.n + j] = dim + offsets[0] + j;
  auto lift = [&](const PfaffianFunction& p) {
    return p.superposition.remap(nv, full);
  };

  // corrected Jacobian and direction column
  std::vector<std::vector<SparsePolynomial>> M(m, std::vector<SparsePolynomial>(m, SparsePolynomial(nv)));
  std::vector<SparsePolynomial> col(m, SparsePolynomial(nv));
  for (int j = 0; j < m; ++j) {
    for (int k = 0; k < m; ++k)
      M[j][k] = lift(derive(f.system[j], n + k)) * theta_prime(n + 1 + k);
    col[j] = lift(derive(f.system[j], dir)) * theta_prime(dir);
  }
  SparsePolynomial D = detail::poly_det(M);
  std::vector<std::vector<SparsePolynomial>> M1 = M;
  for (int j = 0; j < m; ++j) M1[j][0] = col[j];
  SparsePolynomial DK = detail::poly_det(M1);

  SparsePolynomial u_expr = SparsePolynomial::var(n, nv);
  if (irp) {
    // thetainv(u) = u * h2^{(u)}; the u pair is the second pair entry
    u_expr = u_expr * SparsePolynomial::var(h2_slot(1), nv);
  }
  SparsePolynomial p_new = u_expr * D + DK;

  ImplicitWitness w;
  w.kind = f.kind;
  w.n = n;
  w.m = m + 1;
  w.domain = f.domain;
  w.working_box = f.working_box;
  w.V = Vnew;
  w.system.push_back(PfaffianFunction::from_poly(merged, p_new));
  for (const auto& p : f.system)
    w.system.push_back(PfaffianFunction::from_poly(merged, lift(p)));
  if (n == 1) {
    w.aux1.push_back(fn1_deriv(f.aux1[0]));
    w.aux1.insert(w.aux1.end(), f.aux1.begin(), f.aux1.end());
  } else {
    w.aux2.push_back(fn2_partial(f.aux2[0], dir));
    w.aux2.insert(w.aux2.end(), f.aux2.begin(), f.aux2.end());
  }
  w.B = ClosureFormulas::derivative(f.B, m, n);
  detail::check_formula(detail::actual_complexity(w.system, dim), w.B,
                        "derivative");
  w.label = "derivative";
  return w;
}

// --- inverse -----------------------------------------------------------------

// Inverse of a univariate bijection with certified nonvanishing derivative.
// The system is the same list of Pfaffian functions with the input and value
// coordinate roles exchanged, so B is preserved exactly.
inline ImplicitWitness inverse_witness(const ImplicitWitness& f) {
  if (f.n != 1) throw UnsupportedDimensions("inverse needs a unary witness");
  Fn1Ptr fn = f.fn();
  int sign;
  try {
    sign = certified_sign(*fn1_deriv(fn), f.working_box[0], 64);
  } catch (const IsolationFailure&) {
    throw DerivativeVanishes("inverse: derivative not certified nonzero");
  }
  int dim = 1 + f.m;
  std::vector<int> vmap(dim);
  vmap[0] = 1;
  vmap[1] = 0;
  for (int k = 2; k < dim; ++k) vmap[k] = k;

  Interval lo_img = fn->eval(Interval(f.working_box[0].lo), 80);
  Interval hi_img = fn->eval(Interval(f.working_box[0].hi), 80);
  Interval J = sign > 0 ? Interval(lo_img.hi, hi_img.lo)
                        : Interval(hi_img.hi, lo_img.lo);

  DomainBox Vnew = DomainBox::whole(dim);
  Vnew.sides[0] = f.V.sides[1];
  Vnew.sides[1] = f.V.sides[0];
  for (int k = 2; k < dim; ++k) Vnew.sides[k] = f.V.sides[k];

  ValidatedChain merged = chain_merge({f.chain()}, {vmap}, dim,
                                      detail::coord_names(dim), Vnew);
  const PfaffianChain& oldch = f.chain().get();
  std::vector<int> full(oldch.n + oldch.r);
  for (int i = 0; i < dim; ++i) full[i] = vmap[i];
  for (int j = 0; j < oldch.r; ++j) full[dim + j] = dim + j;

  ImplicitWitness w;
  w.kind = f.kind;
  w.n = 1;
  w.m = f.m;
  w.domain = DomainBox::box({J});
  w.working_box = {J};
  w.V = Vnew;
  for (const auto& p : f.system)
    w.system.push_back(PfaffianFunction::from_poly(
        merged, p.superposition.remap(dim + oldch.r, full)));
  Fn1Ptr inv = std::make_shared<Fn1Inverse>(fn, f.working_box[0], sign);
  w.aux1.push_back(inv);
  for (int k = 1; k < f.m; ++k)
    w.aux1.push_back(fn1_compose(f.aux1[k], inv));
  w.B = f.B;  // inverse preserves the bound exactly
  w.label = "inverse";
  return w;
}

// --- restriction -------------------------------------------------------------

// Restriction of an Implicit (unrestricted) witness to a bounded sub-box W
// with closure inside the domain, producing a RestrictedImplicit witness by
// conjugating the whole system through theta-inverse coordinatewise. The
// returned bound depends on B alone, not on W.
inline ImplicitWitness restrict_witness(const ImplicitWitness& f,
                                        const std::vector<Interval>& W) {
  if (f.kind != WitnessKind::Implicit)
    throw Error("restrict expects an unrestricted witness");
  const int n = f.n, m = f.m;
  const int dim = n + m;
  // closure(W) strictly inside domain
  for (int i = 0; i < n; ++i) {
    const auto& side = f.domain.sides[i];
    if (side.lo && !(W[i].lo > *side.lo))
      throw ClosureEscapes("sub-box touches domain boundary from below");
    if (side.hi && !(W[i].hi < *side.hi))
      throw ClosureEscapes("sub-box touches domain boundary from above");
  }
  // bounded auxiliary image over W; graph box W'
  std::vector<Interval> Wp(dim);
  for (int i = 0; i < n; ++i) Wp[i] = W[i];
  for (int k = 0; k < m; ++k) {
    Interval img;
    try {
      if (n == 1)
        img = detail::range1(*f.aux1[k], W[0], 64);
      else
        img = certified_range2(*f.aux2[k], W[0], W[1], 64);
    } catch (const Error& e) {
      throw UnboundedAuxiliary(std::string("auxiliary image over sub-box: ") +
                               e.what());
    }
    Wp[n + k] = widen(img, max_rat(img.width() / 16, rat(1, 1024)));
    const auto& side = f.V.sides[n + k];
    if ((side.lo && !(Wp[n + k].lo > *side.lo)) ||
        (side.hi && !(Wp[n + k].hi < *side.hi)))
      throw ClosureEscapes("graph box escapes V");
  }

  // new V = theta(W') slightly inflated, inside (-1,1)^dim
  DomainBox Vnew = DomainBox::whole(dim);
  for (int c = 0; c < dim; ++c) {
    Interval th = theta_map(Wp[c], 80);
    th = widen(th, pow2(-40));
    Vnew.sides[c] = {max_rat(th.lo, Rat(-1)), min_rat(th.hi, Rat(1))};
  }

  // merged chain built by hand: theta-inverse pairs on every coordinate,
  // then the original chain functions conjugated through theta-inverse.
  const PfaffianChain& oldch = f.chain().get();
  PfaffianChain nc;
  nc.n = dim;
  nc.r = 2 * dim + oldch.r;
  nc.var_names = detail::coord_names(dim);
  nc.domain = Vnew;
  int nv = dim + nc.r;
  nc.defining.assign(nc.r, std::vector<SparsePolynomial>(dim, SparsePolynomial(nv)));
  auto var = [&](int i) { return SparsePolynomial::var(i, nv); };
  auto h1 = [&](int c) { return var(dim + 2 * c); };
  auto h2 = [&](int c) { return var(dim + 2 * c + 1); };
  for (int c = 0; c < dim; ++c) {
    nc.defining[2 * c][c] = var(c) * h1(c) * h1(c) * Rat(2);
    nc.defining[2 * c + 1][c] = var(c) * h1(c) * h2(c);
    nc.init.push_back(Builtin{BuiltinKind::InvOneMinusSq, c, {}});
    nc.init.push_back(Builtin{BuiltinKind::InvSqrtOneMinusSq, c, {}});
  }
  // substitution items: old coordinate l -> v_l * h2^l; old slot j -> g~_j
  std::vector<SparsePolynomial> subst(oldch.n + oldch.r, SparsePolynomial(nv));
  for (int l = 0; l < dim; ++l) subst[l] = var(l) * h2(l);
  for (int j = 0; j < oldch.r; ++j) subst[oldch.n + j] = var(dim + 2 * dim + j);
  ChainEval old_eval(f.chain());
  for (int j = 0; j < oldch.r; ++j) {
    int row = 2 * dim + j;
    for (int c = 0; c < dim; ++c) {
      SparsePolynomial acc(nv);
      const SparsePolynomial& pij = oldch.defining[j][c];
      if (!pij.is_zero()) acc = pij.substitute(subst) * (h1(c) * h2(c));
      nc.defining[row][c] = acc;
    }
    // conjugated range evaluator: g~_j(v) = g_j(thetainv(v)) coordinatewise
    nc.init.push_back(CustomInit{
        [old_eval, j, dim](const std::vector<Interval>& box, long prec) {
          std::vector<Interval> pre(dim);
          for (int c = 0; c < dim; ++c) {
            Interval u = Interval(Rat(1)) - pow_i(box[c], 2);
            if (!(u.lo > 0))
              throw DomainViolation("conjugated chain outside (-1,1)");
            pre[c] = round_out(box[c] * rsqrt_i(u, prec + 8), prec);
          }
          // only the first oldch.n coordinates feed the original chain
          std::vector<Interval> coords(pre.begin(), pre.begin() + old_eval.chain().n());
          return old_eval.values_over(coords, prec)[j];
        }});
  }
  ValidatedChain merged = chain_validate(nc);

  ImplicitWitness w;
  w.kind = WitnessKind::RestrictedImplicit;
  w.n = n;
  w.m = m;
  w.domain = DomainBox::box(W);
  w.working_box = W;
  w.V = Vnew;
  for (const auto& p : f.system)
    w.system.push_back(
        PfaffianFunction::from_poly(merged, p.superposition.substitute(subst)));
  w.aux1 = f.aux1;
  w.aux2 = f.aux2;
  w.B = ClosureFormulas::restrict_bound(f.B);
  w.boundary_closure_certified = true;  // arranged by the W' construction
  w.label = "restrict(" + f.label + ")";
  return w;
}

// --- residual certification ---------------------------------------------------

struct WitnessCertification {
  bool ok = true;
  Rat max_residual = Rat(0);
  Rat min_jacobian_mig = Rat(0);
  int samples = 0;
  std::string failure;
};

// Mesh-level certification: at seeded sample points of the working box,
// every system equation evaluated on the (theta-mapped) graph enclosure must
// contain a value within tol of 0, and the Jacobian determinant enclosure in
// the aux slots must exclude 0.
inline WitnessCertification certify_witness(const ImplicitWitness& w,
                                            int samples = 64, long prec = 96,
                                            Rat tol = pow2(-30)) {
  WitnessCertification cert;
  RandomSource rng(1);
  bool irp = w.kind == WitnessKind::RestrictedImplicit;
  int dim = w.n + w.m;
  // symbolic Jacobian in the aux slots (no theta correction: the correction
  // factors are strictly positive, so excluding 0 is equivalent)
  std::vector<std::vector<PfaffianFunction>> jac;
  for (int j = 0; j < w.m; ++j) {
    std::vector<PfaffianFunction> row;
    for (int k = 0; k < w.m; ++k) row.push_back(derive(w.system[j], w.n + k));
    jac.push_back(row);
  }
  bool first_sample = true;
  for (int s = 0; s < samples; ++s) {
    std::vector<Interval> pt(dim, Interval(Rat(0)));
    std::vector<Interval> xs;
    for (int i = 0; i < w.n; ++i) {
      Rat x = rng.rat_in(w.working_box[i].lo, w.working_box[i].hi);
      xs.push_back(Interval(x));
      pt[i] = Interval(x);
    }
    for (int k = 0; k < w.m; ++k) {
      Interval v = w.n == 1 ? w.aux1[k]->eval(xs[0], prec)
                            : w.aux2[k]->eval(xs[0], xs[1], prec);
      pt[w.n + k] = v;
    }
    if (irp)
      for (auto& c : pt) c = theta_map(c, prec);
    for (const auto& p : w.system) {
      Interval r = eval_over(p, pt, prec);
      Rat resid = r.mig();  // distance of the enclosure from 0
      cert.max_residual = max_rat(cert.max_residual, resid);
      if (resid > tol) {
        cert.ok = false;
        cert.failure = "residual " + rat_str(resid) + " exceeds tolerance";
      }
    }
    // Jacobian determinant via interval arithmetic on the symbolic entries
    std::vector<std::vector<Interval>> J(w.m, std::vector<Interval>(w.m));
    for (int j = 0; j < w.m; ++j)
      for (int k = 0; k < w.m; ++k) J[j][k] = eval_over(jac[j][k], pt, prec);
    // interval determinant by expansion (m small)
    std::function<Interval(std::vector<std::vector<Interval>>)> idet =
        [&](std::vector<std::vector<Interval>> mat) -> Interval {
      size_t k = mat.size();
      if (k == 1) return mat[0][0];
      Interval acc(Rat(0));
      for (size_t i = 0; i < k; ++i) {
        std::vector<std::vector<Interval>> minor;
        for (size_t r = 0; r < k; ++r) {
          if (r == i) continue;
          minor.push_back(
              std::vector<Interval>(mat[r].begin() + 1, mat[r].end()));
        }
        Interval term = mat[i][0] * idet(minor);
        acc = (i % 2 == 0) ? acc + term : acc - term;
      }
      return acc;
    };
    Interval dj = idet(J);
    if (dj.contains_zero()) {
      cert.ok = false;
      cert.failure = "jacobian determinant enclosure contains 0";
    } else if (first_sample || dj.mig() < cert.min_jacobian_mig) {
      cert.min_jacobian_mig = dj.mig();
      first_sample = false;
    }
    ++cert.samples;
  }
  return cert;
}

}  // namespace pfc
