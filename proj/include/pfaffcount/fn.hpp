#pragma once

#include <functional>
#include <memory>

#include "pfaffcount/eval.hpp"

namespace pfc {

// Evaluable real-function handles. Every node supports interval evaluation
// and interval Taylor coefficients over a box (coefficient k enclosing
// f^(k)/k! there), which is what the certifiers, root isolators and
// parameterization passes consume. Handles are immutable and shared.
class Fn1;
class Fn2;
using Fn1Ptr = std::shared_ptr<const Fn1>;
using Fn2Ptr = std::shared_ptr<const Fn2>;

class Fn1 {
 public:
  virtual ~Fn1() = default;
  virtual Interval eval(const Interval& x, long prec) const = 0;
  virtual Series1 taylor(const Interval& x, int ord, long prec) const = 0;
  virtual std::string describe() const { return "fn1"; }

  Interval eval_at(const Rat& x, long prec) const { return eval(Interval(x), prec); }
  // Certified derivative value enclosure (order q) over a box.
  Interval deriv(const Interval& x, int q, long prec) const {
    Series1 s = taylor(x, q, prec);
    Rat fact = 1;
    for (int i = 2; i <= q; ++i) fact *= i;
    return fact * s.c[q];
  }
};

class Fn2 {
 public:
  virtual ~Fn2() = default;
  virtual Interval eval(const Interval& x, const Interval& y, long prec) const = 0;
  virtual Series2 taylor(const Interval& x, const Interval& y, int ord,
                         long prec) const = 0;
  virtual std::string describe() const { return "fn2"; }

  Interval deriv(const Interval& x, const Interval& y, int a1, int a2,
                 long prec) const {
    Series2 s = taylor(x, y, a1 + a2, prec);
    Rat fact = 1;
    for (int i = 2; i <= a1; ++i) fact *= i;
    for (int i = 2; i <= a2; ++i) fact *= i;
    return fact * s.at(a1, a2);
  }
};

// --- elementary univariate nodes -------------------------------------------

class Fn1Const final : public Fn1 {
 public:
  explicit Fn1Const(Interval v) : v_(std::move(v)) {}
  Interval eval(const Interval&, long) const override { return v_; }
  Series1 taylor(const Interval&, int ord, long) const override {
    return Series1::constant(v_, ord);
  }
  std::string describe() const override { return "const " + interval_str(v_); }

 private:
  Interval v_;
};

class Fn1Identity final : public Fn1 {
 public:
  Interval eval(const Interval& x, long) const override { return x; }
  Series1 taylor(const Interval& x, int ord, long) const override {
    return Series1::identity(x, ord);
  }
  std::string describe() const override { return "x"; }
};

// a*x + b
class Fn1Affine final : public Fn1 {
 public:
  Fn1Affine(Rat a, Rat b) : a_(std::move(a)), b_(std::move(b)) {}
  Interval eval(const Interval& x, long) const override { return a_ * x + b_; }
  Series1 taylor(const Interval& x, int ord, long) const override {
    Series1 s = Series1::constant(a_ * x + b_, ord);
    if (ord >= 1) s.c[1] = Interval(a_);
    return s;
  }
  std::string describe() const override {
    return rat_str(a_) + "*x + " + rat_str(b_);
  }

 private:
  Rat a_, b_;
};

// Polynomial combination of argument handles.
class Fn1Poly final : public Fn1 {
 public:
  Fn1Poly(SparsePolynomial p, std::vector<Fn1Ptr> args)
      : p_(std::move(p)), args_(std::move(args)) {}
  Interval eval(const Interval& x, long prec) const override {
    std::vector<Interval> vals;
    vals.reserve(args_.size());
    for (const auto& a : args_) vals.push_back(a->eval(x, prec));
    return p_.eval(vals, prec);
  }
  Series1 taylor(const Interval& x, int ord, long prec) const override {
    std::vector<Series1> vals;
    vals.reserve(args_.size());
    for (const auto& a : args_) vals.push_back(a->taylor(x, ord, prec));
    return p_.eval_series1(vals, prec);
  }
  std::string describe() const override { return "poly1"; }

 private:
  SparsePolynomial p_;
  std::vector<Fn1Ptr> args_;
};

// Pfaffian superposition along an affine embedding t -> base + dir*t of the
// chain coordinates. Covers restrictions of any PfaffianFunction to a line.
class Fn1Pfaffian final : public Fn1 {
 public:
  Fn1Pfaffian(PfaffianFunction f, std::vector<Rat> base, std::vector<Rat> dir)
      : f_(std::move(f)), base_(std::move(base)), dir_(std::move(dir)),
        ev_(f_.chain) {}

  static Fn1Ptr line(const PfaffianFunction& f, std::vector<Rat> base,
                     std::vector<Rat> dir) {
    return std::make_shared<Fn1Pfaffian>(f, std::move(base), std::move(dir));
  }
  // univariate function: t itself is the chain coordinate
  static Fn1Ptr direct(const PfaffianFunction& f) {
    return std::make_shared<Fn1Pfaffian>(f, std::vector<Rat>{Rat(0)},
                                         std::vector<Rat>{Rat(1)});
  }

  Interval eval(const Interval& t, long prec) const override {
    const PfaffianChain& ch = f_.chain.get();
    std::vector<Interval> box(ch.n);
    for (int i = 0; i < ch.n; ++i) box[i] = Interval(base_[i]) + dir_[i] * t;
    std::vector<Interval> args = box;
    auto vals = ev_.values_over(box, prec);
    args.insert(args.end(), vals.begin(), vals.end());
    return f_.superposition.eval(args, prec);
  }

  Series1 taylor(const Interval& t, int ord, long prec) const override {
    const PfaffianChain& ch = f_.chain.get();
    auto chain_series = ev_.series_line(base_, dir_, t, ord, prec);
    std::vector<Series1> args;
    for (int i = 0; i < ch.n; ++i) {
      Series1 s = Series1::constant(Interval(base_[i]) + dir_[i] * t, ord);
      if (ord >= 1) s.c[1] = Interval(dir_[i]);
      args.push_back(s);
    }
    args.insert(args.end(), chain_series.begin(), chain_series.end());
    return f_.superposition.eval_series1(args, prec);
  }
  std::string describe() const override { return "pfaffian1"; }

 private:
  PfaffianFunction f_;
  std::vector<Rat> base_, dir_;
  ChainEval ev_;
};

class Fn1Compose final : public Fn1 {
 public:
  Fn1Compose(Fn1Ptr outer, Fn1Ptr inner)
      : outer_(std::move(outer)), inner_(std::move(inner)) {}
  Interval eval(const Interval& x, long prec) const override {
    return outer_->eval(inner_->eval(x, prec), prec);
  }
  Series1 taylor(const Interval& x, int ord, long prec) const override {
    Series1 in = inner_->taylor(x, ord, prec);
    Series1 out = outer_->taylor(in.c[0], ord, prec);
    return s_compose(out, in, prec);
  }
  std::string describe() const override {
    return outer_->describe() + " o " + inner_->describe();
  }

 private:
  Fn1Ptr outer_, inner_;
};

class Fn1Recip final : public Fn1 {
 public:
  explicit Fn1Recip(Fn1Ptr f) : f_(std::move(f)) {}
  Interval eval(const Interval& x, long prec) const override {
    return round_out(recip(f_->eval(x, prec)), prec);
  }
  Series1 taylor(const Interval& x, int ord, long prec) const override {
    return s_recip(f_->taylor(x, ord, prec), prec);
  }
  std::string describe() const override { return "1/(" + f_->describe() + ")"; }

 private:
  Fn1Ptr f_;
};

// Derivative of a handle, via Taylor shift.
class Fn1Deriv final : public Fn1 {
 public:
  explicit Fn1Deriv(Fn1Ptr f, int order = 1) : f_(std::move(f)), q_(order) {}
  Interval eval(const Interval& x, long prec) const override {
    return f_->deriv(x, q_, prec);
  }
  Series1 taylor(const Interval& x, int ord, long prec) const override {
    Series1 s = f_->taylor(x, ord + q_, prec);
    for (int i = 0; i < q_; ++i) s = s_dx(s);
    s.c.resize(ord + 1);
    return s;
  }
  std::string describe() const override { return "d^" + std::to_string(q_) + " " + f_->describe(); }

 private:
  Fn1Ptr f_;
  int q_;
};

// Partial derivative of a bivariate handle, via Taylor shift.
class Fn2Deriv final : public Fn2 {
 public:
  Fn2Deriv(Fn2Ptr f, int a1, int a2) : f_(std::move(f)), a1_(a1), a2_(a2) {}
  Interval eval(const Interval& x, const Interval& y, long prec) const override {
    return f_->deriv(x, y, a1_, a2_, prec);
  }
  Series2 taylor(const Interval& x, const Interval& y, int ord,
                 long prec) const override {
    Series2 s = f_->taylor(x, y, ord + a1_ + a2_, prec);
    for (int i = 0; i < a1_; ++i) s = s2_dx(s);
    for (int i = 0; i < a2_; ++i) s = s2_dy(s);
    Series2 r = Series2::zero(ord);
    for (int t = 0; t <= ord; ++t)
      for (int b = 0; b <= t; ++b) r.at(t - b, b) = s.at(t - b, b);
    return r;
  }
  std::string describe() const override { return "d2"; }

 private:
  Fn2Ptr f_;
  int a1_, a2_;
};

// --- elementary bivariate nodes ---------------------------------------------

class Fn2Const final : public Fn2 {
 public:
  explicit Fn2Const(Interval v) : v_(std::move(v)) {}
  Interval eval(const Interval&, const Interval&, long) const override { return v_; }
  Series2 taylor(const Interval&, const Interval&, int ord, long) const override {
    return Series2::constant(v_, ord);
  }
  std::string describe() const override { return "const2"; }

 private:
  Interval v_;
};

class Fn2CoordX final : public Fn2 {
 public:
  Interval eval(const Interval& x, const Interval&, long) const override { return x; }
  Series2 taylor(const Interval& x, const Interval&, int ord, long) const override {
    return Series2::coord_x(x, ord);
  }
  std::string describe() const override { return "x"; }
};

class Fn2CoordY final : public Fn2 {
 public:
  Interval eval(const Interval&, const Interval& y, long) const override { return y; }
  Series2 taylor(const Interval&, const Interval& y, int ord, long) const override {
    return Series2::coord_y(y, ord);
  }
  std::string describe() const override { return "y"; }
};

class Fn2Poly final : public Fn2 {
 public:
  Fn2Poly(SparsePolynomial p, std::vector<Fn2Ptr> args)
      : p_(std::move(p)), args_(std::move(args)) {}
  Interval eval(const Interval& x, const Interval& y, long prec) const override {
    std::vector<Interval> vals;
    for (const auto& a : args_) vals.push_back(a->eval(x, y, prec));
    return p_.eval(vals, prec);
  }
  Series2 taylor(const Interval& x, const Interval& y, int ord,
                 long prec) const override {
    std::vector<Series2> vals;
    for (const auto& a : args_) vals.push_back(a->taylor(x, y, ord, prec));
    return p_.eval_series2(vals, prec);
  }
  std::string describe() const override { return "poly2"; }

 private:
  SparsePolynomial p_;
  std::vector<Fn2Ptr> args_;
};

// Pfaffian superposition with an affine plane embedding (x,y) -> chain coords.
class Fn2Pfaffian final : public Fn2 {
 public:
  Fn2Pfaffian(PfaffianFunction f, std::vector<Rat> base, std::vector<Rat> dx,
              std::vector<Rat> dy)
      : f_(std::move(f)), base_(std::move(base)), dx_(std::move(dx)),
        dy_(std::move(dy)), ev_(f_.chain) {}

  // chain already lives on two variables (x, y)
  static Fn2Ptr direct(const PfaffianFunction& f) {
    return std::make_shared<Fn2Pfaffian>(f, std::vector<Rat>{Rat(0), Rat(0)},
                                         std::vector<Rat>{Rat(1), Rat(0)},
                                         std::vector<Rat>{Rat(0), Rat(1)});
  }
  // univariate chain applied to the first variable
  static Fn2Ptr of_x(const PfaffianFunction& f) {
    return std::make_shared<Fn2Pfaffian>(f, std::vector<Rat>{Rat(0)},
                                         std::vector<Rat>{Rat(1)},
                                         std::vector<Rat>{Rat(0)});
  }
  static Fn2Ptr of_y(const PfaffianFunction& f) {
    return std::make_shared<Fn2Pfaffian>(f, std::vector<Rat>{Rat(0)},
                                         std::vector<Rat>{Rat(0)},
                                         std::vector<Rat>{Rat(1)});
  }

  Interval eval(const Interval& x, const Interval& y, long prec) const override {
    const PfaffianChain& ch = f_.chain.get();
    std::vector<Interval> box(ch.n);
    for (int i = 0; i < ch.n; ++i)
      box[i] = Interval(base_[i]) + dx_[i] * x + dy_[i] * y;
    std::vector<Interval> args = box;
    auto vals = ev_.values_over(box, prec);
    args.insert(args.end(), vals.begin(), vals.end());
    return f_.superposition.eval(args, prec);
  }

  // Symbolic partial derivative along the embedded direction: stays in the
  // same representation, so downstream evaluation avoids series arithmetic.
  Fn2Ptr partial(int dir) const {
    const PfaffianChain& ch = f_.chain.get();
    const std::vector<Rat>& d = dir == 0 ? dx_ : dy_;
    SparsePolynomial acc(ch.n + ch.r);
    PfaffianFunction out = f_;
    out.superposition = acc;
    for (int i = 0; i < ch.n; ++i) {
      if (d[i] == 0) continue;
      out.superposition += derive(f_, i).superposition * d[i];
    }
    return std::make_shared<Fn2Pfaffian>(out, base_, dx_, dy_);
  }

  Series2 taylor(const Interval& x, const Interval& y, int ord,
                 long prec) const override {
    const PfaffianChain& ch = f_.chain.get();
    std::vector<Series2> args;
    std::vector<Interval> box(ch.n);
    for (int i = 0; i < ch.n; ++i) {
      box[i] = Interval(base_[i]) + dx_[i] * x + dy_[i] * y;
      Series2 s = Series2::constant(box[i], ord);
      if (ord >= 1) {
        s.at(1, 0) = Interval(dx_[i]);
        s.at(0, 1) = Interval(dy_[i]);
      }
      args.push_back(s);
    }
    std::vector<Series2> chain_series = chain_series_over(box, ord, prec);
    args.insert(args.end(), chain_series.begin(), chain_series.end());
    return f_.superposition.eval_series2(args, prec);
  }
  std::string describe() const override { return "pfaffian2"; }

 private:
  PfaffianFunction f_;
  std::vector<Rat> base_, dx_, dy_;
  ChainEval ev_;

  // Chain-function series in the (x,y) parameters: for n==2 identity embeds
  // use the planar recurrence; otherwise run the recurrence directly in the
  // embedded parameters.
  std::vector<Series2> chain_series_over(const std::vector<Interval>& box,
                                         int ord, long prec) const {
    const PfaffianChain& ch = f_.chain.get();
    std::vector<Interval> ranges = ev_.values_over(box, prec);
    std::vector<Series2> args;
    for (int i = 0; i < ch.n; ++i) {
      Series2 s = Series2::constant(box[i], ord);
      if (ord >= 1) {
        s.at(1, 0) = Interval(dx_[i]);
        s.at(0, 1) = Interval(dy_[i]);
      }
      args.push_back(s);
    }
    for (int j = 0; j < ch.r; ++j)
      args.push_back(Series2::constant(ranges[j], ord));
    for (int s = 0; s < ord; ++s) {
      for (int j = 0; j < ch.r; ++j) {
        // d/dx and d/dy of f_j along the embedding
        Series2 px = Series2::zero(ord), py = Series2::zero(ord);
        bool need_x = false, need_y = false;
        for (int i = 0; i < ch.n; ++i) {
          if (dx_[i] != 0) need_x = true;
          if (dy_[i] != 0) need_y = true;
        }
        if (need_x) {
          for (int i = 0; i < ch.n; ++i) {
            if (dx_[i] == 0) continue;
            px = px + Interval(dx_[i]) * ch.defining[j][i].eval_series2(args, prec);
          }
        }
        if (need_y) {
          for (int i = 0; i < ch.n; ++i) {
            if (dy_[i] == 0) continue;
            py = py + Interval(dy_[i]) * ch.defining[j][i].eval_series2(args, prec);
          }
        }
        for (int a2 = 0; a2 <= s + 1; ++a2) {
          int a1 = s + 1 - a2;
          Interval v;
          if (a1 >= 1) {
            v = px.at(a1 - 1, a2);
            v = Interval::unchecked(v.lo / a1, v.hi / a1);
          } else {
            v = py.at(0, a2 - 1);
            v = Interval::unchecked(v.lo / a2, v.hi / a2);
          }
          args[ch.n + j].at(a1, a2) = round_out(v, prec);
        }
      }
    }
    return std::vector<Series2>(args.begin() + ch.n, args.end());
  }
};

// outer(inner(x,y)) with univariate outer.
class Fn2ComposeOuter1 final : public Fn2 {
 public:
  Fn2ComposeOuter1(Fn1Ptr outer, Fn2Ptr inner)
      : outer_(std::move(outer)), inner_(std::move(inner)) {}
  Interval eval(const Interval& x, const Interval& y, long prec) const override {
    return outer_->eval(inner_->eval(x, y, prec), prec);
  }
  Series2 taylor(const Interval& x, const Interval& y, int ord,
                 long prec) const override {
    Series2 in = inner_->taylor(x, y, ord, prec);
    Series1 out = outer_->taylor(in.at(0, 0), ord, prec);
    return s2_compose1(out, in, prec);
  }
  std::string describe() const override {
    return outer_->describe() + " o " + inner_->describe();
  }

 private:
  Fn1Ptr outer_;
  Fn2Ptr inner_;
};

// f(u(x,y), v(x,y)) with bivariate f.
class Fn2Subst final : public Fn2 {
 public:
  Fn2Subst(Fn2Ptr f, Fn2Ptr u, Fn2Ptr v)
      : f_(std::move(f)), u_(std::move(u)), v_(std::move(v)) {}
  Interval eval(const Interval& x, const Interval& y, long prec) const override {
    return f_->eval(u_->eval(x, y, prec), v_->eval(x, y, prec), prec);
  }
  Series2 taylor(const Interval& x, const Interval& y, int ord,
                 long prec) const override {
    Series2 su = u_->taylor(x, y, ord, prec);
    Series2 sv = v_->taylor(x, y, ord, prec);
    Series2 sf = f_->taylor(su.at(0, 0), sv.at(0, 0), ord, prec);
    return s2_compose2(sf, su, sv, prec);
  }
  std::string describe() const override { return "subst"; }

 private:
  Fn2Ptr f_, u_, v_;
};

// Lift univariate handles to the plane.
class Fn2FromX final : public Fn2 {
 public:
  explicit Fn2FromX(Fn1Ptr f) : f_(std::move(f)) {}
  Interval eval(const Interval& x, const Interval&, long prec) const override {
    return f_->eval(x, prec);
  }
  Series2 taylor(const Interval& x, const Interval&, int ord,
                 long prec) const override {
    Series1 s = f_->taylor(x, ord, prec);
    Series2 r = Series2::zero(ord);
    for (int k = 0; k <= ord; ++k) r.at(k, 0) = s.c[k];
    return r;
  }
  std::string describe() const override { return f_->describe() + "(x)"; }

 private:
  Fn1Ptr f_;
};

class Fn2FromY final : public Fn2 {
 public:
  explicit Fn2FromY(Fn1Ptr f) : f_(std::move(f)) {}
  Interval eval(const Interval&, const Interval& y, long prec) const override {
    return f_->eval(y, prec);
  }
  Series2 taylor(const Interval&, const Interval& y, int ord,
                 long prec) const override {
    Series1 s = f_->taylor(y, ord, prec);
    Series2 r = Series2::zero(ord);
    for (int k = 0; k <= ord; ++k) r.at(0, k) = s.c[k];
    return r;
  }
  std::string describe() const override { return f_->describe() + "(y)"; }

 private:
  Fn1Ptr f_;
};

// Swap the two arguments.
class Fn2Transpose final : public Fn2 {
 public:
  explicit Fn2Transpose(Fn2Ptr f) : f_(std::move(f)) {}
  const Fn2Ptr& inner() const { return f_; }
  Interval eval(const Interval& x, const Interval& y, long prec) const override {
    return f_->eval(y, x, prec);
  }
  Series2 taylor(const Interval& x, const Interval& y, int ord,
                 long prec) const override {
    Series2 s = f_->taylor(y, x, ord, prec);
    Series2 r = Series2::zero(ord);
    for (int s1 = 0; s1 <= ord; ++s1)
      for (int a2 = 0; a2 <= s1; ++a2) r.at(s1 - a2, a2) = s.at(a2, s1 - a2);
    return r;
  }
  std::string describe() const override { return "transpose"; }

 private:
  Fn2Ptr f_;
};

// Restrict a bivariate handle to a line through univariate handles:
// t -> f(u(t), v(t)).
class Fn1Curve final : public Fn1 {
 public:
  Fn1Curve(Fn2Ptr f, Fn1Ptr u, Fn1Ptr v)
      : f_(std::move(f)), u_(std::move(u)), v_(std::move(v)) {}
  Interval eval(const Interval& t, long prec) const override {
    return f_->eval(u_->eval(t, prec), v_->eval(t, prec), prec);
  }
  Series1 taylor(const Interval& t, int ord, long prec) const override {
    Series1 su = u_->taylor(t, ord, prec);
    Series1 sv = v_->taylor(t, ord, prec);
    Series2 sf = f_->taylor(su.c[0], sv.c[0], ord, prec);
    // compose: sum over (b1,b2) of c_{b1,b2} du^b1 dv^b2
    Series1 du = su, dv = sv;
    du.c[0] = Interval(Rat(0));
    dv.c[0] = Interval(Rat(0));
    std::vector<Series1> pu(ord + 1, Series1::constant(Interval(Rat(1)), ord));
    std::vector<Series1> pv(ord + 1, Series1::constant(Interval(Rat(1)), ord));
    for (int i = 1; i <= ord; ++i) {
      pu[i] = pu[i - 1] * du;
      pu[i].round(prec);
      pv[i] = pv[i - 1] * dv;
      pv[i].round(prec);
    }
    Series1 acc = Series1::zero(ord);
    for (int s = 0; s <= ord; ++s)
      for (int b2 = 0; b2 <= s; ++b2) {
        int b1 = s - b2;
        const Interval& c = sf.at(b1, b2);
        if (c.lo == 0 && c.hi == 0) continue;
        acc = acc + c * (pu[b1] * pv[b2]);
      }
    acc.round(prec);
    return acc;
  }
  std::string describe() const override { return "curve"; }

 private:
  Fn2Ptr f_;
  Fn1Ptr u_, v_;
};

// --- convenience builders ---------------------------------------------------

inline Fn1Ptr fn1_const(const Rat& v) { return std::make_shared<Fn1Const>(Interval(v)); }
inline Fn1Ptr fn1_const(const Interval& v) { return std::make_shared<Fn1Const>(v); }
inline Fn1Ptr fn1_id() { return std::make_shared<Fn1Identity>(); }
inline Fn1Ptr fn1_affine(const Rat& a, const Rat& b) {
  return std::make_shared<Fn1Affine>(a, b);
}
inline Fn1Ptr fn1_compose(Fn1Ptr outer, Fn1Ptr inner) {
  return std::make_shared<Fn1Compose>(std::move(outer), std::move(inner));
}
inline Fn1Ptr fn1_deriv(Fn1Ptr f, int q = 1) {
  return std::make_shared<Fn1Deriv>(std::move(f), q);
}

inline SparsePolynomial binop_poly(char op) {
  SparsePolynomial a = SparsePolynomial::var(0, 2), b = SparsePolynomial::var(1, 2);
  switch (op) {
    case '+': return a + b;
    case '-': return a - b;
    case '*': return a * b;
  }
  throw Error("binop_poly: bad op");
}

inline Fn1Ptr fn1_add(Fn1Ptr a, Fn1Ptr b) {
  return std::make_shared<Fn1Poly>(binop_poly('+'), std::vector<Fn1Ptr>{a, b});
}
inline Fn1Ptr fn1_sub(Fn1Ptr a, Fn1Ptr b) {
  return std::make_shared<Fn1Poly>(binop_poly('-'), std::vector<Fn1Ptr>{a, b});
}
inline Fn1Ptr fn1_mul(Fn1Ptr a, Fn1Ptr b) {
  return std::make_shared<Fn1Poly>(binop_poly('*'), std::vector<Fn1Ptr>{a, b});
}
inline Fn1Ptr fn1_scale(const Rat& c, Fn1Ptr a) {
  return std::make_shared<Fn1Poly>(
      SparsePolynomial::var(0, 1) * c, std::vector<Fn1Ptr>{a});
}
inline Fn1Ptr fn1_recip(Fn1Ptr a) { return std::make_shared<Fn1Recip>(std::move(a)); }

inline Fn2Ptr fn2_const(const Rat& v) { return std::make_shared<Fn2Const>(Interval(v)); }
inline Fn2Ptr fn2_x() { return std::make_shared<Fn2CoordX>(); }
inline Fn2Ptr fn2_y() { return std::make_shared<Fn2CoordY>(); }
inline Fn2Ptr fn2_add(Fn2Ptr a, Fn2Ptr b) {
  return std::make_shared<Fn2Poly>(binop_poly('+'), std::vector<Fn2Ptr>{a, b});
}
inline Fn2Ptr fn2_sub(Fn2Ptr a, Fn2Ptr b) {
  return std::make_shared<Fn2Poly>(binop_poly('-'), std::vector<Fn2Ptr>{a, b});
}
inline Fn2Ptr fn2_mul(Fn2Ptr a, Fn2Ptr b) {
  return std::make_shared<Fn2Poly>(binop_poly('*'), std::vector<Fn2Ptr>{a, b});
}
inline Fn2Ptr fn2_from_x(Fn1Ptr f) { return std::make_shared<Fn2FromX>(std::move(f)); }
inline Fn2Ptr fn2_from_y(Fn1Ptr f) { return std::make_shared<Fn2FromY>(std::move(f)); }
inline Fn2Ptr fn2_subst(Fn2Ptr f, Fn2Ptr u, Fn2Ptr v) {
  return std::make_shared<Fn2Subst>(std::move(f), std::move(u), std::move(v));
}
inline Fn2Ptr fn2_outer1(Fn1Ptr outer, Fn2Ptr inner) {
  return std::make_shared<Fn2ComposeOuter1>(std::move(outer), std::move(inner));
}
inline Fn2Ptr fn2_transpose(Fn2Ptr f) {
  return std::make_shared<Fn2Transpose>(std::move(f));
}
inline Fn2Ptr fn2_deriv(Fn2Ptr f, int a1, int a2) {
  return std::make_shared<Fn2Deriv>(std::move(f), a1, a2);
}

// First-order partial with a symbolic fast path for Pfaffian-backed handles
// (also pushed through argument transposition).
inline Fn2Ptr fn2_partial(const Fn2Ptr& f, int dir) {
  if (auto* p = dynamic_cast<const Fn2Pfaffian*>(f.get())) return p->partial(dir);
  if (auto* t = dynamic_cast<const Fn2Transpose*>(f.get()))
    return fn2_transpose(fn2_partial(t->inner(), 1 - dir));
  return fn2_deriv(f, dir == 0 ? 1 : 0, dir == 0 ? 0 : 1);
}
inline Fn1Ptr fn1_curve(Fn2Ptr f, Fn1Ptr u, Fn1Ptr v) {
  return std::make_shared<Fn1Curve>(std::move(f), std::move(u), std::move(v));
}

// theta and theta-inverse as evaluable handles.
inline Fn1Ptr fn1_theta() { return Fn1Pfaffian::direct(make_theta_fn()); }
inline Fn1Ptr fn1_theta_inv() { return Fn1Pfaffian::direct(make_theta_inv_fn()); }
inline Fn1Ptr fn1_exp(const Coeff& rate = Coeff(Rat(1))) {
  return Fn1Pfaffian::direct(make_exp_fn(rate));
}

// --- certified zero-free / sign machinery -----------------------------------

// Certified sign of f over [lo, hi] by adaptive bisection: +1 / -1 when the
// sign is constant and certified, 0 when f provably hits zero is NOT decided
// here; throws IsolationFailure when the budget is exhausted.
inline int certified_sign(const Fn1& f, const Interval& box, long prec,
                          long max_boxes = 4096) {
  std::vector<Interval> stack{box};
  int seen = 0;  // bit 1: positive part seen, bit 2: negative part seen
  long used = 0;
  while (!stack.empty()) {
    Interval cur = stack.back();
    stack.pop_back();
    if (++used > max_boxes)
      throw IsolationFailure("certified_sign: subdivision budget exhausted");
    Interval v = f.eval(cur, prec);
    if (v.lo > 0) {
      seen |= 1;
    } else if (v.hi < 0) {
      seen |= 2;
    } else {
      if (cur.width() < pow2(-prec))
        throw IsolationFailure("certified_sign: cannot separate from zero");
      Rat m = cur.mid();
      stack.push_back(Interval(cur.lo, m));
      stack.push_back(Interval(m, cur.hi));
    }
    if (seen == 3) throw IsolationFailure("certified_sign: sign change present");
  }
  return seen == 1 ? +1 : -1;
}

// Certified range enclosure by subdivision, optionally sharpened with the
// mean-value form f(mid) + f'(box) * (box - mid) on each leaf; always sound.
inline Interval certified_range(const Fn1& f, const Interval& box, long prec,
                                int depth = 6, bool mean_value = true) {
  if (box.is_point()) return f.eval(box, prec);
  if (depth == 0) {
    Interval naive = f.eval(box, prec);
    if (!mean_value) return naive;
    try {
      Series1 s = f.taylor(box, 1, prec);
      Rat m = box.mid();
      Interval mv = f.eval(Interval(m), prec) +
                    s.c[1] * Interval(box.lo - m, box.hi - m);
      return intersect(naive, mv);
    } catch (const Error&) {
      return naive;
    }
  }
  Rat m = box.mid();
  Interval a = certified_range(f, Interval(box.lo, m), prec, depth - 1, mean_value);
  Interval b = certified_range(f, Interval(m, box.hi), prec, depth - 1, mean_value);
  return hull(a, b);
}

inline Interval certified_range2(const Fn2& f, const Interval& X,
                                 const Interval& Y, long prec, int depth = 3) {
  if (depth == 0) return f.eval(X, Y, prec);
  Rat mx = X.mid(), my = Y.mid();
  Interval r = certified_range2(f, Interval(X.lo, mx), Interval(Y.lo, my), prec, depth - 1);
  r = hull(r, certified_range2(f, Interval(mx, X.hi), Interval(Y.lo, my), prec, depth - 1));
  r = hull(r, certified_range2(f, Interval(X.lo, mx), Interval(my, Y.hi), prec, depth - 1));
  r = hull(r, certified_range2(f, Interval(mx, X.hi), Interval(my, Y.hi), prec, depth - 1));
  return r;
}

}  // namespace pfc
