#pragma once

#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "pfaffcount/interval.hpp"
#include "pfaffcount/series.hpp"

namespace pfc {

// Coefficient ring: finite Q-linear combinations of monomials in named
// high-precision constants (ln2, ln3, ...). Constants are treated as formal
// indeterminates for zero-testing; evaluation goes through their certified
// enclosures.
struct Coeff {
  // constant-name^exponent monomial -> rational factor
  std::map<std::map<std::string, int>, Rat> terms;

  Coeff() = default;
  explicit Coeff(const Rat& q) {
    if (q != 0) terms[{}] = q;
  }
  static Coeff named(const std::string& name, const Rat& factor = Rat(1)) {
    Coeff c;
    if (factor != 0) c.terms[{{name, 1}}] = factor;
    return c;
  }

  bool is_zero() const { return terms.empty(); }
  bool is_rational() const {
    return terms.empty() || (terms.size() == 1 && terms.begin()->first.empty());
  }
  Rat rational_value() const {
    if (terms.empty()) return Rat(0);
    if (!is_rational()) throw Error("Coeff: not a pure rational");
    return terms.begin()->second;
  }

  void prune() {
    for (auto it = terms.begin(); it != terms.end();)
      it = (it->second == 0) ? terms.erase(it) : std::next(it);
  }

  Coeff& operator+=(const Coeff& o) {
    for (const auto& [m, q] : o.terms) terms[m] += q;
    prune();
    return *this;
  }
  Coeff operator+(const Coeff& o) const {
    Coeff r = *this;
    r += o;
    return r;
  }
  Coeff operator-() const {
    Coeff r = *this;
    for (auto& [m, q] : r.terms) q = -q;
    return r;
  }
  Coeff operator-(const Coeff& o) const { return *this + (-o); }
  Coeff operator*(const Coeff& o) const {
    Coeff r;
    for (const auto& [m1, q1] : terms)
      for (const auto& [m2, q2] : o.terms) {
        auto m = m1;
        for (const auto& [name, e] : m2) m[name] += e;
        r.terms[m] += q1 * q2;
      }
    r.prune();
    return r;
  }
  Coeff operator*(const Rat& q) const { return *this * Coeff(q); }

  bool operator==(const Coeff& o) const { return terms == o.terms; }

  Interval enclosure(long prec) const {
    Interval acc{Rat(0)};
    for (const auto& [m, q] : terms) {
      Interval t(q);
      for (const auto& [name, e] : m) {
        Interval c = Constants::get(name, prec + 8);
        for (int i = 0; i < e; ++i) t = t * c;
      }
      acc = acc + t;
    }
    return round_out(acc, prec);
  }

  std::string str() const {
    if (terms.empty()) return "0";
    std::ostringstream os;
    bool first = true;
    for (const auto& [m, q] : terms) {
      if (!first) os << " + ";
      first = false;
      os << rat_str(q);
      for (const auto& [name, e] : m) {
        os << "*" << name;
        if (e != 1) os << "^" << e;
      }
    }
    return os.str();
  }
};

using Monomial = std::vector<unsigned>;  // exponent per variable

inline unsigned total_degree(const Monomial& m) {
  unsigned s = 0;
  for (unsigned e : m) s += e;
  return s;
}

// Sparse polynomial over Coeff in a fixed number of variables. Keys are
// exponent multi-indices (always of length nvars); duplicate keys cannot
// occur by construction, and zero coefficients are pruned on normalize().
struct SparsePolynomial {
  int nvars = 0;
  std::map<Monomial, Coeff> terms;

  SparsePolynomial() = default;
  explicit SparsePolynomial(int nv) : nvars(nv) {}

  static SparsePolynomial constant(const Coeff& c, int nv) {
    SparsePolynomial p(nv);
    if (!c.is_zero()) p.terms[Monomial(nv, 0)] = c;
    return p;
  }
  static SparsePolynomial constant(const Rat& q, int nv) {
    return constant(Coeff(q), nv);
  }
  static SparsePolynomial var(int i, int nv) {
    SparsePolynomial p(nv);
    Monomial m(nv, 0);
    m[i] = 1;
    p.terms[m] = Coeff(Rat(1));
    return p;
  }

  bool is_zero() const { return terms.empty(); }

  void normalize() {
    for (auto it = terms.begin(); it != terms.end();)
      it = it->second.is_zero() ? terms.erase(it) : std::next(it);
  }

  unsigned degree() const {
    unsigned d = 0;
    for (const auto& [m, c] : terms)
      if (!c.is_zero()) d = std::max(d, total_degree(m));
    return d;
  }

  // Highest variable index actually mentioned, or -1.
  int max_var() const {
    int mv = -1;
    for (const auto& [m, c] : terms)
      for (int i = 0; i < nvars; ++i)
        if (m[i] > 0) mv = std::max(mv, i);
    return mv;
  }

  SparsePolynomial& operator+=(const SparsePolynomial& o) {
    for (const auto& [m, c] : o.terms) {
      auto it = terms.find(m);
      if (it == terms.end())
        terms[m] = c;
      else
        it->second += c;
    }
    normalize();
    return *this;
  }
  SparsePolynomial operator+(const SparsePolynomial& o) const {
    SparsePolynomial r = *this;
    r += o;
    return r;
  }
  SparsePolynomial operator-() const {
    SparsePolynomial r = *this;
    for (auto& [m, c] : r.terms) c = -c;
    return r;
  }
  SparsePolynomial operator-(const SparsePolynomial& o) const {
    return *this + (-o);
  }
  SparsePolynomial operator*(const SparsePolynomial& o) const {
    SparsePolynomial r(nvars);
    for (const auto& [m1, c1] : terms)
      for (const auto& [m2, c2] : o.terms) {
        Monomial m(nvars);
        for (int i = 0; i < nvars; ++i) m[i] = m1[i] + m2[i];
        r.terms[m] += c1 * c2;
      }
    r.normalize();
    return r;
  }
  SparsePolynomial operator*(const Coeff& c) const {
    SparsePolynomial r = *this;
    for (auto& [m, cc] : r.terms) cc = cc * c;
    r.normalize();
    return r;
  }
  SparsePolynomial operator*(const Rat& q) const { return *this * Coeff(q); }

  bool operator==(const SparsePolynomial& o) const {
    return nvars == o.nvars && terms == o.terms;
  }

  SparsePolynomial derivative(int var) const {
    SparsePolynomial r(nvars);
    for (const auto& [m, c] : terms) {
      if (m[var] == 0) continue;
      Monomial mm = m;
      mm[var] -= 1;
      r.terms[mm] += c * Rat(static_cast<long>(m[var]));
    }
    r.normalize();
    return r;
  }

  // Re-embed into a polynomial ring with nv_new >= nvars variables, mapping
  // variable i to variable map[i].
  SparsePolynomial remap(int nv_new, const std::vector<int>& map) const {
    SparsePolynomial r(nv_new);
    for (const auto& [m, c] : terms) {
      Monomial mm(nv_new, 0);
      for (int i = 0; i < nvars; ++i) {
        if (m[i] == 0) continue;
        mm[map[i]] += m[i];
      }
      r.terms[mm] += c;
    }
    r.normalize();
    return r;
  }

  // Substitute polynomial args[i] (all in a common target ring) for
  // variable i.
  SparsePolynomial substitute(const std::vector<SparsePolynomial>& args) const {
    if (static_cast<int>(args.size()) != nvars)
      throw Error("substitute: arity mismatch");
    int nv = args.empty() ? 0 : args[0].nvars;
    SparsePolynomial acc(nv);
    for (const auto& [m, c] : terms) {
      SparsePolynomial t = SparsePolynomial::constant(c, nv);
      for (int i = 0; i < nvars; ++i)
        for (unsigned e = 0; e < m[i]; ++e) t = t * args[i];
      acc += t;
    }
    return acc;
  }

  template <typename V>
  V eval_generic(const std::vector<V>& args, const V& one, long prec) const;

  Interval eval(const std::vector<Interval>& args, long prec) const {
    Interval acc{Rat(0)};
    for (const auto& [m, c] : terms) {
      Interval t = c.enclosure(prec + 8);
      for (int i = 0; i < nvars; ++i)
        if (m[i] > 0) t = t * pow_i(args[i], m[i]);
      acc = acc + t;
    }
    return round_out(acc, prec);
  }

  Series1 eval_series1(const std::vector<Series1>& args, long prec) const {
    int ord = args.empty() ? 0 : args[0].order();
    Series1 acc = Series1::zero(ord);
    for (const auto& [m, c] : terms) {
      Series1 t = Series1::constant(c.enclosure(prec + 8), ord);
      for (int i = 0; i < nvars; ++i)
        if (m[i] > 0) {
          t = t * s_pow(args[i], m[i], prec);
          t.round(prec);
        }
      acc = acc + t;
    }
    acc.round(prec);
    return acc;
  }

  Series2 eval_series2(const std::vector<Series2>& args, long prec) const {
    int ord = args.empty() ? 0 : args[0].ord;
    Series2 acc = Series2::zero(ord);
    for (const auto& [m, c] : terms) {
      Series2 t = Series2::constant(c.enclosure(prec + 8), ord);
      for (int i = 0; i < nvars; ++i)
        if (m[i] > 0) {
          t = t * s2_pow(args[i], m[i], prec);
          t.round(prec);
        }
      acc = acc + t;
    }
    acc.round(prec);
    return acc;
  }

  std::string str(const std::vector<std::string>& names) const {
    if (terms.empty()) return "0";
    std::ostringstream os;
    bool first = true;
    for (const auto& [m, c] : terms) {
      if (!first) os << " + ";
      first = false;
      bool rational = c.is_rational();
      os << (rational ? rat_str(c.rational_value()) : "(" + c.str() + ")");
      for (int i = 0; i < nvars; ++i) {
        if (m[i] == 0) continue;
        os << "*" << names[i];
        if (m[i] > 1) os << "^" << m[i];
      }
    }
    return os.str();
  }
};

// --- polynomial text parsing ------------------------------------------------
//
// Grammar: sum of signed products; factors are rational literals, named
// constants, or variables with optional ^exponent; '*' optional between
// factors; whitespace insensitive.
class PolynomialParser {
 public:
  PolynomialParser(const std::string& text, const std::vector<std::string>& vars)
      : s_(text), vars_(vars) {}

  SparsePolynomial parse() {
    SparsePolynomial p = parse_sum();
    skip_ws();
    if (pos_ != s_.size())
      throw ParseError("trailing input in polynomial at column " +
                       std::to_string(pos_ + 1));
    return p;
  }

 private:
  std::string s_;
  std::vector<std::string> vars_;
  size_t pos_ = 0;

  void skip_ws() {
    while (pos_ < s_.size() && isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }
  bool eat(char c) {
    skip_ws();
    if (pos_ < s_.size() && s_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }
  char peek() {
    skip_ws();
    return pos_ < s_.size() ? s_[pos_] : '\0';
  }

  SparsePolynomial parse_sum() {
    skip_ws();
    bool neg = false;
    if (eat('-')) neg = true;
    else eat('+');
    SparsePolynomial acc = parse_product();
    if (neg) acc = -acc;
    while (true) {
      char c = peek();
      if (c == '+' || c == '-') {
        ++pos_;
        bool tneg = (c == '-');
        // tolerate an explicit sign on the following product
        while (true) {
          char d = peek();
          if (d == '-') {
            ++pos_;
            tneg = !tneg;
          } else if (d == '+') {
            ++pos_;
          } else {
            break;
          }
        }
        SparsePolynomial t = parse_product();
        acc = tneg ? acc - t : acc + t;
      } else {
        break;
      }
    }
    return acc;
  }

  SparsePolynomial parse_product() {
    SparsePolynomial acc = parse_factor();
    while (true) {
      char c = peek();
      if (c == '*') {
        ++pos_;
        acc = acc * parse_factor();
      } else if (c == '(' || isalnum(static_cast<unsigned char>(c)) || c == '_') {
        acc = acc * parse_factor();  // juxtaposition
      } else {
        break;
      }
    }
    return acc;
  }

  SparsePolynomial parse_factor() {
    skip_ws();
    if (pos_ >= s_.size()) throw ParseError("unexpected end of polynomial");
    SparsePolynomial base(static_cast<int>(vars_.size()));
    char c = s_[pos_];
    if (c == '(') {
      ++pos_;
      base = parse_sum();
      if (!eat(')')) throw ParseError("missing ')' in polynomial");
    } else if (isdigit(static_cast<unsigned char>(c))) {
      base = SparsePolynomial::constant(parse_number(), static_cast<int>(vars_.size()));
    } else if (isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::string name = parse_ident();
      int vi = -1;
      for (size_t i = 0; i < vars_.size(); ++i)
        if (vars_[i] == name) vi = static_cast<int>(i);
      if (vi >= 0) {
        base = SparsePolynomial::var(vi, static_cast<int>(vars_.size()));
      } else if (Constants::known(name)) {
        base = SparsePolynomial::constant(Coeff::named(name),
                                          static_cast<int>(vars_.size()));
      } else {
        throw ParseError("unknown identifier '" + name + "' in polynomial");
      }
    } else {
      throw ParseError(std::string("unexpected character '") + c +
                       "' in polynomial at column " + std::to_string(pos_ + 1));
    }
    if (eat('^')) {
      skip_ws();
      size_t start = pos_;
      while (pos_ < s_.size() && isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_;
      if (start == pos_) throw ParseError("missing exponent after '^'");
      unsigned long e = std::stoul(s_.substr(start, pos_ - start));
      SparsePolynomial acc =
          SparsePolynomial::constant(Rat(1), static_cast<int>(vars_.size()));
      for (unsigned long i = 0; i < e; ++i) acc = acc * base;
      base = acc;
    }
    return base;
  }

  Rat parse_number() {
    size_t start = pos_;
    while (pos_ < s_.size() && isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    Int num(s_.substr(start, pos_ - start));
    if (pos_ < s_.size() && s_[pos_] == '.') {
      ++pos_;
      size_t fstart = pos_;
      while (pos_ < s_.size() && isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_;
      return parse_decimal(s_.substr(start, pos_ - start));
    }
    if (pos_ < s_.size() && s_[pos_] == '/') {
      size_t save = pos_;
      ++pos_;
      skip_ws();
      size_t dstart = pos_;
      while (pos_ < s_.size() && isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_;
      if (dstart == pos_) {
        pos_ = save;  // not a fraction; '/' belongs to caller (unsupported)
        throw ParseError("missing denominator after '/'");
      }
      Int den(s_.substr(dstart, pos_ - dstart));
      if (den == 0) throw ParseError("zero denominator in rational literal");
      return rat(num, den);
    }
    return Rat(num);
  }

  std::string parse_ident() {
    size_t start = pos_;
    while (pos_ < s_.size() &&
           (isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_'))
      ++pos_;
    return s_.substr(start, pos_ - start);
  }
};

inline SparsePolynomial parse_polynomial(const std::string& text,
                                         const std::vector<std::string>& vars) {
  return PolynomialParser(text, vars).parse();
}

}  // namespace pfc
