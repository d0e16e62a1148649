#pragma once

#include <cctype>
#include <cmath>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "routhlab/errors.hpp"
#include "routhlab/jet.hpp"

namespace routhlab {

/// Arithmetic expression over chart coordinates x1..xn and velocities v1..vn.
///
/// Grammar (whitespace-insensitive):
///
///     expr    := term (('+' | '-') term)*
///     term    := unary (('*' | '/') unary)*
///     unary   := ('+' | '-') unary | power
///     power   := primary ('^' unary)?          right associative, binds tighter than unary minus
///     primary := number | 'pi' | var | func '(' expr ')' | '(' expr ')'
///     var     := 'x' digits | 'v' digits
///     func    := 'sqrt' | 'sin' | 'cos' | 'exp' | 'log'
///
/// Parsed once into a constant-folded postfix program that evaluates on doubles and on jets.
class Expression {
 public:
  enum class Op { Const, X, V, Add, Sub, Mul, Div, Pow, PowConst, Neg, Sqrt, Sin, Cos, Exp, Log };

  struct Instr {
    Op op;
    double c = 0.0;
    int index = 0;
  };

  Expression() = default;

  /// Parses `text`; variables beyond `dim` raise ArityError. dim == 0 accepts any index.
  static Expression parse(std::string_view text, int dim = 0);

  const std::string& text() const { return text_; }
  int max_x_index() const { return max_x_; }
  int max_v_index() const { return max_v_; }
  bool uses_velocity() const { return max_v_ > 0; }
  bool empty() const { return program_.empty(); }

  template <class T>
  T eval(std::span<const T> x, std::span<const T> v) const;

  double eval(std::span<const double> x, std::span<const double> v = {}) const {
    return eval<double>(x, v);
  }

 private:
  struct Node;
  class Parser;

  std::string text_;
  std::vector<Instr> program_;
  int max_x_ = 0;
  int max_v_ = 0;
};

struct Expression::Node {
  Op op = Op::Const;
  double c = 0.0;
  int index = 0;
  std::unique_ptr<Node> lhs;
  std::unique_ptr<Node> rhs;

  bool is_const() const { return op == Op::Const; }
};

class Expression::Parser {
 public:
  Parser(std::string_view text, int dim) : s_(text), dim_(dim) {}

  std::unique_ptr<Node> run() {
    skip_ws();
    if (pos_ >= s_.size()) fail("empty expression");
    auto e = expr();
    skip_ws();
    if (pos_ < s_.size()) fail(std::string("unexpected '") + s_[pos_] + "'");
    return e;
  }

  int max_x = 0;
  int max_v = 0;

 private:
  [[noreturn]] void fail(const std::string& what) const { fail_at(what, pos_); }

  [[noreturn]] void fail_at(const std::string& what, std::size_t at) const {
    int line = 1;
    int col = 1;
    for (std::size_t i = 0; i < at && i < s_.size(); ++i) {
      if (s_[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    throw ParseError(what, line, col);
  }

  void skip_ws() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }

  bool accept(char c) {
    skip_ws();
    if (pos_ < s_.size() && s_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  static std::unique_ptr<Node> leaf(Op op, double c = 0.0, int index = 0) {
    auto n = std::make_unique<Node>();
    n->op = op;
    n->c = c;
    n->index = index;
    return n;
  }

  static std::unique_ptr<Node> make(Op op, std::unique_ptr<Node> a, std::unique_ptr<Node> b = {}) {
    if (a->is_const() && (!b || b->is_const())) {
      const double x = a->c;
      const double y = b ? b->c : 0.0;
      double r = 0.0;
      switch (op) {
        case Op::Add: r = x + y; break;
        case Op::Sub: r = x - y; break;
        case Op::Mul: r = x * y; break;
        case Op::Div: r = x / y; break;
        case Op::Pow: r = std::pow(x, y); break;
        case Op::Neg: r = -x; break;
        case Op::Sqrt: r = std::sqrt(x); break;
        case Op::Sin: r = std::sin(x); break;
        case Op::Cos: r = std::cos(x); break;
        case Op::Exp: r = std::exp(x); break;
        case Op::Log: r = std::log(x); break;
        default: break;
      }
      if (std::isfinite(r)) return leaf(Op::Const, r);
    }
    if (op == Op::Pow && b->is_const()) {
      auto n = std::make_unique<Node>();
      n->op = Op::PowConst;
      n->c = b->c;
      n->lhs = std::move(a);
      return n;
    }
    auto n = std::make_unique<Node>();
    n->op = op;
    n->lhs = std::move(a);
    n->rhs = std::move(b);
    return n;
  }

  std::unique_ptr<Node> expr() {
    auto lhs = term();
    for (;;) {
      if (accept('+')) {
        lhs = make(Op::Add, std::move(lhs), term());
      } else if (accept('-')) {
        lhs = make(Op::Sub, std::move(lhs), term());
      } else {
        return lhs;
      }
    }
  }

  std::unique_ptr<Node> term() {
    auto lhs = unary();
    for (;;) {
      if (accept('*')) {
        lhs = make(Op::Mul, std::move(lhs), unary());
      } else if (accept('/')) {
        lhs = make(Op::Div, std::move(lhs), unary());
      } else {
        return lhs;
      }
    }
  }

  std::unique_ptr<Node> unary() {
    if (accept('-')) return make(Op::Neg, unary());
    if (accept('+')) return unary();
    return power();
  }

  std::unique_ptr<Node> power() {
    auto base = primary();
    if (accept('^')) return make(Op::Pow, std::move(base), unary());
    return base;
  }

  std::unique_ptr<Node> primary() {
    skip_ws();
    if (pos_ >= s_.size()) fail("unexpected end of expression");
    const char c = s_[pos_];
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
    if (std::isalpha(static_cast<unsigned char>(c))) return identifier();
    if (accept('(')) {
      auto e = expr();
      if (!accept(')')) fail("expected ')'");
      return e;
    }
    fail(std::string("unexpected '") + c + "'");
  }

  std::unique_ptr<Node> number() {
    const std::size_t start = pos_;
    while (pos_ < s_.size() &&
           (std::isdigit(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '.'))
      ++pos_;
    if (pos_ < s_.size() && (s_[pos_] == 'e' || s_[pos_] == 'E')) {
      std::size_t p = pos_ + 1;
      if (p < s_.size() && (s_[p] == '+' || s_[p] == '-')) ++p;
      if (p < s_.size() && std::isdigit(static_cast<unsigned char>(s_[p]))) {
        pos_ = p;
        while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_;
      }
    }
    const std::string tok(s_.substr(start, pos_ - start));
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(tok, &used);
    } catch (const std::exception&) {
      fail_at("malformed number '" + tok + "'", start);
    }
    if (used != tok.size()) fail_at("malformed number '" + tok + "'", start);
    return leaf(Op::Const, v);
  }

  std::unique_ptr<Node> identifier() {
    const std::size_t start = pos_;
    while (pos_ < s_.size() && std::isalnum(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    const std::string id(s_.substr(start, pos_ - start));
    if (id == "pi") return leaf(Op::Const, 3.14159265358979323846);
    if ((id[0] == 'x' || id[0] == 'v') && id.size() > 1) {
      bool digits = true;
      for (std::size_t i = 1; i < id.size(); ++i)
        digits = digits && std::isdigit(static_cast<unsigned char>(id[i]));
      if (digits) {
        const int k = std::stoi(id.substr(1));
        if (k < 1) fail_at("variable indices start at 1: '" + id + "'", start);
        if (dim_ > 0 && k > dim_)
          throw ArityError("variable '" + id + "' exceeds declared dimension " +
                           std::to_string(dim_));
        if (id[0] == 'x') {
          max_x = std::max(max_x, k);
          return leaf(Op::X, 0.0, k - 1);
        }
        max_v = std::max(max_v, k);
        return leaf(Op::V, 0.0, k - 1);
      }
    }
    Op op;
    if (id == "sqrt") {
      op = Op::Sqrt;
    } else if (id == "sin") {
      op = Op::Sin;
    } else if (id == "cos") {
      op = Op::Cos;
    } else if (id == "exp") {
      op = Op::Exp;
    } else if (id == "log") {
      op = Op::Log;
    } else {
      fail_at("unknown identifier '" + id + "'", start);
    }
    if (!accept('(')) fail("expected '(' after " + id);
    auto arg = expr();
    if (!accept(')')) fail("expected ')'");
    return make(op, std::move(arg));
  }

  std::string_view s_;
  std::size_t pos_ = 0;
  int dim_;
};

inline Expression Expression::parse(std::string_view text, int dim) {
  Parser p(text, dim);
  auto root = p.run();
  Expression e;
  e.text_ = std::string(text);
  e.max_x_ = p.max_x;
  e.max_v_ = p.max_v;
  // Post-order flattening.
  auto emit = [&e](auto&& self, const Node& n) -> void {
    if (n.lhs) self(self, *n.lhs);
    if (n.rhs) self(self, *n.rhs);
    e.program_.push_back({n.op, n.c, n.index});
  };
  emit(emit, *root);
  return e;
}

template <class T>
T Expression::eval(std::span<const T> x, std::span<const T> v) const {
  using std::cos;
  using std::exp;
  using std::log;
  using std::pow;
  using std::sin;
  using std::sqrt;
  std::vector<T> st;
  st.reserve(16);
  auto pop = [&st]() {
    T t = std::move(st.back());
    st.pop_back();
    return t;
  };
  for (const Instr& in : program_) {
    switch (in.op) {
      case Op::Const: st.emplace_back(in.c); break;
      case Op::X:
        if (in.index >= static_cast<int>(x.size())) throw ArityError("missing coordinate x");
        st.push_back(x[in.index]);
        break;
      case Op::V:
        if (in.index >= static_cast<int>(v.size())) throw ArityError("missing velocity v");
        st.push_back(v[in.index]);
        break;
      case Op::Neg: st.back() = -st.back(); break;
      case Op::Sqrt:
        if (value_of(st.back()) < 0.0) throw DomainError("sqrt of a negative number");
        st.back() = sqrt(st.back());
        break;
      case Op::Sin: st.back() = sin(st.back()); break;
      case Op::Cos: st.back() = cos(st.back()); break;
      case Op::Exp: st.back() = exp(st.back()); break;
      case Op::Log:
        if (value_of(st.back()) <= 0.0) throw DomainError("log of a non-positive number");
        st.back() = log(st.back());
        break;
      case Op::PowConst: {
        const double base = value_of(st.back());
        if (base < 0.0 && in.c != std::floor(in.c))
          throw DomainError("fractional power of a negative number");
        if (base == 0.0 && in.c < 0.0) throw DomainError("negative power of zero");
        st.back() = pow(st.back(), in.c);
        break;
      }
      default: {
        T b = pop();
        T& a = st.back();
        switch (in.op) {
          case Op::Add: a = a + b; break;
          case Op::Sub: a = a - b; break;
          case Op::Mul: a = a * b; break;
          case Op::Div:
            if (value_of(b) == 0.0) throw DomainError("division by zero");
            a = a / b;
            break;
          case Op::Pow:
            if (!(value_of(a) > 0.0)) throw DomainError("variable power of a non-positive base");
            a = pow(a, b);
            break;
          default: break;
        }
      }
    }
  }
  return st.back();
}

}  // namespace routhlab
