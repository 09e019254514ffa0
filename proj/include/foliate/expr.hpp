#pragma once

/// \file expr.hpp
/// Scalar expressions in chart coordinates.
///
/// Grammar (whitespace insignificant):
///
///     expr    := term { ("+" | "-") term }
///     term    := unary { ("*" | "/") unary }
///     unary   := "-" unary | power
///     power   := primary [ "^" unary ]
///     primary := number | "x" digits | "pi" | "e"
///              | func "(" expr ")" | "(" expr ")"
///     func    := sin | cos | tan | exp | log | sqrt | cosh | sinh | tanh
///
/// `^` binds tighter than unary minus and associates to the right, so
/// `-x0^2` is `-(x0^2)` and `2^3^2` is `2^(3^2)`. Integer literal exponents
/// are evaluated by repeated multiplication; any other exponent requires a
/// positive base.

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <memory>
#include <numbers>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "foliate/errors.hpp"
#include "foliate/jet.hpp"

namespace foliate {

enum class Op { Number, Coord, Add, Sub, Mul, Div, Pow, Neg, Call };
enum class Func { Sin, Cos, Tan, Exp, Log, Sqrt, Cosh, Sinh, Tanh };

inline const char* func_name(Func f) {
  switch (f) {
    case Func::Sin: return "sin";
    case Func::Cos: return "cos";
    case Func::Tan: return "tan";
    case Func::Exp: return "exp";
    case Func::Log: return "log";
    case Func::Sqrt: return "sqrt";
    case Func::Cosh: return "cosh";
    case Func::Sinh: return "sinh";
    case Func::Tanh: return "tanh";
  }
  return "?";
}

struct ExprNode;
using NodePtr = std::shared_ptr<const ExprNode>;

struct ExprNode {
  Op op = Op::Number;
  double value = 0.0;      // Number
  int index = 0;           // Coord
  Func func = Func::Sin;   // Call
  bool int_exponent = false;  // Pow with integer literal exponent
  int exponent = 0;
  NodePtr lhs, rhs;        // Neg/Call use lhs only
};

/// Immutable parsed expression over a chart of dimension `dim()`.
class Expr {
 public:
  Expr() = default;
  Expr(NodePtr root, int dim) : root_(std::move(root)), dim_(dim) {}

  /// Constant expression.
  static Expr constant(double c, int dim) {
    auto n = std::make_shared<ExprNode>();
    n->op = Op::Number;
    n->value = c;
    return Expr(n, dim);
  }

  int dim() const noexcept { return dim_; }
  const NodePtr& root() const noexcept { return root_; }
  bool valid() const noexcept { return root_ != nullptr; }

  /// Evaluates at point `x` over any scalar type providing arithmetic and
  /// the elementary functions (double, Dual, Jet2).
  template <typename S>
  S eval(std::span<const S> x) const;

  /// Value, gradient and Hessian at `p`.
  Jet2 eval_jet(std::span<const double> p) const;

  double eval_value(std::span<const double> p) const { return eval<double>(p); }

  /// Fully parenthesized text; parse(print()) reproduces the same tree.
  std::string print() const;

 private:
  NodePtr root_;
  int dim_ = 0;
};

inline std::string print_node(const ExprNode& n);

inline bool structurally_equal(const ExprNode* a, const ExprNode* b) {
  if (a == b) return true;
  if (!a || !b) return false;
  if (a->op != b->op) return false;
  switch (a->op) {
    case Op::Number: return a->value == b->value;
    case Op::Coord: return a->index == b->index;
    case Op::Call:
      return a->func == b->func && structurally_equal(a->lhs.get(), b->lhs.get());
    case Op::Neg: return structurally_equal(a->lhs.get(), b->lhs.get());
    case Op::Pow:
      if (a->int_exponent != b->int_exponent || a->exponent != b->exponent) return false;
      [[fallthrough]];
    default:
      return structurally_equal(a->lhs.get(), b->lhs.get()) &&
             structurally_equal(a->rhs.get(), b->rhs.get());
  }
}

inline bool structurally_equal(const Expr& a, const Expr& b) {
  return a.dim() == b.dim() && structurally_equal(a.root().get(), b.root().get());
}

// --------------------------------------------------------------------------
// Parser
// --------------------------------------------------------------------------

namespace detail {

class Parser {
 public:
  Parser(std::string_view src, int dim) : src_(src), dim_(dim) {}

  NodePtr parse_all() {
    skip_ws();
    if (pos_ >= src_.size()) throw ParseError("empty expression", pos_);
    NodePtr e = parse_expr();
    skip_ws();
    if (pos_ < src_.size()) throw ParseError(std::string("unexpected '") + src_[pos_] + "'", pos_);
    return e;
  }

 private:
  std::string_view src_;
  int dim_;
  std::size_t pos_ = 0;

  void skip_ws() {
    while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) ++pos_;
  }
  bool accept(char c) {
    skip_ws();
    if (pos_ < src_.size() && src_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  static NodePtr binary(Op op, NodePtr l, NodePtr r) {
    auto n = std::make_shared<ExprNode>();
    n->op = op;
    n->lhs = std::move(l);
    n->rhs = std::move(r);
    return n;
  }

  NodePtr parse_expr() {
    NodePtr lhs = parse_term();
    for (;;) {
      if (accept('+')) {
        lhs = binary(Op::Add, lhs, parse_term());
      } else if (accept('-')) {
        lhs = binary(Op::Sub, lhs, parse_term());
      } else {
        return lhs;
      }
    }
  }

  NodePtr parse_term() {
    NodePtr lhs = parse_unary();
    for (;;) {
      if (accept('*')) {
        lhs = binary(Op::Mul, lhs, parse_unary());
      } else if (accept('/')) {
        lhs = binary(Op::Div, lhs, parse_unary());
      } else {
        return lhs;
      }
    }
  }

  NodePtr parse_unary() {
    if (accept('-')) {
      auto n = std::make_shared<ExprNode>();
      n->op = Op::Neg;
      n->lhs = parse_unary();
      return n;
    }
    return parse_power();
  }

  static bool integer_literal(const ExprNode& n, int& out) {
    const ExprNode* p = &n;
    int sign = 1;
    if (p->op == Op::Neg && p->lhs && p->lhs->op == Op::Number) {
      sign = -1;
      p = p->lhs.get();
    }
    if (p->op != Op::Number) return false;
    double v = p->value;
    if (v != std::floor(v) || std::fabs(v) > 1024.0) return false;
    out = sign * static_cast<int>(v);
    return true;
  }

  NodePtr parse_power() {
    NodePtr base = parse_primary();
    if (accept('^')) {
      NodePtr ex = parse_unary();
      auto n = std::make_shared<ExprNode>();
      n->op = Op::Pow;
      n->lhs = base;
      int k = 0;
      if (integer_literal(*ex, k)) {
        n->int_exponent = true;
        n->exponent = k;
      }
      n->rhs = ex;
      return n;
    }
    return base;
  }

  NodePtr parse_primary() {
    skip_ws();
    if (pos_ >= src_.size()) throw ParseError("unexpected end of expression", pos_);
    char c = src_[pos_];
    if (c == '(') {
      ++pos_;
      NodePtr e = parse_expr();
      if (!accept(')')) throw ParseError("expected ')'", pos_);
      return e;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return parse_number();
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return parse_identifier();
    throw ParseError(std::string("unexpected '") + c + "'", pos_);
  }

  NodePtr parse_number() {
    std::size_t start = pos_;
    auto digits = [&] {
      std::size_t s = pos_;
      while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) ++pos_;
      return pos_ - s;
    };
    std::size_t n_int = digits();
    std::size_t n_frac = 0;
    if (pos_ < src_.size() && src_[pos_] == '.') {
      ++pos_;
      n_frac = digits();
    }
    if (n_int + n_frac == 0) throw ParseError("malformed number", start);
    if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
      std::size_t save = pos_;
      ++pos_;
      if (pos_ < src_.size() && (src_[pos_] == '+' || src_[pos_] == '-')) ++pos_;
      if (digits() == 0) pos_ = save;  // 'e' is not part of this literal
    }
    double v = 0.0;
    auto text = src_.substr(start, pos_ - start);
    auto res = std::from_chars(text.data(), text.data() + text.size(), v);
    if (res.ec != std::errc() || res.ptr != text.data() + text.size())
      throw ParseError("malformed number", start);
    auto n = std::make_shared<ExprNode>();
    n->op = Op::Number;
    n->value = v;
    return n;
  }

  NodePtr parse_identifier() {
    std::size_t start = pos_;
    while (pos_ < src_.size() &&
           (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_'))
      ++pos_;
    std::string_view id = src_.substr(start, pos_ - start);

    if (id.size() >= 2 && id[0] == 'x' &&
        id.find_first_not_of("0123456789", 1) == std::string_view::npos) {
      int idx = 0;
      auto res = std::from_chars(id.data() + 1, id.data() + id.size(), idx);
      if (res.ec != std::errc() || idx >= dim_)
        throw ParseError("coordinate index out of range '" + std::string(id) + "' (dim " +
                             std::to_string(dim_) + ")",
                         start);
      auto n = std::make_shared<ExprNode>();
      n->op = Op::Coord;
      n->index = idx;
      return n;
    }
    if (id == "pi" || id == "e") {
      auto n = std::make_shared<ExprNode>();
      n->op = Op::Number;
      n->value = id == "pi" ? std::numbers::pi : std::numbers::e;
      return n;
    }
    static constexpr Func kFuncs[] = {Func::Sin,  Func::Cos,  Func::Tan,  Func::Exp, Func::Log,
                                      Func::Sqrt, Func::Cosh, Func::Sinh, Func::Tanh};
    for (Func f : kFuncs) {
      if (id == func_name(f)) {
        if (!accept('(')) throw ParseError("expected '(' after " + std::string(id), pos_);
        auto n = std::make_shared<ExprNode>();
        n->op = Op::Call;
        n->func = f;
        n->lhs = parse_expr();
        if (!accept(')')) throw ParseError("expected ')'", pos_);
        return n;
      }
    }
    throw ParseError("unknown identifier '" + std::string(id) + "'", start);
  }
};

inline std::string format_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  std::string s(buf);
  return s;
}

template <typename S>
S eval_node(const ExprNode& n, std::span<const S> x) {
  using std::sin, std::cos, std::tan, std::exp, std::log, std::sqrt, std::sinh, std::cosh,
      std::tanh;
  switch (n.op) {
    case Op::Number: return S(n.value);
    case Op::Coord: return x[static_cast<std::size_t>(n.index)];
    case Op::Add: return eval_node(*n.lhs, x) + eval_node(*n.rhs, x);
    case Op::Sub: return eval_node(*n.lhs, x) - eval_node(*n.rhs, x);
    case Op::Mul: return eval_node(*n.lhs, x) * eval_node(*n.rhs, x);
    case Op::Div: {
      S den = eval_node(*n.rhs, x);
      if (primal(den) == 0.0) throw DomainError("division by zero", print_node(n));
      return eval_node(*n.lhs, x) / den;
    }
    case Op::Neg: return -eval_node(*n.lhs, x);
    case Op::Pow: {
      S base = eval_node(*n.lhs, x);
      if (n.int_exponent) {
        if (n.exponent < 0 && primal(base) == 0.0)
          throw DomainError("zero base with negative exponent", print_node(n));
        return ipow(base, n.exponent);
      }
      if (!(primal(base) > 0.0))
        throw DomainError("non-integer power of nonpositive base", print_node(n));
      return exp(eval_node(*n.rhs, x) * log(base));
    }
    case Op::Call: {
      S a = eval_node(*n.lhs, x);
      switch (n.func) {
        case Func::Sin: return sin(a);
        case Func::Cos: return cos(a);
        case Func::Tan: return tan(a);
        case Func::Exp: return exp(a);
        case Func::Log:
          if (!(primal(a) > 0.0)) throw DomainError("log of nonpositive value", print_node(n));
          return log(a);
        case Func::Sqrt:
          if (primal(a) < 0.0) throw DomainError("sqrt of negative value", print_node(n));
          if constexpr (!std::is_same_v<S, double>) {
            if (primal(a) == 0.0) throw DomainError("sqrt not differentiable at 0", print_node(n));
          }
          return sqrt(a);
        case Func::Cosh: return cosh(a);
        case Func::Sinh: return sinh(a);
        case Func::Tanh: return tanh(a);
      }
    }
  }
  return S(0.0);
}

}  // namespace detail

/// Parses `source` as an expression over coordinates x0..x{dim-1}.
inline Expr parse(std::string_view source, int dim) {
  if (dim <= 0) throw InputError("chart dimension must be positive");
  detail::Parser p(source, dim);
  return Expr(p.parse_all(), dim);
}

inline std::string print_node(const ExprNode& n) {
  switch (n.op) {
    case Op::Number: return detail::format_number(n.value);
    case Op::Coord: return "x" + std::to_string(n.index);
    case Op::Add: return "(" + print_node(*n.lhs) + " + " + print_node(*n.rhs) + ")";
    case Op::Sub: return "(" + print_node(*n.lhs) + " - " + print_node(*n.rhs) + ")";
    case Op::Mul: return "(" + print_node(*n.lhs) + " * " + print_node(*n.rhs) + ")";
    case Op::Div: return "(" + print_node(*n.lhs) + " / " + print_node(*n.rhs) + ")";
    case Op::Pow: return "(" + print_node(*n.lhs) + " ^ " + print_node(*n.rhs) + ")";
    case Op::Neg: return "(-" + print_node(*n.lhs) + ")";
    case Op::Call: return std::string(func_name(n.func)) + "(" + print_node(*n.lhs) + ")";
  }
  return "?";
}

inline std::string Expr::print() const { return root_ ? print_node(*root_) : std::string(); }

template <typename S>
S Expr::eval(std::span<const S> x) const {
  if (static_cast<int>(x.size()) != dim_)
    throw InputError("point has " + std::to_string(x.size()) + " coordinates, chart has " +
                     std::to_string(dim_));
  return detail::eval_node<S>(*root_, x);
}

inline Jet2 Expr::eval_jet(std::span<const double> p) const {
  if (dim_ > kMaxDim) throw InputError("chart dimension exceeds jet capacity");
  std::array<Jet2, kMaxDim> xs;
  for (int i = 0; i < dim_; ++i) xs[i] = Jet2::variable(p[i], i);
  return eval<Jet2>(std::span<const Jet2>(xs.data(), static_cast<std::size_t>(dim_)));
}

}  // namespace foliate
