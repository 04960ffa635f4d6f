#pragma once

// Scalar-field expressions over T*Q x R.
//
// Variables are laid out in a flat coordinate vector x = (q1..qn, p1..pn, z)
// of length 2n+1; q_i is 1-indexed in source text. Named parameters are
// folded into literals at parse time.

#include <cctype>
#include <cmath>
#include <cstdio>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "edenmech/dual.hpp"
#include "edenmech/errors.hpp"

namespace edenmech {

/// Which coordinate groups an expression may reference.
struct VarSet {
  bool q = true;
  bool p = true;
  bool z = true;

  static constexpr VarSet all() { return {true, true, true}; }
  static constexpr VarSet q_only() { return {true, false, false}; }
  static constexpr VarSet q_and_z() { return {true, false, true}; }
  static constexpr VarSet none() { return {false, false, false}; }

  constexpr VarSet operator|(VarSet o) const { return {q || o.q, p || o.p, z || o.z}; }
  constexpr bool subset_of(VarSet o) const { return (!q || o.q) && (!p || o.p) && (!z || o.z); }
  friend constexpr bool operator==(VarSet, VarSet) = default;
};

enum class Func { Sin, Cos, Exp, Log, Sqrt, Abs };

inline const char* func_name(Func f) {
  switch (f) {
    case Func::Sin: return "sin";
    case Func::Cos: return "cos";
    case Func::Exp: return "exp";
    case Func::Log: return "log";
    case Func::Sqrt: return "sqrt";
    case Func::Abs: return "abs";
  }
  return "?";
}

/// Immutable expression tree. Copies share nodes.
class Expr {
 public:
  enum class Kind { Literal, Variable, Neg, Add, Sub, Mul, Div, Pow, Call };

  static Expr literal(double v) { return Expr(make(Kind::Literal, v)); }
  static Expr variable(int index, int n) {
    auto node = make(Kind::Variable, 0.0);
    node->index = index;
    node->n = n;
    return Expr(std::move(node));
  }
  /// Negation of a literal folds into the literal.
  static Expr unary(Kind kind, Expr operand) {
    if (kind == Kind::Neg && operand.kind() == Kind::Literal) return literal(-operand.literal_value());
    auto node = make(kind, 0.0);
    node->lhs = std::move(operand.node_);
    return Expr(std::move(node));
  }
  static Expr binary(Kind kind, Expr lhs, Expr rhs) {
    auto node = make(kind, 0.0);
    node->lhs = std::move(lhs.node_);
    node->rhs = std::move(rhs.node_);
    return Expr(std::move(node));
  }
  static Expr call(Func f, Expr arg) {
    auto node = make(Kind::Call, 0.0);
    node->func = f;
    node->lhs = std::move(arg.node_);
    return Expr(std::move(node));
  }

  Kind kind() const { return node_->kind; }
  double literal_value() const { return node_->value; }
  /// Flat coordinate index in [0, 2n].
  int var_index() const { return node_->index; }
  Func func() const { return node_->func; }
  Expr lhs() const { return Expr(node_->lhs); }
  Expr rhs() const { return Expr(node_->rhs); }

  /// Coordinate groups referenced anywhere in the tree, given dimension n.
  VarSet vars_used(int n) const {
    VarSet used = VarSet::none();
    collect(*node_, n, used);
    return used;
  }

  /// Highest flat index referenced, or -1 when the tree has no variables.
  int max_index() const { return max_index(*node_); }

  template <typename S>
  S evaluate(std::span<const S> x) const {
    return eval_node<S>(*node_, x);
  }

 private:
  struct Node {
    Kind kind;
    double value = 0.0;
    int index = -1;
    int n = 0;
    Func func = Func::Sin;
    std::shared_ptr<const Node> lhs;
    std::shared_ptr<const Node> rhs;
  };

  explicit Expr(std::shared_ptr<const Node> node) : node_(std::move(node)) {}

  static std::shared_ptr<Node> make(Kind kind, double value) {
    auto node = std::make_shared<Node>();
    node->kind = kind;
    node->value = value;
    return node;
  }

  static void collect(const Node& node, int n, VarSet& used) {
    if (node.kind == Kind::Variable) {
      if (node.index < n) used.q = true;
      else if (node.index < 2 * n) used.p = true;
      else used.z = true;
    }
    if (node.lhs) collect(*node.lhs, n, used);
    if (node.rhs) collect(*node.rhs, n, used);
  }

  static int max_index(const Node& node) {
    int m = node.kind == Kind::Variable ? node.index : -1;
    if (node.lhs) m = std::max(m, max_index(*node.lhs));
    if (node.rhs) m = std::max(m, max_index(*node.rhs));
    return m;
  }

  static bool is_constant_tree(const Node& node) {
    if (node.kind == Kind::Variable) return false;
    return (!node.lhs || is_constant_tree(*node.lhs)) && (!node.rhs || is_constant_tree(*node.rhs));
  }

  [[noreturn]] static void domain(const char* what) { throw Error(ErrorKind::DomainError, what); }

  template <typename S>
  static S eval_node(const Node& node, std::span<const S> x) {
    using std::cos, std::exp, std::log, std::sin, std::sqrt, std::abs, std::pow;
    switch (node.kind) {
      case Kind::Literal: return S(node.value);
      case Kind::Variable:
        if (static_cast<std::size_t>(node.index) >= x.size()) {
          throw Error(ErrorKind::DimensionMismatch, "point has fewer coordinates than the expression needs");
        }
        return x[static_cast<std::size_t>(node.index)];
      case Kind::Neg: return -eval_node<S>(*node.lhs, x);
      case Kind::Add: return eval_node<S>(*node.lhs, x) + eval_node<S>(*node.rhs, x);
      case Kind::Sub: return eval_node<S>(*node.lhs, x) - eval_node<S>(*node.rhs, x);
      case Kind::Mul: return eval_node<S>(*node.lhs, x) * eval_node<S>(*node.rhs, x);
      case Kind::Div: {
        S den = eval_node<S>(*node.rhs, x);
        if (value_of(den) == 0.0) domain("division by zero");
        return eval_node<S>(*node.lhs, x) / den;
      }
      case Kind::Pow: {
        S base = eval_node<S>(*node.lhs, x);
        const double b = value_of(base);
        if (is_constant_tree(*node.rhs)) {
          const double e = eval_node<double>(*node.rhs, std::span<const double>{});
          if (b < 0.0 && e != std::floor(e)) domain("negative base to a non-integer power");
          if (b == 0.0 && e < 0.0) domain("zero to a negative power");
          return pow(base, e);
        }
        if (b <= 0.0) domain("non-positive base to a variable power");
        return exp(eval_node<S>(*node.rhs, x) * log(base));
      }
      case Kind::Call: {
        S arg = eval_node<S>(*node.lhs, x);
        switch (node.func) {
          case Func::Sin: return sin(arg);
          case Func::Cos: return cos(arg);
          case Func::Exp: return exp(arg);
          case Func::Log:
            if (value_of(arg) <= 0.0) domain("log of a non-positive number");
            return log(arg);
          case Func::Sqrt:
            if (value_of(arg) < 0.0) domain("sqrt of a negative number");
            if constexpr (std::is_same_v<S, Dual>) {
              if (value_of(arg) == 0.0 && !arg.is_constant()) domain("sqrt is not differentiable at 0");
            }
            return sqrt(arg);
          case Func::Abs: return abs(arg);
        }
      }
    }
    domain("malformed expression");
  }

  std::shared_ptr<const Node> node_;
};

namespace detail {

inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string var_name(int index, int n) {
  if (index < n) return "q" + std::to_string(index + 1);
  if (index < 2 * n) return "p" + std::to_string(index - n + 1);
  return "z";
}

class Parser {
 public:
  Parser(std::string_view src, int n, const std::map<std::string, double>& params, VarSet allowed)
      : src_(src), n_(n), params_(params), allowed_(allowed) {}

  Expr parse() {
    skip_ws();
    if (pos_ == src_.size()) throw ParseError(ErrorKind::EmptyInput, 1, "empty expression");
    Expr e = parse_sum();
    skip_ws();
    if (pos_ != src_.size()) {
      if (src_[pos_] == ')') throw ParseError(ErrorKind::UnbalancedParen, column(), "unmatched ')'");
      throw ParseError(ErrorKind::SyntaxError, column(), std::string("unexpected '") + src_[pos_] + "'");
    }
    return e;
  }

 private:
  std::size_t column() const { return pos_ + 1; }

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

  Expr parse_sum() {
    Expr lhs = parse_product();
    for (;;) {
      if (accept('+')) lhs = Expr::binary(Expr::Kind::Add, lhs, parse_product());
      else if (accept('-')) lhs = Expr::binary(Expr::Kind::Sub, lhs, parse_product());
      else return lhs;
    }
  }

  Expr parse_product() {
    Expr lhs = parse_power();
    for (;;) {
      if (accept('*')) lhs = Expr::binary(Expr::Kind::Mul, lhs, parse_power());
      else if (accept('/')) lhs = Expr::binary(Expr::Kind::Div, lhs, parse_power());
      else return lhs;
    }
  }

  // Right-associative; the base is a unary, so -a^b == (-a)^b.
  Expr parse_power() {
    Expr base = parse_unary();
    if (accept('^')) return Expr::binary(Expr::Kind::Pow, base, parse_power());
    return base;
  }

  Expr parse_unary() {
    if (accept('-')) {
      return Expr::unary(Expr::Kind::Neg, parse_unary());
    }
    return parse_primary();
  }

  Expr parse_primary() {
    skip_ws();
    if (pos_ == src_.size()) throw ParseError(ErrorKind::SyntaxError, column(), "unexpected end of input");
    const char c = src_[pos_];
    if (c == '(') {
      const std::size_t open = column();
      ++pos_;
      Expr inner = parse_sum();
      if (!accept(')')) {
        skip_ws();
        throw ParseError(ErrorKind::UnbalancedParen, column(),
                         "missing ')' for '(' at column " + std::to_string(open));
      }
      return inner;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return parse_number();
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return parse_identifier();
    if (c == ')') throw ParseError(ErrorKind::UnbalancedParen, column(), "unexpected ')'");
    throw ParseError(ErrorKind::SyntaxError, column(), std::string("unexpected '") + c + "'");
  }

  Expr parse_number() {
    const std::size_t start = pos_;
    std::string text(src_.substr(pos_));
    char* end = nullptr;
    const double v = std::strtod(text.c_str(), &end);
    if (end == text.c_str()) throw ParseError(ErrorKind::SyntaxError, column(), "malformed number");
    pos_ = start + static_cast<std::size_t>(end - text.c_str());
    return Expr::literal(v);
  }

  Expr parse_identifier() {
    const std::size_t start = pos_;
    while (pos_ < src_.size() &&
           (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_')) {
      ++pos_;
    }
    const std::string name(src_.substr(start, pos_ - start));
    const std::size_t col = start + 1;

    static const std::map<std::string, Func> funcs = {
        {"sin", Func::Sin}, {"cos", Func::Cos},   {"exp", Func::Exp},
        {"log", Func::Log}, {"sqrt", Func::Sqrt}, {"abs", Func::Abs}};
    if (auto f = funcs.find(name); f != funcs.end()) {
      if (!accept('(')) throw ParseError(ErrorKind::SyntaxError, column(), "expected '(' after " + name);
      Expr arg = parse_sum();
      if (!accept(')')) {
        skip_ws();
        throw ParseError(ErrorKind::UnbalancedParen, column(), "missing ')' after argument of " + name);
      }
      return Expr::call(f->second, arg);
    }
    if (auto p = params_.find(name); p != params_.end()) return Expr::literal(p->second);
    if (name == "z") {
      if (!allowed_.z) throw ParseError(ErrorKind::MechanicalTypeViolation, col, "z is not allowed here");
      return Expr::variable(2 * n_, n_);
    }
    if ((name[0] == 'q' || name[0] == 'p') && name.size() > 1 &&
        name.find_first_not_of("0123456789", 1) == std::string::npos) {
      const long k = std::stol(name.substr(1));
      if (k < 1 || k > n_) {
        throw ParseError(ErrorKind::BadIndex, col,
                         name + " is outside 1.." + std::to_string(n_));
      }
      const bool is_q = name[0] == 'q';
      if (is_q && !allowed_.q) throw ParseError(ErrorKind::MechanicalTypeViolation, col, name + " is not allowed here");
      if (!is_q && !allowed_.p) throw ParseError(ErrorKind::MechanicalTypeViolation, col, name + " is not allowed here");
      return Expr::variable(static_cast<int>(k - 1) + (is_q ? 0 : n_), n_);
    }
    throw ParseError(ErrorKind::UnknownIdentifier, col, "unknown identifier '" + name + "'");
  }

  std::string_view src_;
  int n_;
  const std::map<std::string, double>& params_;
  VarSet allowed_;
  std::size_t pos_ = 0;
};

}  // namespace detail

/// Parse an expression in dimension n. Parameters become literals; variables
/// outside `allowed` raise MechanicalTypeViolation.
inline Expr parse_expr(std::string_view source, int n, const std::map<std::string, double>& params = {},
                       VarSet allowed = VarSet::all()) {
  if (n < 1) throw Error(ErrorKind::ConfigError, "dimension must be at least 1");
  return detail::Parser(source, n, params, allowed).parse();
}

/// Canonical infix form; every compound subexpression is parenthesized so
/// parse(to_string(e)) rebuilds the same tree.
inline std::string to_string(const Expr& e, int n) {
  using K = Expr::Kind;
  switch (e.kind()) {
    case K::Literal: {
      const std::string s = detail::format_double(e.literal_value());
      return e.literal_value() < 0 || std::signbit(e.literal_value()) ? "(" + s + ")" : s;
    }
    case K::Variable: return detail::var_name(e.var_index(), n);
    case K::Neg: return "(-" + to_string(e.lhs(), n) + ")";
    case K::Call: return std::string(func_name(e.func())) + "(" + to_string(e.lhs(), n) + ")";
    default: break;
  }
  const char* op = e.kind() == K::Add ? " + " : e.kind() == K::Sub ? " - " : e.kind() == K::Mul ? " * "
                   : e.kind() == K::Div ? " / " : " ^ ";
  return "(" + to_string(e.lhs(), n) + op + to_string(e.rhs(), n) + ")";
}

/// Structural dump, e.g. Add(Div(Pow(p1,2),2),z).
inline std::string to_sexpr(const Expr& e, int n) {
  using K = Expr::Kind;
  switch (e.kind()) {
    case K::Literal: return detail::format_double(e.literal_value());
    case K::Variable: return detail::var_name(e.var_index(), n);
    case K::Neg: return "Neg(" + to_sexpr(e.lhs(), n) + ")";
    case K::Call: return std::string(func_name(e.func())) + "(" + to_sexpr(e.lhs(), n) + ")";
    default: break;
  }
  const char* name = e.kind() == K::Add ? "Add" : e.kind() == K::Sub ? "Sub" : e.kind() == K::Mul ? "Mul"
                     : e.kind() == K::Div ? "Div" : "Pow";
  return std::string(name) + "(" + to_sexpr(e.lhs(), n) + "," + to_sexpr(e.rhs(), n) + ")";
}

}  // namespace edenmech
