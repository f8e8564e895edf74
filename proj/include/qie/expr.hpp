#pragma once

/*
 * A small closed expression language for defining kernels, multipliers,
 * initial data and nonlinearities on the command line / in config files.
 *
 * Grammar (EBNF):
 *
 *   expr     = term { ("+" | "-") term } ;
 *   term     = unary { ("*" | "/") unary } ;
 *   unary    = "-" unary | power ;
 *   power    = atom [ "^" unary ] ;
 *   atom     = number | variable | function "(" expr ")" | "(" expr ")" ;
 *   variable = "x" | "u" positive-integer ;
 *   function = "exp" | "log" | "sin" | "cos" | "tanh" | "sqrt" | "abs" | "sign" ;
 *   number   = digits [ "." digits ] [ ("e"|"E") ["+"|"-"] digits ] ;
 *
 * The exponent of "^" must be a constant expression evaluating to a
 * non-negative integer; it is folded to a literal at parse time.  This keeps
 * symbolic differentiation closed over the language and avoids branch cuts.
 * "sign" evaluates to -1/0/+1 and is what abs differentiates to; it is
 * accepted on input so that printed derivatives reparse.
 */

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <charconv>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace qie {

class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t position, const std::string& message)
      : std::runtime_error("parse error at " + std::to_string(position) + ": " + message),
        position_(position),
        message_(message) {}

  std::size_t position() const { return position_; }
  const std::string& message() const { return message_; }

 private:
  std::size_t position_;
  std::string message_;
};

// Domain or binding failure while evaluating; carries the offending subtree.
class EvalError : public std::runtime_error {
 public:
  EvalError(const std::string& message, const std::string& subtree)
      : std::runtime_error(message + " in '" + subtree + "'"), subtree_(subtree) {}

  const std::string& subtree() const { return subtree_; }

 private:
  std::string subtree_;
};

class Expr {
 public:
  enum class Kind { number, variable, unary, binary };
  enum class UnaryOp { neg, exp, log, sin, cos, tanh, sqrt, abs, sign };
  enum class BinaryOp { add, sub, mul, div, pow };

  Expr() : node_(number(0.0).node_) {}

  static Expr number(double value) {
    if (!std::isfinite(value)) throw std::invalid_argument("non-finite literal");
    Node n;
    n.kind = Kind::number;
    n.value = value == 0.0 ? 0.0 : value;  // canonicalize -0
    return Expr(std::make_shared<const Node>(std::move(n)));
  }

  // var_index 0 is "x"; k >= 1 is "u<k>".
  static Expr variable(int var_index) {
    if (var_index < 0) throw std::invalid_argument("bad variable index");
    Node n;
    n.kind = Kind::variable;
    n.var = var_index;
    return Expr(std::make_shared<const Node>(std::move(n)));
  }

  static Expr x() { return variable(0); }
  static Expr u(int k) {
    if (k < 1) throw std::invalid_argument("u-index must be >= 1");
    return variable(k);
  }

  static Expr unary(UnaryOp op, Expr operand) {
    Node n;
    n.kind = Kind::unary;
    n.uop = op;
    n.lhs = operand.node_;
    return Expr(std::make_shared<const Node>(std::move(n)));
  }

  static Expr binary(BinaryOp op, Expr lhs, Expr rhs) {
    if (op == BinaryOp::pow) {
      // Invariant: exponents are non-negative integer literals.
      if (rhs.kind() != Kind::number || !is_nonneg_integer(rhs.number_value()))
        throw std::invalid_argument("exponent must be a non-negative integer literal");
    }
    Node n;
    n.kind = Kind::binary;
    n.bop = op;
    n.lhs = lhs.node_;
    n.rhs = rhs.node_;
    return Expr(std::make_shared<const Node>(std::move(n)));
  }

  static Expr pow_int(Expr base, long exponent) {
    if (exponent < 0) throw std::invalid_argument("exponent must be >= 0");
    return binary(BinaryOp::pow, std::move(base), number(double(exponent)));
  }

  Kind kind() const { return node_->kind; }
  double number_value() const { return node_->value; }
  int variable_index() const { return node_->var; }
  UnaryOp unary_op() const { return node_->uop; }
  BinaryOp binary_op() const { return node_->bop; }
  Expr lhs() const { return Expr(node_->lhs); }
  Expr rhs() const { return Expr(node_->rhs); }

  bool operator==(const Expr& other) const {
    return structurally_equal(*node_, *other.node_);
  }
  bool operator!=(const Expr& other) const { return !(*this == other); }

  struct VarUsage {
    bool uses_x = false;
    int max_u = 0;  // 0 when no u<k> occurs
  };
  VarUsage variables() const {
    VarUsage usage;
    collect_usage(*node_, usage);
    return usage;
  }

 private:
  struct Node {
    Kind kind{};
    double value = 0.0;
    int var = 0;
    UnaryOp uop{};
    BinaryOp bop{};
    std::shared_ptr<const Node> lhs, rhs;
  };

  explicit Expr(std::shared_ptr<const Node> node) : node_(std::move(node)) {}

  static bool is_nonneg_integer(double v) {
    return std::isfinite(v) && v >= 0.0 && v == std::floor(v) && v <= 1e9;
  }

  static bool structurally_equal(const Node& a, const Node& b) {
    if (a.kind != b.kind) return false;
    switch (a.kind) {
      case Kind::number:
        return a.value == b.value;
      case Kind::variable:
        return a.var == b.var;
      case Kind::unary:
        return a.uop == b.uop && structurally_equal(*a.lhs, *b.lhs);
      case Kind::binary:
        return a.bop == b.bop && structurally_equal(*a.lhs, *b.lhs) &&
               structurally_equal(*a.rhs, *b.rhs);
    }
    return false;
  }

  static void collect_usage(const Node& n, VarUsage& usage) {
    switch (n.kind) {
      case Kind::number:
        break;
      case Kind::variable:
        if (n.var == 0)
          usage.uses_x = true;
        else if (n.var > usage.max_u)
          usage.max_u = n.var;
        break;
      case Kind::unary:
        collect_usage(*n.lhs, usage);
        break;
      case Kind::binary:
        collect_usage(*n.lhs, usage);
        collect_usage(*n.rhs, usage);
        break;
    }
  }

  std::shared_ptr<const Node> node_;
};

namespace detail {

inline std::string format_double(double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline const char* unary_name(Expr::UnaryOp op) {
  switch (op) {
    case Expr::UnaryOp::neg: return "-";
    case Expr::UnaryOp::exp: return "exp";
    case Expr::UnaryOp::log: return "log";
    case Expr::UnaryOp::sin: return "sin";
    case Expr::UnaryOp::cos: return "cos";
    case Expr::UnaryOp::tanh: return "tanh";
    case Expr::UnaryOp::sqrt: return "sqrt";
    case Expr::UnaryOp::abs: return "abs";
    case Expr::UnaryOp::sign: return "sign";
  }
  return "?";
}

// Precedence levels: + - (1), * / (2), unary minus (3), ^ (4), atoms (5).
inline int precedence_of(const Expr& e) {
  switch (e.kind()) {
    case Expr::Kind::number:
    case Expr::Kind::variable:
      return 5;
    case Expr::Kind::unary:
      return e.unary_op() == Expr::UnaryOp::neg ? 3 : 5;
    case Expr::Kind::binary:
      switch (e.binary_op()) {
        case Expr::BinaryOp::add:
        case Expr::BinaryOp::sub: return 1;
        case Expr::BinaryOp::mul:
        case Expr::BinaryOp::div: return 2;
        case Expr::BinaryOp::pow: return 4;
      }
  }
  return 5;
}

inline void print_expr(const Expr& e, int min_prec, std::string& out) {
  const int prec = precedence_of(e);
  const bool parens = prec < min_prec;
  if (parens) out += '(';
  switch (e.kind()) {
    case Expr::Kind::number: {
      double v = e.number_value();
      if (v < 0.0) {
        // Negative literals only arise from programmatic construction.
        out += "(-";
        out += format_double(-v);
        out += ')';
      } else {
        out += format_double(v);
      }
      break;
    }
    case Expr::Kind::variable:
      if (e.variable_index() == 0)
        out += 'x';
      else
        out += "u" + std::to_string(e.variable_index());
      break;
    case Expr::Kind::unary:
      if (e.unary_op() == Expr::UnaryOp::neg) {
        out += '-';
        print_expr(e.lhs(), 3, out);
      } else {
        out += unary_name(e.unary_op());
        out += '(';
        print_expr(e.lhs(), 0, out);
        out += ')';
      }
      break;
    case Expr::Kind::binary: {
      const char* op = nullptr;
      switch (e.binary_op()) {
        case Expr::BinaryOp::add: op = "+"; break;
        case Expr::BinaryOp::sub: op = "-"; break;
        case Expr::BinaryOp::mul: op = "*"; break;
        case Expr::BinaryOp::div: op = "/"; break;
        case Expr::BinaryOp::pow: op = "^"; break;
      }
      if (e.binary_op() == Expr::BinaryOp::pow) {
        print_expr(e.lhs(), 5, out);  // base needs parens unless atomic
        out += op;
        print_expr(e.rhs(), 4, out);
      } else {
        // Left-associative: right operand needs strictly higher precedence,
        // so a+(b+c) keeps its parentheses and reparses to the same tree.
        print_expr(e.lhs(), prec, out);
        out += op;
        print_expr(e.rhs(), prec + 1, out);
      }
      break;
    }
  }
  if (parens) out += ')';
}

}  // namespace detail

inline std::string to_string(const Expr& e) {
  std::string out;
  detail::print_expr(e, 0, out);
  return out;
}

// Evaluation point: x (when bound) plus the u-variables u1..uN in order.
struct EvalPoint {
  std::optional<double> x;
  std::span<const double> u;
};

namespace detail {

[[noreturn]] inline void eval_fail(const Expr& e, const std::string& message) {
  std::string subtree = to_string(e);
  if (subtree.size() > 96) subtree = subtree.substr(0, 93) + "...";
  throw EvalError(message, subtree);
}

inline double eval_node(const Expr& e, const EvalPoint& p) {
  switch (e.kind()) {
    case Expr::Kind::number:
      return e.number_value();
    case Expr::Kind::variable: {
      int k = e.variable_index();
      if (k == 0) {
        if (!p.x) eval_fail(e, "unbound variable x");
        return *p.x;
      }
      if (k > int(p.u.size())) eval_fail(e, "unbound variable u" + std::to_string(k));
      return p.u[std::size_t(k - 1)];
    }
    case Expr::Kind::unary: {
      double v = eval_node(e.lhs(), p);
      double r = 0.0;
      switch (e.unary_op()) {
        case Expr::UnaryOp::neg: r = -v; break;
        case Expr::UnaryOp::exp: r = std::exp(v); break;
        case Expr::UnaryOp::log:
          if (v <= 0.0) eval_fail(e, "log of non-positive value");
          r = std::log(v);
          break;
        case Expr::UnaryOp::sin: r = std::sin(v); break;
        case Expr::UnaryOp::cos: r = std::cos(v); break;
        case Expr::UnaryOp::tanh: r = std::tanh(v); break;
        case Expr::UnaryOp::sqrt:
          if (v < 0.0) eval_fail(e, "sqrt of negative value");
          r = std::sqrt(v);
          break;
        case Expr::UnaryOp::abs: r = std::fabs(v); break;
        case Expr::UnaryOp::sign: r = (v > 0.0) - (v < 0.0); break;
      }
      if (!std::isfinite(r)) eval_fail(e, "non-finite value");
      return r;
    }
    case Expr::Kind::binary: {
      double a = eval_node(e.lhs(), p);
      double r = 0.0;
      switch (e.binary_op()) {
        case Expr::BinaryOp::add: r = a + eval_node(e.rhs(), p); break;
        case Expr::BinaryOp::sub: r = a - eval_node(e.rhs(), p); break;
        case Expr::BinaryOp::mul: r = a * eval_node(e.rhs(), p); break;
        case Expr::BinaryOp::div: {
          double b = eval_node(e.rhs(), p);
          if (b == 0.0) eval_fail(e, "division by zero");
          r = a / b;
          break;
        }
        case Expr::BinaryOp::pow: {
          // Exponent is a non-negative integer literal by construction.
          long k = long(e.rhs().number_value());
          r = 1.0;
          double base = a;
          for (long b = k; b > 0; b >>= 1) {
            if (b & 1) r *= base;
            base *= base;
          }
          break;
        }
      }
      if (!std::isfinite(r)) eval_fail(e, "non-finite value");
      return r;
    }
  }
  eval_fail(e, "malformed expression");
}

}  // namespace detail

inline double eval_at(const Expr& e, const EvalPoint& p) { return detail::eval_node(e, p); }

inline double eval(const Expr& e, const std::map<std::string, double>& bindings) {
  auto usage = e.variables();
  EvalPoint p;
  if (auto it = bindings.find("x"); it != bindings.end()) p.x = it->second;
  std::vector<double> u(std::size_t(std::max(usage.max_u, 0)), 0.0);
  std::vector<bool> bound(u.size(), false);
  for (const auto& [name, value] : bindings) {
    if (name.size() >= 2 && name[0] == 'u') {
      int k = 0;
      auto res = std::from_chars(name.data() + 1, name.data() + name.size(), k);
      if (res.ec == std::errc{} && res.ptr == name.data() + name.size() && k >= 1 &&
          k <= int(u.size())) {
        u[std::size_t(k - 1)] = value;
        bound[std::size_t(k - 1)] = true;
      }
    }
  }
  for (int k = 1; k <= usage.max_u; ++k)
    if (!bound[std::size_t(k - 1)])
      throw EvalError("unbound variable u" + std::to_string(k), to_string(e));
  p.u = u;
  return detail::eval_node(e, p);
}

namespace detail {

// Simplifying constructors used by differentiate: fold 0+t, t+0, 0*t, 1*t,
// t^0, t^1 and literal arithmetic.  Negative literal results are stored as
// -(literal) so that every tree prints in the surface grammar.

inline bool is_const(const Expr& e, double v) {
  return e.kind() == Expr::Kind::number && e.number_value() == v;
}

inline Expr simp_neg(Expr a);

inline Expr from_value(double v) {
  if (v < 0.0) return Expr::unary(Expr::UnaryOp::neg, Expr::number(-v));
  return Expr::number(v);
}

inline Expr simp_neg(Expr a) {
  if (a.kind() == Expr::Kind::number) return from_value(-a.number_value());
  if (a.kind() == Expr::Kind::unary && a.unary_op() == Expr::UnaryOp::neg) return a.lhs();
  return Expr::unary(Expr::UnaryOp::neg, std::move(a));
}

inline Expr simp_add(Expr a, Expr b) {
  if (is_const(a, 0.0)) return b;
  if (is_const(b, 0.0)) return a;
  if (a.kind() == Expr::Kind::number && b.kind() == Expr::Kind::number)
    return from_value(a.number_value() + b.number_value());
  return Expr::binary(Expr::BinaryOp::add, std::move(a), std::move(b));
}

inline Expr simp_sub(Expr a, Expr b) {
  if (is_const(b, 0.0)) return a;
  if (is_const(a, 0.0)) return simp_neg(std::move(b));
  if (a.kind() == Expr::Kind::number && b.kind() == Expr::Kind::number)
    return from_value(a.number_value() - b.number_value());
  return Expr::binary(Expr::BinaryOp::sub, std::move(a), std::move(b));
}

inline Expr simp_mul(Expr a, Expr b) {
  if (is_const(a, 0.0) || is_const(b, 0.0)) return Expr::number(0.0);
  if (is_const(a, 1.0)) return b;
  if (is_const(b, 1.0)) return a;
  if (a.kind() == Expr::Kind::number && b.kind() == Expr::Kind::number)
    return from_value(a.number_value() * b.number_value());
  return Expr::binary(Expr::BinaryOp::mul, std::move(a), std::move(b));
}

inline Expr simp_div(Expr a, Expr b) {
  if (is_const(a, 0.0) && !is_const(b, 0.0)) return Expr::number(0.0);
  if (is_const(b, 1.0)) return a;
  return Expr::binary(Expr::BinaryOp::div, std::move(a), std::move(b));
}

inline Expr simp_pow(Expr base, long k) {
  if (k == 0) return Expr::number(1.0);
  if (k == 1) return base;
  return Expr::pow_int(std::move(base), k);
}

}  // namespace detail

// Exact partial derivative with respect to "x" (index 0) or "u<k>" (index k).
// Convention: d|y|/dy = sign(y) with sign(0) = 0, and d sign / dy = 0.
inline Expr differentiate(const Expr& e, int var_index) {
  using detail::simp_add;
  using detail::simp_div;
  using detail::simp_mul;
  using detail::simp_neg;
  using detail::simp_pow;
  using detail::simp_sub;
  switch (e.kind()) {
    case Expr::Kind::number:
      return Expr::number(0.0);
    case Expr::Kind::variable:
      return Expr::number(e.variable_index() == var_index ? 1.0 : 0.0);
    case Expr::Kind::unary: {
      Expr f = e.lhs();
      Expr df = differentiate(f, var_index);
      switch (e.unary_op()) {
        case Expr::UnaryOp::neg:
          return simp_neg(std::move(df));
        case Expr::UnaryOp::exp:
          return simp_mul(Expr::unary(Expr::UnaryOp::exp, f), std::move(df));
        case Expr::UnaryOp::log:
          return simp_div(std::move(df), f);
        case Expr::UnaryOp::sin:
          return simp_mul(Expr::unary(Expr::UnaryOp::cos, f), std::move(df));
        case Expr::UnaryOp::cos:
          return simp_mul(simp_neg(Expr::unary(Expr::UnaryOp::sin, f)), std::move(df));
        case Expr::UnaryOp::tanh:
          return simp_mul(
              simp_sub(Expr::number(1.0),
                       simp_pow(Expr::unary(Expr::UnaryOp::tanh, f), 2)),
              std::move(df));
        case Expr::UnaryOp::sqrt:
          return simp_div(std::move(df),
                          simp_mul(Expr::number(2.0), Expr::unary(Expr::UnaryOp::sqrt, f)));
        case Expr::UnaryOp::abs:
          return simp_mul(Expr::unary(Expr::UnaryOp::sign, f), std::move(df));
        case Expr::UnaryOp::sign:
          return Expr::number(0.0);  // almost everywhere
      }
      break;
    }
    case Expr::Kind::binary: {
      Expr f = e.lhs();
      Expr g = e.rhs();
      switch (e.binary_op()) {
        case Expr::BinaryOp::add:
          return simp_add(differentiate(f, var_index), differentiate(g, var_index));
        case Expr::BinaryOp::sub:
          return simp_sub(differentiate(f, var_index), differentiate(g, var_index));
        case Expr::BinaryOp::mul:
          return simp_add(simp_mul(differentiate(f, var_index), g),
                          simp_mul(f, differentiate(g, var_index)));
        case Expr::BinaryOp::div:
          return simp_div(simp_sub(simp_mul(differentiate(f, var_index), g),
                                   simp_mul(f, differentiate(g, var_index))),
                          simp_pow(g, 2));
        case Expr::BinaryOp::pow: {
          long k = long(g.number_value());
          if (k == 0) return Expr::number(0.0);
          return simp_mul(simp_mul(Expr::number(double(k)), simp_pow(f, k - 1)),
                          differentiate(f, var_index));
        }
      }
      break;
    }
  }
  throw std::logic_error("differentiate: malformed expression");
}

inline Expr differentiate(const Expr& e, std::string_view var) {
  if (var == "x") return differentiate(e, 0);
  if (var.size() >= 2 && var[0] == 'u') {
    int k = 0;
    auto res = std::from_chars(var.data() + 1, var.data() + var.size(), k);
    if (res.ec == std::errc{} && res.ptr == var.data() + var.size() && k >= 1)
      return differentiate(e, k);
  }
  throw std::invalid_argument("bad variable name '" + std::string(var) + "'");
}

namespace detail {

class Parser {
 public:
  explicit Parser(std::string_view src) : src_(src) {}

  Expr parse() {
    skip_ws();
    if (pos_ >= src_.size()) throw ParseError(0, "empty expression");
    Expr e = parse_expr();
    skip_ws();
    if (pos_ < src_.size())
      throw ParseError(pos_, std::string("unexpected '") + src_[pos_] + "'");
    return e;
  }

 private:
  std::string_view src_;
  std::size_t pos_ = 0;
  int depth_ = 0;

  struct DepthGuard {
    explicit DepthGuard(Parser& p) : parser(p) {
      if (++parser.depth_ > 200)
        throw ParseError(parser.pos_, "expression too deeply nested");
    }
    ~DepthGuard() { --parser.depth_; }
    Parser& parser;
  };

  void skip_ws() {
    while (pos_ < src_.size() && (src_[pos_] == ' ' || src_[pos_] == '\t' ||
                                  src_[pos_] == '\n' || src_[pos_] == '\r'))
      ++pos_;
  }

  bool consume(char c) {
    skip_ws();
    if (pos_ < src_.size() && src_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  char peek() {
    skip_ws();
    return pos_ < src_.size() ? src_[pos_] : '\0';
  }

  Expr parse_expr() {
    DepthGuard guard(*this);
    Expr e = parse_term();
    for (;;) {
      if (consume('+'))
        e = Expr::binary(Expr::BinaryOp::add, e, parse_term());
      else if (consume('-'))
        e = Expr::binary(Expr::BinaryOp::sub, e, parse_term());
      else
        return e;
    }
  }

  Expr parse_term() {
    DepthGuard guard(*this);
    Expr e = parse_unary();
    for (;;) {
      if (consume('*'))
        e = Expr::binary(Expr::BinaryOp::mul, e, parse_unary());
      else if (consume('/'))
        e = Expr::binary(Expr::BinaryOp::div, e, parse_unary());
      else
        return e;
    }
  }

  Expr parse_unary() {
    DepthGuard guard(*this);
    if (consume('-')) return Expr::unary(Expr::UnaryOp::neg, parse_unary());
    return parse_power();
  }

  Expr parse_power() {
    DepthGuard guard(*this);
    Expr base = parse_atom();
    skip_ws();
    if (!consume('^')) return base;
    skip_ws();
    std::size_t exp_pos = pos_;
    Expr exponent = parse_unary();  // right-associative via the power chain
    auto usage = exponent.variables();
    if (usage.uses_x || usage.max_u > 0)
      throw ParseError(exp_pos, "exponent must be a constant");
    double v;
    try {
      v = eval_at(exponent, EvalPoint{});
    } catch (const EvalError&) {
      throw ParseError(exp_pos, "exponent does not evaluate to a constant");
    }
    if (!(v >= 0.0 && v == std::floor(v) && v <= 1e9))
      throw ParseError(exp_pos, "exponent must be a non-negative integer");
    return Expr::binary(Expr::BinaryOp::pow, base, Expr::number(v));
  }

  Expr parse_atom() {
    DepthGuard guard(*this);
    skip_ws();
    if (pos_ >= src_.size()) throw ParseError(pos_, "unexpected end of input");
    char c = src_[pos_];
    if (c == '(') {
      std::size_t open = pos_;
      ++pos_;
      Expr e = parse_expr();
      if (!consume(')')) throw ParseError(open, "unbalanced parenthesis");
      return e;
    }
    if (std::isdigit(static_cast<unsigned char>(c))) return parse_number();
    if (std::isalpha(static_cast<unsigned char>(c))) return parse_identifier();
    throw ParseError(pos_, std::string("unexpected '") + c + "'");
  }

  Expr parse_number() {
    std::size_t start = pos_;
    while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) ++pos_;
    if (pos_ < src_.size() && src_[pos_] == '.') {
      ++pos_;
      while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) ++pos_;
    }
    if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
      std::size_t mark = pos_;
      ++pos_;
      if (pos_ < src_.size() && (src_[pos_] == '+' || src_[pos_] == '-')) ++pos_;
      if (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) {
        while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) ++pos_;
      } else {
        pos_ = mark;  // "2e" is the number 2 followed by an identifier
      }
    }
    double value = 0.0;
    auto res = std::from_chars(src_.data() + start, src_.data() + pos_, value);
    if (res.ec != std::errc{} || !std::isfinite(value))
      throw ParseError(start, "bad numeric literal");
    return Expr::number(value);
  }

  Expr parse_identifier() {
    std::size_t start = pos_;
    while (pos_ < src_.size() && (std::isalnum(static_cast<unsigned char>(src_[pos_])) ||
                                  src_[pos_] == '_'))
      ++pos_;
    std::string_view name = src_.substr(start, pos_ - start);
    if (name == "x") return Expr::x();
    if (name.size() >= 2 && name[0] == 'u') {
      int k = 0;
      auto res = std::from_chars(name.data() + 1, name.data() + name.size(), k);
      if (res.ec == std::errc{} && res.ptr == name.data() + name.size()) {
        if (k < 1) throw ParseError(start, "variable index must be >= 1");
        return Expr::u(k);
      }
    }
    static const std::map<std::string_view, Expr::UnaryOp> functions = {
        {"exp", Expr::UnaryOp::exp},   {"log", Expr::UnaryOp::log},
        {"sin", Expr::UnaryOp::sin},   {"cos", Expr::UnaryOp::cos},
        {"tanh", Expr::UnaryOp::tanh}, {"sqrt", Expr::UnaryOp::sqrt},
        {"abs", Expr::UnaryOp::abs},   {"sign", Expr::UnaryOp::sign}};
    auto it = functions.find(name);
    if (it == functions.end())
      throw ParseError(start, "unknown identifier '" + std::string(name) + "'");
    if (!consume('('))
      throw ParseError(pos_, std::string(name) + " expects parenthesized argument");
    Expr arg = parse_expr();
    if (!consume(')')) throw ParseError(pos_, "unbalanced parenthesis");
    return Expr::unary(it->second, arg);
  }
};

}  // namespace detail

inline Expr parse(std::string_view source) { return detail::Parser(source).parse(); }

}  // namespace qie
