#include "lieode/expr.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <utility>

namespace lieode {

struct Expr::Node {
  enum class Kind { Const, Var, Unary, Binary };
  Kind kind = Kind::Const;
  double value = 0.0;     // Const
  std::string name;       // Var
  int slot = -1;          // Var, resolved by bind()
  Fun fun = Fun::Neg;     // Unary
  Op op = Op::Add;        // Binary
  std::shared_ptr<const Node> a, b;
};

namespace {

using Node = Expr::Node;
using NodePtr = std::shared_ptr<const Node>;

NodePtr make_const(double v) {
  auto n = std::make_shared<Node>();
  n->kind = Node::Kind::Const;
  n->value = v;
  return n;
}

NodePtr make_var(std::string name, int slot = -1) {
  auto n = std::make_shared<Node>();
  n->kind = Node::Kind::Var;
  n->name = std::move(name);
  n->slot = slot;
  return n;
}

bool is_const(const NodePtr& n, double v) {
  return n->kind == Node::Kind::Const && n->value == v;
}

double apply_fun(Expr::Fun f, double x) {
  switch (f) {
    case Expr::Fun::Neg: return -x;
    case Expr::Fun::Sin: return std::sin(x);
    case Expr::Fun::Cos: return std::cos(x);
    case Expr::Fun::Tan: return std::tan(x);
    case Expr::Fun::Exp: return std::exp(x);
    case Expr::Fun::Ln: return std::log(x);
    case Expr::Fun::Sqrt: return std::sqrt(x);
  }
  return 0.0;
}

// Integer powers evaluate by repeated multiplication so that y^2 == y*y.
double int_pow(double base, long long e) {
  if (e < 0) return 1.0 / int_pow(base, -e);
  double result = 1.0, acc = base;
  while (e > 0) {
    if (e & 1) result *= acc;
    acc *= acc;
    e >>= 1;
  }
  return result;
}

bool integral_exponent(double v, long long& out) {
  if (!std::isfinite(v) || std::abs(v) > 1e9) return false;
  double r = std::nearbyint(v);
  if (r != v) return false;
  out = static_cast<long long>(r);
  return true;
}

NodePtr make_unary(Expr::Fun f, NodePtr a) {
  if (f == Expr::Fun::Neg && a->kind == Node::Kind::Unary &&
      a->fun == Expr::Fun::Neg) {
    return a->a;
  }
  if (a->kind == Node::Kind::Const) {
    double v = apply_fun(f, a->value);
    // Keep domain errors (ln(-1), sqrt(-1)) unfolded for eval to report.
    if (std::isfinite(v) || f == Expr::Fun::Neg) return make_const(v);
  }
  auto n = std::make_shared<Node>();
  n->kind = Node::Kind::Unary;
  n->fun = f;
  n->a = std::move(a);
  return n;
}

NodePtr make_binary(Expr::Op op, NodePtr a, NodePtr b) {
  const bool ca = a->kind == Node::Kind::Const;
  const bool cb = b->kind == Node::Kind::Const;
  switch (op) {
    case Expr::Op::Add:
      if (ca && cb) return make_const(a->value + b->value);
      if (is_const(a, 0.0)) return b;
      if (is_const(b, 0.0)) return a;
      break;
    case Expr::Op::Sub:
      if (ca && cb) return make_const(a->value - b->value);
      if (is_const(b, 0.0)) return a;
      if (is_const(a, 0.0)) return make_unary(Expr::Fun::Neg, std::move(b));
      break;
    case Expr::Op::Mul:
      if (ca && cb) return make_const(a->value * b->value);
      if (is_const(a, 0.0) || is_const(b, 0.0)) return make_const(0.0);
      if (is_const(a, 1.0)) return b;
      if (is_const(b, 1.0)) return a;
      break;
    case Expr::Op::Div:
      if (ca && cb && b->value != 0.0) return make_const(a->value / b->value);
      if (is_const(b, 1.0)) return a;
      break;
    case Expr::Op::Pow:
      if (is_const(b, 1.0)) return a;
      if (is_const(b, 0.0)) return make_const(1.0);
      if (ca && cb) {
        long long e;
        if (integral_exponent(b->value, e)) {
          if (a->value != 0.0 || e > 0) return make_const(int_pow(a->value, e));
        } else if (a->value > 0.0) {
          return make_const(std::pow(a->value, b->value));
        }
      }
      break;
  }
  auto n = std::make_shared<Node>();
  n->kind = Node::Kind::Binary;
  n->op = op;
  n->a = std::move(a);
  n->b = std::move(b);
  return n;
}

std::string format_double(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  (void)ec;
  return std::string(buf, end);
}

[[noreturn]] void domain_error(const char* what, const Node& n);

double eval_node(const Node& n, std::span<const double> values,
                 const std::map<std::string, double>* bindings) {
  switch (n.kind) {
    case Node::Kind::Const:
      return n.value;
    case Node::Kind::Var: {
      if (bindings) {
        auto it = bindings->find(n.name);
        if (it == bindings->end())
          throw EvalError("unbound symbol '" + n.name + "'");
        return it->second;
      }
      if (n.slot < 0 || static_cast<std::size_t>(n.slot) >= values.size())
        throw EvalError("unbound symbol '" + n.name + "'");
      return values[static_cast<std::size_t>(n.slot)];
    }
    case Node::Kind::Unary: {
      double a = eval_node(*n.a, values, bindings);
      if (n.fun == Expr::Fun::Ln && a <= 0.0) domain_error("ln of non-positive value", n);
      if (n.fun == Expr::Fun::Sqrt && a < 0.0) domain_error("sqrt of negative value", n);
      return apply_fun(n.fun, a);
    }
    case Node::Kind::Binary: {
      double a = eval_node(*n.a, values, bindings);
      double b = eval_node(*n.b, values, bindings);
      switch (n.op) {
        case Expr::Op::Add: return a + b;
        case Expr::Op::Sub: return a - b;
        case Expr::Op::Mul: return a * b;
        case Expr::Op::Div:
          if (b == 0.0) domain_error("division by zero", n);
          return a / b;
        case Expr::Op::Pow: {
          long long e;
          if (integral_exponent(b, e)) {
            if (a == 0.0 && e < 0) domain_error("zero raised to negative power", n);
            return int_pow(a, e);
          }
          if (a < 0.0) domain_error("negative base with non-integer exponent", n);
          if (a == 0.0 && b < 0.0) domain_error("zero raised to negative power", n);
          return std::pow(a, b);
        }
      }
      return 0.0;
    }
  }
  return 0.0;
}

int precedence(const Node& n) {
  switch (n.kind) {
    case Node::Kind::Const:
      return n.value < 0.0 ? 3 : 5;  // negative literals print a leading '-'
    case Node::Kind::Var:
      return 5;
    case Node::Kind::Unary:
      return n.fun == Expr::Fun::Neg ? 3 : 5;
    case Node::Kind::Binary:
      switch (n.op) {
        case Expr::Op::Add:
        case Expr::Op::Sub: return 1;
        case Expr::Op::Mul:
        case Expr::Op::Div: return 2;
        case Expr::Op::Pow: return 4;
      }
  }
  return 5;
}

const char* fun_name(Expr::Fun f) {
  switch (f) {
    case Expr::Fun::Neg: return "-";
    case Expr::Fun::Sin: return "sin";
    case Expr::Fun::Cos: return "cos";
    case Expr::Fun::Tan: return "tan";
    case Expr::Fun::Exp: return "exp";
    case Expr::Fun::Ln: return "ln";
    case Expr::Fun::Sqrt: return "sqrt";
  }
  return "?";
}

void print_node(const Node& n, std::string& out) {
  auto child = [&out](const Node& c, bool parens) {
    if (parens) out += '(';
    print_node(c, out);
    if (parens) out += ')';
  };
  switch (n.kind) {
    case Node::Kind::Const:
      out += format_double(n.value);
      return;
    case Node::Kind::Var:
      out += n.name;
      return;
    case Node::Kind::Unary:
      if (n.fun == Expr::Fun::Neg) {
        out += '-';
        child(*n.a, precedence(*n.a) < 3);
      } else {
        out += fun_name(n.fun);
        out += '(';
        print_node(*n.a, out);
        out += ')';
      }
      return;
    case Node::Kind::Binary: {
      const int p = precedence(n);
      const char* sym = nullptr;
      switch (n.op) {
        case Expr::Op::Add: sym = "+"; break;
        case Expr::Op::Sub: sym = "-"; break;
        case Expr::Op::Mul: sym = "*"; break;
        case Expr::Op::Div: sym = "/"; break;
        case Expr::Op::Pow: sym = "^"; break;
      }
      if (n.op == Expr::Op::Pow) {
        // Right associative: parenthesize a left-side pow or negation.
        child(*n.a, precedence(*n.a) <= p);
        out += sym;
        child(*n.b, precedence(*n.b) < p);
      } else {
        child(*n.a, precedence(*n.a) < p);
        out += sym;
        // Right child keeps its grouping so reparsing rebuilds this tree.
        child(*n.b, precedence(*n.b) <= p);
      }
      return;
    }
  }
}

[[noreturn]] void domain_error(const char* what, const Node& n) {
  std::string text;
  print_node(n, text);
  throw EvalError(std::string(what) + " in '" + text + "'");
}

NodePtr diff_node(const NodePtr& n, std::string_view symbol);

NodePtr diff_unary(const NodePtr& n, std::string_view symbol) {
  const NodePtr& u = n->a;
  NodePtr du = diff_node(u, symbol);
  using F = Expr::Fun;
  using O = Expr::Op;
  switch (n->fun) {
    case F::Neg:
      return make_unary(F::Neg, du);
    case F::Sin:
      return make_binary(O::Mul, make_unary(F::Cos, u), du);
    case F::Cos:
      return make_unary(F::Neg, make_binary(O::Mul, make_unary(F::Sin, u), du));
    case F::Tan:
      return make_binary(O::Div, du,
                         make_binary(O::Pow, make_unary(F::Cos, u), make_const(2)));
    case F::Exp:
      return make_binary(O::Mul, make_unary(F::Exp, u), du);
    case F::Ln:
      return make_binary(O::Div, du, u);
    case F::Sqrt:
      return make_binary(O::Div, du,
                         make_binary(O::Mul, make_const(2), make_unary(F::Sqrt, u)));
  }
  return make_const(0);
}

NodePtr diff_node(const NodePtr& n, std::string_view symbol) {
  using O = Expr::Op;
  switch (n->kind) {
    case Node::Kind::Const:
      return make_const(0);
    case Node::Kind::Var:
      return make_const(n->name == symbol ? 1 : 0);
    case Node::Kind::Unary:
      return diff_unary(n, symbol);
    case Node::Kind::Binary: {
      const NodePtr& a = n->a;
      const NodePtr& b = n->b;
      NodePtr da = diff_node(a, symbol);
      NodePtr db = diff_node(b, symbol);
      switch (n->op) {
        case O::Add: return make_binary(O::Add, da, db);
        case O::Sub: return make_binary(O::Sub, da, db);
        case O::Mul:
          return make_binary(O::Add, make_binary(O::Mul, da, b),
                             make_binary(O::Mul, a, db));
        case O::Div:
          return make_binary(
              O::Div,
              make_binary(O::Sub, make_binary(O::Mul, da, b),
                          make_binary(O::Mul, a, db)),
              make_binary(O::Pow, b, make_const(2)));
        case O::Pow: {
          if (b->kind == Node::Kind::Const) {
            // d(u^c) = c*u^(c-1)*u'
            return make_binary(
                O::Mul,
                make_binary(O::Mul, make_const(b->value),
                            make_binary(O::Pow, a, make_const(b->value - 1))),
                da);
          }
          // d(u^v) = u^v * (v' ln u + v u'/u)
          NodePtr lhs = make_binary(O::Mul, db, make_unary(Expr::Fun::Ln, a));
          NodePtr rhs = make_binary(O::Mul, b, make_binary(O::Div, da, a));
          return make_binary(O::Mul, make_binary(O::Pow, a, b),
                             make_binary(O::Add, lhs, rhs));
        }
      }
      return make_const(0);
    }
  }
  return make_const(0);
}

NodePtr substitute_node(const NodePtr& n, std::string_view symbol,
                        const NodePtr& replacement) {
  switch (n->kind) {
    case Node::Kind::Const:
      return n;
    case Node::Kind::Var:
      return n->name == symbol ? replacement : n;
    case Node::Kind::Unary:
      return make_unary(n->fun, substitute_node(n->a, symbol, replacement));
    case Node::Kind::Binary:
      return make_binary(n->op, substitute_node(n->a, symbol, replacement),
                         substitute_node(n->b, symbol, replacement));
  }
  return n;
}

NodePtr bind_node(const NodePtr& n, std::span<const std::string> variables) {
  switch (n->kind) {
    case Node::Kind::Const:
      return n;
    case Node::Kind::Var: {
      auto it = std::find(variables.begin(), variables.end(), n->name);
      if (it == variables.end())
        throw BindError("unknown symbol '" + n->name + "'");
      return make_var(n->name, static_cast<int>(it - variables.begin()));
    }
    case Node::Kind::Unary: {
      auto n2 = std::make_shared<Node>(*n);
      n2->a = bind_node(n->a, variables);
      return n2;
    }
    case Node::Kind::Binary: {
      auto n2 = std::make_shared<Node>(*n);
      n2->a = bind_node(n->a, variables);
      n2->b = bind_node(n->b, variables);
      return n2;
    }
  }
  return n;
}

bool uses_node(const Node& n, std::string_view symbol) {
  switch (n.kind) {
    case Node::Kind::Const: return false;
    case Node::Kind::Var: return n.name == symbol;
    case Node::Kind::Unary: return uses_node(*n.a, symbol);
    case Node::Kind::Binary:
      return uses_node(*n.a, symbol) || uses_node(*n.b, symbol);
  }
  return false;
}

}  // namespace

Expr::Expr() : node_(make_const(0.0)) {}

Expr Expr::constant(double value) { return Expr(make_const(value)); }

Expr Expr::variable(std::string name) { return Expr(make_var(std::move(name))); }

Expr Expr::unary(Fun f, const Expr& a) { return Expr(make_unary(f, a.node_)); }

Expr Expr::binary(Op op, const Expr& a, const Expr& b) {
  return Expr(make_binary(op, a.node_, b.node_));
}

bool Expr::is_constant() const { return node_->kind == Node::Kind::Const; }

double Expr::constant_value() const {
  if (!is_constant()) throw EvalError("not a constant expression");
  return node_->value;
}

bool Expr::uses(std::string_view symbol) const {
  return uses_node(*node_, symbol);
}

Expr Expr::bind(std::span<const std::string> variables) const {
  return Expr(bind_node(node_, variables));
}

double Expr::eval(std::span<const double> values) const {
  return eval_node(*node_, values, nullptr);
}

double Expr::eval(const std::map<std::string, double>& bindings) const {
  return eval_node(*node_, {}, &bindings);
}

Expr Expr::diff(std::string_view symbol) const {
  return Expr(diff_node(node_, symbol));
}

Expr Expr::substitute(std::string_view symbol, const Expr& replacement) const {
  return Expr(substitute_node(node_, symbol, replacement.node_));
}

std::string Expr::str() const {
  std::string out;
  print_node(*node_, out);
  return out;
}

// ---------------------------------------------------------------------------
// Parser

namespace {

struct Token {
  enum class Kind { Number, Ident, Plus, Minus, Star, Slash, Caret, LParen, RParen, End };
  Kind kind = Kind::End;
  std::size_t pos = 0;
  double number = 0.0;
  std::string text;
};

class Lexer {
 public:
  explicit Lexer(std::string_view text) : text_(text) { advance(); }

  const Token& current() const { return tok_; }

  void advance() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    tok_ = Token{Token::Kind::End, pos_, 0.0, {}};
    if (pos_ >= text_.size()) return;
    const char c = text_[pos_];
    switch (c) {
      case '+': tok_ = Token{Token::Kind::Plus, pos_++, 0.0, {}}; return;
      case '-': tok_ = Token{Token::Kind::Minus, pos_++, 0.0, {}}; return;
      case '*': tok_ = Token{Token::Kind::Star, pos_++, 0.0, {}}; return;
      case '/': tok_ = Token{Token::Kind::Slash, pos_++, 0.0, {}}; return;
      case '^': tok_ = Token{Token::Kind::Caret, pos_++, 0.0, {}}; return;
      case '(': tok_ = Token{Token::Kind::LParen, pos_++, 0.0, {}}; return;
      case ')': tok_ = Token{Token::Kind::RParen, pos_++, 0.0, {}}; return;
      default: break;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      lex_number();
      return;
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      lex_ident();
      return;
    }
    throw ParseError(std::string("unexpected character '") + c + "'", pos_);
  }

 private:
  void lex_number() {
    const char* begin = text_.data() + pos_;
    const char* end = text_.data() + text_.size();
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(begin, end, value);
    if (ec != std::errc()) throw ParseError("malformed number", pos_);
    tok_ = Token{Token::Kind::Number, pos_, 0.0, {}};
    tok_.number = value;
    pos_ += static_cast<std::size_t>(ptr - begin);
  }

  void lex_ident() {
    std::size_t start = pos_;
    while (pos_ < text_.size() &&
           (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_'))
      ++pos_;
    while (pos_ < text_.size() && text_[pos_] == '\'') ++pos_;  // derivative marks: y', y''
    tok_ = Token{Token::Kind::Ident, start, 0.0, {}};
    tok_.text = std::string(text_.substr(start, pos_ - start));
  }

  std::string_view text_;
  std::size_t pos_ = 0;
  Token tok_;
};

class Parser {
 public:
  explicit Parser(std::string_view text) : lex_(text) {}

  Expr parse() {
    Expr e = parse_sum();
    if (lex_.current().kind != Token::Kind::End)
      throw ParseError("unexpected trailing input", lex_.current().pos);
    return e;
  }

 private:
  Expr parse_sum() {
    Expr e = parse_product();
    for (;;) {
      auto k = lex_.current().kind;
      if (k == Token::Kind::Plus) {
        lex_.advance();
        e = Expr::binary(Expr::Op::Add, e, parse_product());
      } else if (k == Token::Kind::Minus) {
        lex_.advance();
        e = Expr::binary(Expr::Op::Sub, e, parse_product());
      } else {
        return e;
      }
    }
  }

  Expr parse_product() {
    Expr e = parse_unary();
    for (;;) {
      auto k = lex_.current().kind;
      if (k == Token::Kind::Star) {
        lex_.advance();
        e = Expr::binary(Expr::Op::Mul, e, parse_unary());
      } else if (k == Token::Kind::Slash) {
        lex_.advance();
        e = Expr::binary(Expr::Op::Div, e, parse_unary());
      } else {
        return e;
      }
    }
  }

  Expr parse_unary() {
    if (lex_.current().kind == Token::Kind::Minus) {
      lex_.advance();
      return Expr::unary(Expr::Fun::Neg, parse_unary());
    }
    if (lex_.current().kind == Token::Kind::Plus) {
      lex_.advance();
      return parse_unary();
    }
    return parse_power();
  }

  Expr parse_power() {
    Expr base = parse_primary();
    if (lex_.current().kind == Token::Kind::Caret) {
      lex_.advance();
      return Expr::binary(Expr::Op::Pow, base, parse_unary());
    }
    return base;
  }

  Expr parse_primary() {
    const Token tok = lex_.current();
    switch (tok.kind) {
      case Token::Kind::Number:
        lex_.advance();
        return Expr::constant(tok.number);
      case Token::Kind::LParen: {
        lex_.advance();
        Expr e = parse_sum();
        expect(Token::Kind::RParen, "expected ')'");
        return e;
      }
      case Token::Kind::Ident: {
        lex_.advance();
        if (lex_.current().kind == Token::Kind::LParen) {
          Expr::Fun f;
          if (!function_named(tok.text, f))
            throw ParseError("unknown function '" + tok.text + "'", tok.pos);
          lex_.advance();
          Expr arg = parse_sum();
          expect(Token::Kind::RParen, "expected ')' after function argument");
          return Expr::unary(f, arg);
        }
        return Expr::variable(tok.text);
      }
      default:
        throw ParseError("expected a number, symbol or '('", tok.pos);
    }
  }

  static bool function_named(const std::string& name, Expr::Fun& out) {
    static constexpr std::array<std::pair<std::string_view, Expr::Fun>, 6> table{{
        {"sin", Expr::Fun::Sin},
        {"cos", Expr::Fun::Cos},
        {"tan", Expr::Fun::Tan},
        {"exp", Expr::Fun::Exp},
        {"ln", Expr::Fun::Ln},
        {"sqrt", Expr::Fun::Sqrt},
    }};
    for (auto [n, f] : table) {
      if (n == name) {
        out = f;
        return true;
      }
    }
    return false;
  }

  void expect(Token::Kind kind, const char* msg) {
    if (lex_.current().kind != kind) throw ParseError(msg, lex_.current().pos);
    lex_.advance();
  }

  Lexer lex_;
};

}  // namespace

Expr parse_expression(std::string_view text) { return Parser(text).parse(); }

// ---------------------------------------------------------------------------
// Term utilities

namespace {

void collect_terms(const NodePtr& n, bool negative, std::vector<SignedTerm>& out) {
  if (n->kind == Node::Kind::Binary && n->op == Expr::Op::Add) {
    collect_terms(n->a, negative, out);
    collect_terms(n->b, negative, out);
    return;
  }
  if (n->kind == Node::Kind::Binary && n->op == Expr::Op::Sub) {
    collect_terms(n->a, negative, out);
    collect_terms(n->b, !negative, out);
    return;
  }
  if (n->kind == Node::Kind::Unary && n->fun == Expr::Fun::Neg) {
    collect_terms(n->a, !negative, out);
    return;
  }
  out.push_back(SignedTerm{Expr(n), negative});
}

std::optional<int> degree_node(const Node& n, std::span<const std::string> symbols) {
  auto counted = [&symbols](const std::string& name) {
    return std::find(symbols.begin(), symbols.end(), name) != symbols.end();
  };
  switch (n.kind) {
    case Node::Kind::Const:
      return 0;
    case Node::Kind::Var:
      return counted(n.name) ? 1 : 0;
    case Node::Kind::Unary: {
      auto d = degree_node(*n.a, symbols);
      if (!d) return std::nullopt;
      if (n.fun == Expr::Fun::Neg) return d;
      return *d == 0 ? std::optional<int>(0) : std::nullopt;
    }
    case Node::Kind::Binary: {
      auto da = degree_node(*n.a, symbols);
      auto db = degree_node(*n.b, symbols);
      switch (n.op) {
        case Expr::Op::Add:
        case Expr::Op::Sub:
          if (!da || !db) return std::nullopt;
          return std::max(*da, *db);
        case Expr::Op::Mul:
          if (!da || !db) return std::nullopt;
          return *da + *db;
        case Expr::Op::Div:
          if (!da || !db || *db != 0) return std::nullopt;
          return da;
        case Expr::Op::Pow: {
          if (!da) return std::nullopt;
          if (*da == 0 && db && *db == 0) return 0;
          long long e;
          if (n.b->kind == Node::Kind::Const &&
              integral_exponent(n.b->value, e) && e >= 0) {
            return *da * static_cast<int>(e);
          }
          return std::nullopt;
        }
      }
      return std::nullopt;
    }
  }
  return std::nullopt;
}

}  // namespace

// ---------------------------------------------------------------------------
// Compiled postfix form

namespace {

enum CompiledOp {
  kPushConst,
  kPushVar,
  kNeg,
  kSin,
  kCos,
  kTan,
  kExp,
  kLn,
  kSqrt,
  kAdd,
  kSub,
  kMul,
  kDiv,
  kPow,
};

}  // namespace

CompiledExpr::CompiledExpr(Expr e) : source_(std::move(e)) {
  // Post-order flattening; the evaluation stack depth equals the tree depth
  // along the deepest left spine, tracked exactly here.
  struct Frame {
    const Node* node;
    int stage;
  };
  std::vector<Frame> work{{&source_.node(), 0}};
  while (!work.empty()) {
    Frame f = work.back();
    work.pop_back();
    const Node& n = *f.node;
    switch (n.kind) {
      case Node::Kind::Const:
        steps_.push_back({kPushConst, 0, n.value});
        break;
      case Node::Kind::Var:
        if (n.slot < 0)
          throw BindError("cannot compile unbound symbol '" + n.name + "'");
        steps_.push_back({kPushVar, n.slot, 0.0});
        break;
      case Node::Kind::Unary:
        if (f.stage == 0) {
          work.push_back({f.node, 1});
          work.push_back({n.a.get(), 0});
        } else {
          steps_.push_back({kNeg + static_cast<int>(n.fun), 0, 0.0});
        }
        break;
      case Node::Kind::Binary:
        if (f.stage == 0) {
          work.push_back({f.node, 1});
          work.push_back({n.b.get(), 0});
          work.push_back({n.a.get(), 0});
        } else {
          steps_.push_back({kAdd + static_cast<int>(n.op), 0, 0.0});
        }
        break;
    }
  }
  depth_ = 0;
  int live = 0;
  for (const Step& s : steps_) {
    if (s.op == kPushConst || s.op == kPushVar) {
      ++live;
    } else if (s.op >= kAdd) {
      --live;
    }
    depth_ = std::max(depth_, live);
  }
}

double CompiledExpr::eval(std::span<const double> values) const {
  constexpr int kMaxDepth = 128;
  if (steps_.empty()) throw EvalError("empty compiled expression");
  if (depth_ > kMaxDepth) return source_.eval(values);  // pathological nesting

  double stack[kMaxDepth];
  int top = -1;
  for (const Step& s : steps_) {
    switch (s.op) {
      case kPushConst: stack[++top] = s.value; break;
      case kPushVar: {
        if (static_cast<std::size_t>(s.slot) >= values.size())
          return source_.eval(values);  // reports the unbound symbol
        stack[++top] = values[static_cast<std::size_t>(s.slot)];
        break;
      }
      case kNeg: stack[top] = -stack[top]; break;
      case kSin: stack[top] = std::sin(stack[top]); break;
      case kCos: stack[top] = std::cos(stack[top]); break;
      case kTan: stack[top] = std::tan(stack[top]); break;
      case kExp: stack[top] = std::exp(stack[top]); break;
      case kLn:
        if (stack[top] <= 0.0) return source_.eval(values);
        stack[top] = std::log(stack[top]);
        break;
      case kSqrt:
        if (stack[top] < 0.0) return source_.eval(values);
        stack[top] = std::sqrt(stack[top]);
        break;
      case kAdd: --top; stack[top] += stack[top + 1]; break;
      case kSub: --top; stack[top] -= stack[top + 1]; break;
      case kMul: --top; stack[top] *= stack[top + 1]; break;
      case kDiv:
        --top;
        if (stack[top + 1] == 0.0) return source_.eval(values);
        stack[top] /= stack[top + 1];
        break;
      case kPow: {
        --top;
        const double a = stack[top], b = stack[top + 1];
        long long e;
        if (integral_exponent(b, e)) {
          if (a == 0.0 && e < 0) return source_.eval(values);
          stack[top] = int_pow(a, e);
        } else {
          if (a < 0.0 || (a == 0.0 && b < 0.0)) return source_.eval(values);
          stack[top] = std::pow(a, b);
        }
        break;
      }
      default:
        return source_.eval(values);
    }
  }
  return stack[0];
}

Expr SignedTerm::signed_expr() const {
  return negative ? Expr::unary(Expr::Fun::Neg, term) : term;
}

std::vector<SignedTerm> additive_terms(const Expr& e) {
  std::vector<SignedTerm> out;
  collect_terms(e.share(), false, out);
  return out;
}

Expr sum_of_terms(std::span<const SignedTerm> terms) {
  if (terms.empty()) return Expr::constant(0.0);
  Expr acc = terms.front().signed_expr();
  for (std::size_t i = 1; i < terms.size(); ++i) {
    acc = Expr::binary(terms[i].negative ? Expr::Op::Sub : Expr::Op::Add, acc,
                       terms[i].term);
  }
  return acc;
}

std::optional<int> polynomial_degree(const Expr& e,
                                     std::span<const std::string> symbols) {
  return degree_node(e.node(), symbols);
}

}  // namespace lieode
