#pragma once

#include <map>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace lieode {

/// Parse failure; `position` is a 0-based byte offset into the input text.
struct ParseError : std::runtime_error {
  ParseError(const std::string& msg, std::size_t position)
      : std::runtime_error(msg), position(position) {}
  std::size_t position;
};

/// Evaluation failure: unbound symbol or a domain error (division by zero,
/// ln of a non-positive value, sqrt of a negative value). The message names
/// the offending subexpression.
struct EvalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Binding failure: an expression references a symbol that is not in the
/// declared variable list.
struct BindError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Immutable symbolic expression over named variables.
///
/// Supported grammar: numeric literals, variables, unary functions
/// (sin, cos, tan, exp, ln, sqrt), unary negation and the binary operators
/// + - * / ^ with standard precedence (^ binds tighter than unary minus,
/// which binds tighter than * and /). Construction folds constants and the
/// usual 0/1 identities; no further simplification is performed.
///
/// Expr values are immutable after construction and safe to share across
/// threads.
class Expr {
 public:
  enum class Fun { Neg, Sin, Cos, Tan, Exp, Ln, Sqrt };
  enum class Op { Add, Sub, Mul, Div, Pow };

  /// Constant zero.
  Expr();

  static Expr constant(double value);
  static Expr variable(std::string name);
  static Expr unary(Fun f, const Expr& a);
  static Expr binary(Op op, const Expr& a, const Expr& b);

  bool is_constant() const;
  /// Value of a constant node; requires is_constant().
  double constant_value() const;

  /// True if `symbol` occurs anywhere in the expression.
  bool uses(std::string_view symbol) const;

  /// Resolve every variable against `variables`; eval(span) then reads the
  /// value at the variable's index. Throws BindError on unknown symbols.
  Expr bind(std::span<const std::string> variables) const;

  /// Evaluate a bound expression against values ordered like the bind list.
  double eval(std::span<const double> values) const;

  /// Evaluate by name lookup (no prior bind needed).
  double eval(const std::map<std::string, double>& bindings) const;

  /// Symbolic partial derivative with respect to `symbol`.
  Expr diff(std::string_view symbol) const;

  /// Replace every occurrence of `symbol` by `replacement`.
  Expr substitute(std::string_view symbol, const Expr& replacement) const;

  /// Render as parseable infix text; parse(str()) evaluates identically.
  std::string str() const;

  struct Node;
  explicit Expr(std::shared_ptr<const Node> node) : node_(std::move(node)) {}
  const Node& node() const { return *node_; }
  const std::shared_ptr<const Node>& share() const { return node_; }

 private:
  std::shared_ptr<const Node> node_;
};

/// Parse an infix expression. Symbols are validated later, at bind time;
/// unknown function names are rejected here.
Expr parse_expression(std::string_view text);

/// Flat postfix form of a bound expression for hot loops. Evaluates
/// bit-identically to Expr::eval (same operation order); on a domain error
/// it falls back to the tree walk so the exception names the offending
/// subexpression. Stateless eval, safe to share across threads.
class CompiledExpr {
 public:
  CompiledExpr() = default;
  explicit CompiledExpr(Expr e);
  double eval(std::span<const double> values) const;

 private:
  struct Step {
    int op;       // see expr.cpp
    int slot;     // variable index
    double value; // constant
  };
  std::vector<Step> steps_;
  int depth_ = 0;
  Expr source_;
};

/// One summand of the additive top level of an expression, with its sign.
/// Unary negation is distributed over sums, so -(a+b) yields {-a, -b}.
struct SignedTerm {
  Expr term;
  bool negative = false;
  /// The term with its sign applied.
  Expr signed_expr() const;
};

/// Split an expression at its additive top level.
std::vector<SignedTerm> additive_terms(const Expr& e);

/// Rebuild a sum from signed terms (inverse of additive_terms up to
/// evaluation order). Empty input yields the constant 0.
Expr sum_of_terms(std::span<const SignedTerm> terms);

/// Total polynomial degree of `e` in the given symbols, treating all other
/// symbols as constants. Returns nullopt when `e` is not polynomial in them
/// (e.g. sin(y), 1/y, y^y).
std::optional<int> polynomial_degree(const Expr& e,
                                     std::span<const std::string> symbols);

}  // namespace lieode
