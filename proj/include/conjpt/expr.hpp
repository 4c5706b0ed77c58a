#pragma once

// Scalar expressions over a fixed list of real variables: parsing, exact
// symbolic differentiation, evaluation.
//
// Grammar (whitespace insensitive, lowest to highest precedence):
//
//   sum     := product (('+' | '-') product)*
//   product := unary (('*' | '/') unary)*
//   unary   := ('-' | '+') unary | power
//   power   := primary ('^' exponent)*          left associative
//   exponent:= unsigned integer literal | '(' unsigned integer literal ')'
//   primary := number | identifier | func '(' sum ')' | '(' sum ')'
//   func    := sin | cos | exp | log
//
// Identifiers must be one of the declared variable names; `pi` is accepted as
// a constant unless a variable shadows it. Fractional powers are written with
// exp/log explicitly.

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace conjpt::expr {

enum class Kind : std::uint8_t { constant, variable, add, sub, mul, div, pow, neg, sin, cos, exp, log };

class Node;
using Expr = std::shared_ptr<const Node>;

Expr make_node(Kind kind, double value, int index, std::vector<Expr> children);

/// Immutable syntax-tree node. Build through the factory functions below,
/// which apply identity simplifications (0*x -> 0, x+0 -> x, x^0 -> 1, ...).
class Node {
 public:
  Kind kind() const noexcept { return kind_; }
  /// Literal value of a constant node.
  double value() const noexcept { return value_; }
  /// Variable index for `variable`, exponent for `pow`.
  int index() const noexcept { return index_; }
  const std::vector<Expr>& children() const noexcept { return children_; }

  bool is_constant(double v) const noexcept { return kind_ == Kind::constant && value_ == v; }

 private:
  Node(Kind k, double v, int i, std::vector<Expr> c) : kind_(k), value_(v), index_(i), children_(std::move(c)) {}

  Kind kind_;
  double value_;
  int index_;
  std::vector<Expr> children_;

  friend Expr make_node(Kind, double, int, std::vector<Expr>);
};

Expr constant(double v);
Expr variable(int index);
Expr add(Expr a, Expr b);
Expr sub(Expr a, Expr b);
Expr mul(Expr a, Expr b);
Expr div(Expr a, Expr b);
Expr pow(Expr base, int exponent);
Expr neg(Expr a);
Expr sin(Expr a);
Expr cos(Expr a);
Expr exp(Expr a);
Expr log(Expr a);

/// Parses `text` against the declared variable names. Throws ParseError.
Expr parse(std::string_view text, std::span<const std::string> var_names);

/// Exact partial derivative with respect to variable `var`.
Expr differentiate(const Expr& e, int var);

/// Evaluates at `point`. Throws DomainError for log of a nonpositive value or
/// division by zero, std::invalid_argument if a variable index exceeds the point.
double evaluate(const Expr& e, std::span<const double> point);

/// Re-parseable text. Numbers are printed with 17 significant digits.
std::string to_string(const Expr& e, std::span<const std::string> var_names);

/// Largest variable index referenced, or -1 for a closed expression.
int max_variable(const Expr& e);

/// Number of nodes in the tree.
std::size_t node_count(const Expr& e);

/// Structural equality.
bool equal(const Expr& a, const Expr& b);

/// Expression flattened to a postfix tape. Evaluates the same values as
/// `evaluate` on the source tree with less pointer chasing.
class Program {
 public:
  Program() = default;
  explicit Program(const Expr& e);

  double operator()(std::span<const double> point) const;
  bool empty() const noexcept { return code_.empty(); }
  /// Constant programs skip the interpreter.
  bool is_constant() const noexcept { return code_.size() == 1 && code_[0].op == Op::push_const; }

 private:
  enum class Op : std::uint8_t { push_const, push_var, add, sub, mul, div, pow, neg, sin, cos, exp, log };
  struct Instr {
    Op op;
    int arg;
    double value;
  };
  void emit(const Expr& e, int depth);

  std::vector<Instr> code_;
  int max_depth_ = 0;
  int max_var_ = -1;
};

/// Default variable names `prefix1 .. prefixN`.
std::vector<std::string> numbered_names(std::string_view prefix, int count);

}  // namespace conjpt::expr
