#include "conjpt/expr.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <stdexcept>

#include "conjpt/errors.hpp"

namespace conjpt::expr {

Expr make_node(Kind kind, double value, int index, std::vector<Expr> children) {
  return Expr(new Node(kind, value, index, std::move(children)));
}

namespace {

double ipow(double base, int e) {
  double result = 1.0;
  while (e > 0) {
    if (e & 1) result *= base;
    base *= base;
    e >>= 1;
  }
  return result;
}

bool is_const(const Expr& e) { return e->kind() == Kind::constant; }

}  // namespace

Expr constant(double v) { return make_node(Kind::constant, v, 0, {}); }

Expr variable(int index) {
  if (index < 0) throw std::invalid_argument("variable index must be nonnegative");
  return make_node(Kind::variable, 0.0, index, {});
}

Expr add(Expr a, Expr b) {
  if (a->is_constant(0.0)) return b;
  if (b->is_constant(0.0)) return a;
  if (is_const(a) && is_const(b)) return constant(a->value() + b->value());
  return make_node(Kind::add, 0.0, 0, {std::move(a), std::move(b)});
}

Expr sub(Expr a, Expr b) {
  if (b->is_constant(0.0)) return a;
  if (a->is_constant(0.0)) return neg(std::move(b));
  if (is_const(a) && is_const(b)) return constant(a->value() - b->value());
  return make_node(Kind::sub, 0.0, 0, {std::move(a), std::move(b)});
}

Expr mul(Expr a, Expr b) {
  if (a->is_constant(0.0) || b->is_constant(0.0)) return constant(0.0);
  if (a->is_constant(1.0)) return b;
  if (b->is_constant(1.0)) return a;
  if (is_const(a) && is_const(b)) return constant(a->value() * b->value());
  return make_node(Kind::mul, 0.0, 0, {std::move(a), std::move(b)});
}

Expr div(Expr a, Expr b) {
  if (b->is_constant(1.0)) return a;
  if (a->is_constant(0.0) && !b->is_constant(0.0)) return constant(0.0);
  if (is_const(a) && is_const(b) && b->value() != 0.0) return constant(a->value() / b->value());
  return make_node(Kind::div, 0.0, 0, {std::move(a), std::move(b)});
}

Expr pow(Expr base, int exponent) {
  if (exponent < 0) throw std::invalid_argument("negative exponent");
  if (exponent == 0) return constant(1.0);
  if (exponent == 1) return base;
  if (is_const(base)) return constant(ipow(base->value(), exponent));
  return make_node(Kind::pow, 0.0, exponent, {std::move(base)});
}

Expr neg(Expr a) {
  if (is_const(a)) return constant(-a->value());
  if (a->kind() == Kind::neg) return a->children()[0];
  return make_node(Kind::neg, 0.0, 0, {std::move(a)});
}

Expr sin(Expr a) {
  if (is_const(a)) return constant(std::sin(a->value()));
  return make_node(Kind::sin, 0.0, 0, {std::move(a)});
}

Expr cos(Expr a) {
  if (is_const(a)) return constant(std::cos(a->value()));
  return make_node(Kind::cos, 0.0, 0, {std::move(a)});
}

Expr exp(Expr a) {
  if (is_const(a)) return constant(std::exp(a->value()));
  return make_node(Kind::exp, 0.0, 0, {std::move(a)});
}

Expr log(Expr a) {
  if (is_const(a) && a->value() > 0.0) return constant(std::log(a->value()));
  return make_node(Kind::log, 0.0, 0, {std::move(a)});
}

// ---------------------------------------------------------------------------
// Parser

namespace {

class Parser {
 public:
  Parser(std::string_view text, std::span<const std::string> names) : text_(text), names_(names) {}

  Expr run() {
    skip_ws();
    if (pos_ >= text_.size()) throw ParseError("empty expression", pos_);
    Expr e = parse_sum();
    skip_ws();
    if (pos_ < text_.size()) throw ParseError(std::string("unexpected '") + text_[pos_] + "'", pos_);
    return e;
  }

 private:
  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  bool accept(char c) {
    skip_ws();
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  [[noreturn]] void fail_here(const std::string& what) {
    if (pos_ >= text_.size()) throw ParseError("unexpected end of input", text_.size());
    throw ParseError(what, pos_);
  }

  Expr parse_sum() {
    Expr lhs = parse_product();
    for (;;) {
      if (accept('+'))
        lhs = add(lhs, parse_product());
      else if (accept('-'))
        lhs = sub(lhs, parse_product());
      else
        return lhs;
    }
  }

  Expr parse_product() {
    Expr lhs = parse_unary();
    for (;;) {
      if (accept('*'))
        lhs = mul(lhs, parse_unary());
      else if (accept('/'))
        lhs = div(lhs, parse_unary());
      else
        return lhs;
    }
  }

  Expr parse_unary() {
    if (accept('-')) return neg(parse_unary());
    if (accept('+')) return parse_unary();
    return parse_power();
  }

  Expr parse_power() {
    Expr base = parse_primary();
    while (accept('^')) base = pow(base, parse_exponent());
    return base;
  }

  int parse_exponent() {
    skip_ws();
    const bool paren = accept('(');
    skip_ws();
    const std::size_t start = pos_;
    if (pos_ >= text_.size()) fail_here("expected exponent");
    std::size_t end = start;
    while (end < text_.size() && std::isdigit(static_cast<unsigned char>(text_[end]))) ++end;
    // Anything that continues like a real number, a sign, or a symbol is rejected.
    if (end == start || (end < text_.size() && (text_[end] == '.' || text_[end] == 'e' || text_[end] == 'E' ||
                                                std::isalpha(static_cast<unsigned char>(text_[end])) ||
                                                text_[end] == '_'))) {
      throw ParseError("non-integer exponent", start);
    }
    int value = 0;
    auto [ptr, ec] = std::from_chars(text_.data() + start, text_.data() + end, value);
    if (ec != std::errc()) throw ParseError("exponent out of range", start);
    (void)ptr;
    pos_ = end;
    if (paren && !accept(')')) fail_here("expected ')'");
    return value;
  }

  Expr parse_primary() {
    skip_ws();
    if (pos_ >= text_.size()) fail_here("expected operand");
    const char c = text_[pos_];
    if (c == '(') {
      ++pos_;
      Expr inner = parse_sum();
      if (!accept(')')) fail_here("expected ')'");
      return inner;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return parse_number();
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return parse_identifier();
    fail_here(std::string("unexpected '") + c + "'");
  }

  Expr parse_number() {
    const std::size_t start = pos_;
    std::size_t end = pos_;
    while (end < text_.size() && (std::isdigit(static_cast<unsigned char>(text_[end])) || text_[end] == '.')) ++end;
    if (end < text_.size() && (text_[end] == 'e' || text_[end] == 'E')) {
      std::size_t k = end + 1;
      if (k < text_.size() && (text_[k] == '+' || text_[k] == '-')) ++k;
      if (k < text_.size() && std::isdigit(static_cast<unsigned char>(text_[k]))) {
        while (k < text_.size() && std::isdigit(static_cast<unsigned char>(text_[k]))) ++k;
        end = k;
      }
    }
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(text_.data() + start, text_.data() + end, value);
    if (ec != std::errc() || ptr != text_.data() + end) throw ParseError("malformed number", start);
    pos_ = end;
    return constant(value);
  }

  Expr parse_identifier() {
    const std::size_t start = pos_;
    while (pos_ < text_.size() &&
           (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_'))
      ++pos_;
    const std::string_view name = text_.substr(start, pos_ - start);

    for (std::size_t i = 0; i < names_.size(); ++i)
      if (names_[i] == name) return variable(static_cast<int>(i));

    using Fn = Expr (*)(Expr);
    static constexpr std::array<std::pair<std::string_view, Fn>, 4> functions{{
        {"sin", &conjpt::expr::sin},
        {"cos", &conjpt::expr::cos},
        {"exp", &conjpt::expr::exp},
        {"log", &conjpt::expr::log},
    }};
    for (const auto& [fname, fn] : functions) {
      if (name != fname) continue;
      if (!accept('(')) fail_here("expected '(' after " + std::string(fname));
      Expr arg = parse_sum();
      if (!accept(')')) fail_here("expected ')'");
      return fn(arg);
    }
    if (name == "pi") return constant(std::numbers::pi);
    throw ParseError("unknown identifier '" + std::string(name) + "'", start);
  }

  std::string_view text_;
  std::span<const std::string> names_;
  std::size_t pos_ = 0;
};

}  // namespace

Expr parse(std::string_view text, std::span<const std::string> var_names) {
  for (std::size_t i = 0; i < var_names.size(); ++i)
    for (std::size_t j = i + 1; j < var_names.size(); ++j)
      if (var_names[i] == var_names[j]) throw std::invalid_argument("duplicate variable name '" + var_names[i] + "'");
  return Parser(text, var_names).run();
}

// ---------------------------------------------------------------------------

Expr differentiate(const Expr& e, int var) {
  const auto& c = e->children();
  switch (e->kind()) {
    case Kind::constant:
      return constant(0.0);
    case Kind::variable:
      return constant(e->index() == var ? 1.0 : 0.0);
    case Kind::add:
      return add(differentiate(c[0], var), differentiate(c[1], var));
    case Kind::sub:
      return sub(differentiate(c[0], var), differentiate(c[1], var));
    case Kind::neg:
      return neg(differentiate(c[0], var));
    case Kind::mul:
      return add(mul(differentiate(c[0], var), c[1]), mul(c[0], differentiate(c[1], var)));
    case Kind::div: {
      Expr da = differentiate(c[0], var);
      Expr db = differentiate(c[1], var);
      if (db->is_constant(0.0)) return div(da, c[1]);
      return div(sub(mul(da, c[1]), mul(c[0], db)), pow(c[1], 2));
    }
    case Kind::pow: {
      const int k = e->index();
      return mul(mul(constant(static_cast<double>(k)), pow(c[0], k - 1)), differentiate(c[0], var));
    }
    case Kind::sin:
      return mul(cos(c[0]), differentiate(c[0], var));
    case Kind::cos:
      return neg(mul(sin(c[0]), differentiate(c[0], var)));
    case Kind::exp:
      return mul(e, differentiate(c[0], var));
    case Kind::log:
      return div(differentiate(c[0], var), c[0]);
  }
  throw InvariantError("differentiate: unknown node kind");
}

namespace {

double checked_log(double a) {
  if (!(a > 0.0)) throw DomainError("log of nonpositive argument");
  return std::log(a);
}

double checked_div(double a, double b) {
  if (b == 0.0) throw DomainError("division by zero");
  return a / b;
}

}  // namespace

double evaluate(const Expr& e, std::span<const double> point) {
  const auto& c = e->children();
  switch (e->kind()) {
    case Kind::constant:
      return e->value();
    case Kind::variable:
      if (static_cast<std::size_t>(e->index()) >= point.size())
        throw std::invalid_argument("point has fewer coordinates than the expression uses");
      return point[static_cast<std::size_t>(e->index())];
    case Kind::add:
      return evaluate(c[0], point) + evaluate(c[1], point);
    case Kind::sub:
      return evaluate(c[0], point) - evaluate(c[1], point);
    case Kind::mul:
      return evaluate(c[0], point) * evaluate(c[1], point);
    case Kind::div:
      return checked_div(evaluate(c[0], point), evaluate(c[1], point));
    case Kind::pow:
      return ipow(evaluate(c[0], point), e->index());
    case Kind::neg:
      return -evaluate(c[0], point);
    case Kind::sin:
      return std::sin(evaluate(c[0], point));
    case Kind::cos:
      return std::cos(evaluate(c[0], point));
    case Kind::exp:
      return std::exp(evaluate(c[0], point));
    case Kind::log:
      return checked_log(evaluate(c[0], point));
  }
  throw InvariantError("evaluate: unknown node kind");
}

// ---------------------------------------------------------------------------
// Printing

namespace {

int precedence(const Expr& e) {
  switch (e->kind()) {
    case Kind::add:
    case Kind::sub:
      return 1;
    case Kind::mul:
    case Kind::div:
      return 2;
    case Kind::neg:
      return 3;
    case Kind::pow:
      return 4;
    case Kind::constant:
      return e->value() < 0.0 || std::signbit(e->value()) ? 3 : 5;
    default:
      return 5;
  }
}

std::string format_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void print(const Expr& e, std::span<const std::string> names, std::string& out);

void print_child(const Expr& child, int min_prec, std::span<const std::string> names, std::string& out) {
  if (precedence(child) < min_prec) {
    out += '(';
    print(child, names, out);
    out += ')';
  } else {
    print(child, names, out);
  }
}

void print(const Expr& e, std::span<const std::string> names, std::string& out) {
  const auto& c = e->children();
  switch (e->kind()) {
    case Kind::constant:
      if (std::signbit(e->value())) {
        out += "-";
        out += format_number(-e->value());
      } else {
        out += format_number(e->value());
      }
      return;
    case Kind::variable: {
      const auto i = static_cast<std::size_t>(e->index());
      if (i >= names.size()) throw std::invalid_argument("to_string: missing variable name");
      out += names[i];
      return;
    }
    case Kind::add:
      print_child(c[0], 1, names, out);
      out += " + ";
      print_child(c[1], 2, names, out);
      return;
    case Kind::sub:
      print_child(c[0], 1, names, out);
      out += " - ";
      print_child(c[1], 2, names, out);
      return;
    case Kind::mul:
      print_child(c[0], 2, names, out);
      out += "*";
      print_child(c[1], 3, names, out);
      return;
    case Kind::div:
      print_child(c[0], 2, names, out);
      out += "/";
      print_child(c[1], 3, names, out);
      return;
    case Kind::neg:
      out += "-";
      print_child(c[0], 3, names, out);
      return;
    case Kind::pow:
      print_child(c[0], 5, names, out);
      out += "^" + std::to_string(e->index());
      return;
    case Kind::sin:
    case Kind::cos:
    case Kind::exp:
    case Kind::log: {
      static constexpr std::array<const char*, 4> fname{"sin(", "cos(", "exp(", "log("};
      out += fname[static_cast<int>(e->kind()) - static_cast<int>(Kind::sin)];
      print(c[0], names, out);
      out += ")";
      return;
    }
  }
}

}  // namespace

std::string to_string(const Expr& e, std::span<const std::string> var_names) {
  std::string out;
  print(e, var_names, out);
  return out;
}

int max_variable(const Expr& e) {
  int m = e->kind() == Kind::variable ? e->index() : -1;
  for (const auto& c : e->children()) m = std::max(m, max_variable(c));
  return m;
}

std::size_t node_count(const Expr& e) {
  std::size_t n = 1;
  for (const auto& c : e->children()) n += node_count(c);
  return n;
}

bool equal(const Expr& a, const Expr& b) {
  if (a == b) return true;
  if (a->kind() != b->kind() || a->index() != b->index() || a->children().size() != b->children().size())
    return false;
  if (a->kind() == Kind::constant && a->value() != b->value()) return false;
  for (std::size_t i = 0; i < a->children().size(); ++i)
    if (!equal(a->children()[i], b->children()[i])) return false;
  return true;
}

// ---------------------------------------------------------------------------
// Program

Program::Program(const Expr& e) {
  emit(e, 1);
  max_var_ = max_variable(e);
}

void Program::emit(const Expr& e, int depth) {
  max_depth_ = std::max(max_depth_, depth);
  const auto& c = e->children();
  switch (e->kind()) {
    case Kind::constant:
      code_.push_back({Op::push_const, 0, e->value()});
      return;
    case Kind::variable:
      code_.push_back({Op::push_var, e->index(), 0.0});
      return;
    case Kind::add:
    case Kind::sub:
    case Kind::mul:
    case Kind::div:
      emit(c[0], depth);
      emit(c[1], depth + 1);
      code_.push_back({static_cast<Op>(static_cast<int>(Op::add) + static_cast<int>(e->kind()) -
                                       static_cast<int>(Kind::add)),
                       0, 0.0});
      return;
    case Kind::pow:
      emit(c[0], depth);
      code_.push_back({Op::pow, e->index(), 0.0});
      return;
    case Kind::neg:
      emit(c[0], depth);
      code_.push_back({Op::neg, 0, 0.0});
      return;
    case Kind::sin:
      emit(c[0], depth);
      code_.push_back({Op::sin, 0, 0.0});
      return;
    case Kind::cos:
      emit(c[0], depth);
      code_.push_back({Op::cos, 0, 0.0});
      return;
    case Kind::exp:
      emit(c[0], depth);
      code_.push_back({Op::exp, 0, 0.0});
      return;
    case Kind::log:
      emit(c[0], depth);
      code_.push_back({Op::log, 0, 0.0});
      return;
  }
}

double Program::operator()(std::span<const double> point) const {
  if (is_constant()) return code_[0].value;
  if (max_var_ >= 0 && static_cast<std::size_t>(max_var_) >= point.size())
    throw std::invalid_argument("point has fewer coordinates than the expression uses");

  constexpr int kInline = 32;
  std::array<double, kInline> inline_stack{};
  std::vector<double> heap_stack;
  double* stack = inline_stack.data();
  if (max_depth_ > kInline) {
    heap_stack.resize(static_cast<std::size_t>(max_depth_));
    stack = heap_stack.data();
  }

  int top = -1;
  for (const Instr& in : code_) {
    switch (in.op) {
      case Op::push_const:
        stack[++top] = in.value;
        break;
      case Op::push_var:
        stack[++top] = point[static_cast<std::size_t>(in.arg)];
        break;
      case Op::add:
        stack[top - 1] += stack[top];
        --top;
        break;
      case Op::sub:
        stack[top - 1] -= stack[top];
        --top;
        break;
      case Op::mul:
        stack[top - 1] *= stack[top];
        --top;
        break;
      case Op::div:
        stack[top - 1] = checked_div(stack[top - 1], stack[top]);
        --top;
        break;
      case Op::pow:
        stack[top] = ipow(stack[top], in.arg);
        break;
      case Op::neg:
        stack[top] = -stack[top];
        break;
      case Op::sin:
        stack[top] = std::sin(stack[top]);
        break;
      case Op::cos:
        stack[top] = std::cos(stack[top]);
        break;
      case Op::exp:
        stack[top] = std::exp(stack[top]);
        break;
      case Op::log:
        stack[top] = checked_log(stack[top]);
        break;
    }
  }
  return stack[0];
}

std::vector<std::string> numbered_names(std::string_view prefix, int count) {
  std::vector<std::string> names;
  names.reserve(static_cast<std::size_t>(count));
  for (int i = 1; i <= count; ++i) names.push_back(std::string(prefix) + std::to_string(i));
  return names;
}

}  // namespace conjpt::expr
