#include <doctest.h>

#include <cmath>
#include <string>
#include <vector>

#include "conjpt/errors.hpp"
#include "conjpt/expr.hpp"

namespace ex = conjpt::expr;

namespace {

const std::vector<std::string> xy{"x", "y"};

double eval2(const ex::Expr& e, double x, double y) {
  const double pt[2] = {x, y};
  return ex::evaluate(e, pt);
}

// Central difference of the tree evaluator; independent of `differentiate`.
double numeric_partial(const ex::Expr& e, double x, double y, int var) {
  const double h = 1e-5;
  auto at = [&](double t) { return var == 0 ? eval2(e, x + t, y) : eval2(e, x, y + t); };
  return (8.0 * (at(h) - at(-h)) - (at(2 * h) - at(-2 * h))) / (12.0 * h);
}

}  // namespace

TEST_CASE("parse and evaluate respects precedence and associativity") {
  CHECK(eval2(ex::parse("1 + 2 * 3", xy), 0, 0) == doctest::Approx(7));
  CHECK(eval2(ex::parse("2 ^ 3 ^ 2", xy), 0, 0) == doctest::Approx(64));
  CHECK(eval2(ex::parse("-x^2", xy), 3, 0) == doctest::Approx(-9));
  CHECK(eval2(ex::parse("x - y - 1", xy), 5, 2) == doctest::Approx(2));
  CHECK(eval2(ex::parse("x / y / 2", xy), 8, 2) == doctest::Approx(2));
  CHECK(eval2(ex::parse("sin(pi/2) + cos(0) + exp(0) + log(1)", xy), 0, 0) == doctest::Approx(3));
  CHECK(eval2(ex::parse("1.5e1 + .5", xy), 0, 0) == doctest::Approx(15.5));
}

TEST_CASE("parse errors carry offsets") {
  try {
    ex::parse("x + * y", xy);
    FAIL("expected ParseError");
  } catch (const conjpt::ParseError& e) {
    CHECK(e.offset() == 4);
  }
  CHECK_THROWS_AS(ex::parse("x ^ 0.5", xy), conjpt::ParseError);
  CHECK_THROWS_AS(ex::parse("z + 1", xy), conjpt::ParseError);
  CHECK_THROWS_AS(ex::parse("sin(x", xy), conjpt::ParseError);
  try {
    ex::parse("x +", xy);
    FAIL("expected ParseError");
  } catch (const conjpt::ParseError& e) {
    CHECK(e.offset() == 3);
  }
  const std::vector<std::string> dup{"x", "x"};
  CHECK_THROWS_AS(ex::parse("x", dup), std::invalid_argument);
}

TEST_CASE("domain errors on log and division") {
  CHECK_THROWS_AS(eval2(ex::parse("log(x)", xy), -1, 0), conjpt::DomainError);
  CHECK_THROWS_AS(eval2(ex::parse("1 / x", xy), 0, 0), conjpt::DomainError);
}

TEST_CASE("symbolic derivatives agree with finite differences of the evaluator") {
  const char* cases[] = {
      "sin(x) * cos(y) + x^3 * y",
      "exp(x * y) / (1 + x^2)",
      "log(2 + x^2 + y^2) - y^4",
      "cos(x + 0.5 * sin(x + y))",
      "(x - y)^5 / 7",
  };
  for (const char* text : cases) {
    const ex::Expr e = ex::parse(text, xy);
    for (double x : {-0.7, 0.3, 1.1})
      for (double y : {-0.4, 0.9}) {
        for (int var = 0; var < 2; ++var) {
          const ex::Expr d = ex::differentiate(e, var);
          CHECK(eval2(d, x, y) == doctest::Approx(numeric_partial(e, x, y, var)).epsilon(1e-7));
          for (int var2 = 0; var2 < 2; ++var2) {
            const ex::Expr dd = ex::differentiate(d, var2);
            CHECK(eval2(dd, x, y) == doctest::Approx(numeric_partial(d, x, y, var2)).epsilon(1e-7));
          }
        }
      }
  }
}

TEST_CASE("simplifier folds constants and identities") {
  CHECK(ex::equal(ex::parse("0 * sin(x) + 1 * y", xy), ex::variable(1)));
  CHECK(ex::equal(ex::parse("x^1", xy), ex::variable(0)));
  CHECK(ex::parse("2 * 3 + 1", xy)->is_constant(7.0));
  CHECK(ex::differentiate(ex::parse("y^2", xy), 0)->is_constant(0.0));
}

TEST_CASE("to_string round trips through the parser") {
  const char* cases[] = {"-x^2 + 3 * y", "sin(x - (-2)) / (1 + y^2)", "exp(-x) * x^3 - y", "2 ^ 3 ^ 2 * x"};
  for (const char* text : cases) {
    const ex::Expr e = ex::parse(text, xy);
    const ex::Expr back = ex::parse(ex::to_string(e, xy), xy);
    for (double x : {-1.3, 0.2})
      for (double y : {0.4, 2.0}) CHECK(eval2(back, x, y) == doctest::Approx(eval2(e, x, y)).epsilon(1e-14));
  }
}

TEST_CASE("compiled program matches the tree evaluator") {
  const ex::Expr e = ex::parse("sin(x) * exp(-y^2) + log(3 + x) / (2 - cos(y))", xy);
  const ex::Program prog(e);
  for (double x : {-1.0, 0.0, 2.5})
    for (double y : {-2.0, 0.7}) {
      const double pt[2] = {x, y};
      CHECK(prog(pt) == doctest::Approx(ex::evaluate(e, pt)).epsilon(1e-15));
    }
  CHECK(ex::Program(ex::constant(4.0)).is_constant());
}

TEST_CASE("numbered names") {
  const auto names = ex::numbered_names("z", 3);
  REQUIRE(names.size() == 3);
  CHECK(names[0] == "z1");
  CHECK(names[2] == "z3");
}
