#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "qie/expr.hpp"
#include "qie/verify.hpp"

using namespace qie;

TEST_CASE("single tokens parse to the expected nodes") {
  CHECK(parse("x") == Expr::x());
  CHECK(parse("u1") == Expr::u(1));
  CHECK(parse("u12") == Expr::u(12));
  CHECK(parse("3.5") == Expr::number(3.5));
  CHECK(parse("1e-3") == Expr::number(1e-3));
}

TEST_CASE("multiplication binds tighter than addition") {
  Expr e = parse("2+3*x");
  REQUIRE(e.kind() == Expr::Kind::binary);
  CHECK(e.binary_op() == Expr::BinaryOp::add);
  CHECK(e.lhs() == Expr::number(2.0));
  Expr rhs = e.rhs();
  REQUIRE(rhs.kind() == Expr::Kind::binary);
  CHECK(rhs.binary_op() == Expr::BinaryOp::mul);
  CHECK(rhs.lhs() == Expr::number(3.0));
  CHECK(rhs.rhs() == Expr::x());
}

TEST_CASE("power binds tighter than unary minus") {
  Expr e = parse("exp(-x^2)");
  REQUIRE(e.kind() == Expr::Kind::unary);
  CHECK(e.unary_op() == Expr::UnaryOp::exp);
  Expr arg = e.lhs();
  REQUIRE(arg.kind() == Expr::Kind::unary);
  CHECK(arg.unary_op() == Expr::UnaryOp::neg);
  Expr p = arg.lhs();
  REQUIRE(p.kind() == Expr::Kind::binary);
  CHECK(p.binary_op() == Expr::BinaryOp::pow);
  CHECK(p.lhs() == Expr::x());
  CHECK(p.rhs() == Expr::number(2.0));
}

TEST_CASE("exponent restrictions") {
  CHECK_THROWS_MATCHES(parse("x^(-1)"), ParseError, Catch::Matchers::Predicate<ParseError>(
      [](const ParseError& e) { return e.position() == 2; }));
  CHECK_THROWS_AS(parse("x^-1"), ParseError);
  CHECK_THROWS_AS(parse("x^1.5"), ParseError);
  CHECK_THROWS_AS(parse("x^u1"), ParseError);
  // constant exponents fold, and chained ^ associates to the right
  CHECK(parse("x^(3)") == parse("x^3"));
  CHECK(parse("2^3^2") == Expr::binary(Expr::BinaryOp::pow, Expr::number(2.0),
                                        Expr::number(9.0)));
}

TEST_CASE("parse errors") {
  CHECK_THROWS_AS(parse(""), ParseError);
  CHECK_THROWS_AS(parse("   "), ParseError);
  CHECK_THROWS_AS(parse("(x"), ParseError);
  CHECK_THROWS_AS(parse("x)"), ParseError);
  CHECK_THROWS_AS(parse("y"), ParseError);
  CHECK_THROWS_AS(parse("foo(x)"), ParseError);
  CHECK_THROWS_AS(parse("u0"), ParseError);  // u-indices start at 1
  CHECK_THROWS_AS(parse("2+"), ParseError);
  CHECK_THROWS_AS(parse("exp x"), ParseError);
}

TEST_CASE("evaluation") {
  CHECK(eval(parse("2+3"), {}) == 5.0);
  CHECK(eval(parse("exp(0)"), {}) == 1.0);
  CHECK(eval(parse("u1*u2"), {{"u1", 3.0}, {"u2", -2.0}}) == -6.0);
  CHECK(eval(parse("2^10"), {}) == 1024.0);
  CHECK(eval(parse("0^0"), {}) == 1.0);
  CHECK(eval(parse("abs(-3)"), {}) == 3.0);
  CHECK(eval(parse("sign(-2)"), {}) == -1.0);
  CHECK(eval(parse("sign(0)"), {}) == 0.0);
  CHECK_THAT(eval(parse("tanh(1)"), {}), Catch::Matchers::WithinULP(std::tanh(1.0), 2));
}

TEST_CASE("evaluation errors never leak NaN or infinity") {
  CHECK_THROWS_AS(eval(parse("x"), {}), EvalError);               // unbound
  CHECK_THROWS_AS(eval(parse("u2"), {{"u1", 1.0}}), EvalError);   // unbound
  CHECK_THROWS_AS(eval(parse("log(0)"), {}), EvalError);
  CHECK_THROWS_AS(eval(parse("log(x)"), {{"x", -1.0}}), EvalError);
  CHECK_THROWS_AS(eval(parse("sqrt(x)"), {{"x", -1.0}}), EvalError);
  CHECK_THROWS_AS(eval(parse("1/x"), {{"x", 0.0}}), EvalError);
  CHECK_THROWS_AS(eval(parse("x/x"), {{"x", 0.0}}), EvalError);   // 0/0
  CHECK_THROWS_AS(eval(parse("exp(1000)"), {}), EvalError);       // overflow
  CHECK_THROWS_AS(eval(parse("exp(x^2)"), {{"x", 100.0}}), EvalError);
}

TEST_CASE("domain errors name the offending subtree") {
  try {
    eval(parse("1+log(0-x)"), {{"x", 2.0}});
    FAIL("expected a domain error");
  } catch (const EvalError& e) {
    CHECK(e.subtree().find("log") != std::string::npos);
  }
}

TEST_CASE("differentiation identities") {
  CHECK(differentiate(parse("x^2"), "x") == parse("2*x"));
  CHECK(differentiate(parse("u1*u2"), "u1") == parse("u2"));
  CHECK(differentiate(parse("x"), "x") == Expr::number(1.0));
  CHECK(differentiate(parse("5"), "x") == Expr::number(0.0));
  CHECK(differentiate(parse("u1"), "u2") == Expr::number(0.0));

  // chain rule result is evaluation-equivalent to -2x exp(-x^2)
  Expr d = differentiate(parse("exp(-x^2)"), "x");
  for (double x : {-1.7, -0.3, 0.0, 0.4, 2.1}) {
    double expected = -2.0 * x * std::exp(-x * x);
    CHECK_THAT(eval(d, {{"x", x}}), Catch::Matchers::WithinAbs(expected, 1e-14));
  }
}

TEST_CASE("derivative of abs uses sign with sign(0) = 0") {
  Expr d = differentiate(parse("abs(x)"), "x");
  CHECK(eval(d, {{"x", 2.0}}) == 1.0);
  CHECK(eval(d, {{"x", -3.0}}) == -1.0);
  CHECK(eval(d, {{"x", 0.0}}) == 0.0);
}

TEST_CASE("simplification folds the trivial algebra") {
  CHECK(differentiate(parse("x+1"), "x") == Expr::number(1.0));        // t+0
  CHECK(differentiate(parse("3*x"), "x") == Expr::number(3.0));        // 0*t, 1*t
  CHECK(differentiate(parse("x^1"), "x") == Expr::number(1.0));        // t^0 fold
  CHECK(differentiate(parse("x^3"), "x") == parse("3*x^2"));           // t^1 inside
  CHECK(differentiate(parse("x/2"), "x") ==
        parse("2/2^2"));  // quotient rule with folded numerator
}

TEST_CASE("pretty printed trees reparse to the identical structure") {
  for (const char* src :
       {"x", "2+3*x", "exp(-x^2)", "(x+1)*(x-1)", "x-(x-1)", "1-(2-3)", "x/(u1/u2)",
        "-(-x)", "-x^2", "(-x)^2", "2*(3+x)^4", "sqrt(abs(x))", "tanh(x)*sign(u3)",
        "1/(1+exp(-x))", "x^0", "0*x+1*u2", "((x))"}) {
    Expr e = parse(src);
    Expr round = parse(to_string(e));
    INFO(src << " printed as " << to_string(e));
    CHECK(round == e);
  }
}

TEST_CASE("round trip holds for random trees") {
  std::mt19937_64 rng(777);
  for (int i = 0; i < 500; ++i) {
    Expr e = qie::detail::random_expr(rng, 5, 2);
    Expr round = parse(to_string(e));
    INFO("tree " << i << ": " << to_string(e));
    REQUIRE(round == e);
  }
}

TEST_CASE("printed derivatives reparse") {
  std::mt19937_64 rng(101);
  for (int i = 0; i < 200; ++i) {
    Expr e = qie::detail::random_expr(rng, 4, 2);
    for (int var : {0, 1, 2}) {
      Expr d = differentiate(e, var);
      CHECK(parse(to_string(d)) == d);
    }
  }
}

TEST_CASE("symbolic gradients match central finite differences") {
  VerifyOptions opts;
  opts.seed = 20250810;
  PropertyResult r = gradient_sweep(opts, 300);
  INFO(r.detail << ": worst " << r.worst);
  CHECK(r.pass);
}
