#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <functional>
#include <random>
#include <sstream>

#include "srcurv/exprfield.hpp"

using namespace srcurv;
using namespace srcurv::exprfield;

namespace {

Vec pt(std::initializer_list<double> v) {
  Vec q(v.size());
  int i = 0;
  for (double x : v) q[i++] = x;
  return q;
}

}  // namespace

TEST_CASE("constants and basic identities") {
  Expr zero = parse("0", 2);
  CHECK(zero.eval(pt({3.0, -7.0}), {}) == 0.0);

  ScalarField f("sin(q1)*2", 1);
  CHECK(f.value(pt({0.0})) == doctest::Approx(0.0));
  CHECK(f.d1(0, pt({0.0})) == doctest::Approx(2.0));

  ScalarField g("exp(q2)", 2);
  CHECK(g.value(pt({0.0, 1.0})) == doctest::Approx(std::exp(1.0)).epsilon(1e-12));
}

TEST_CASE("polynomial and mixed derivatives") {
  ScalarField f("q1^2", 1);
  CHECK(f.d2(0, 0, pt({0.3})) == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(f.d2(0, 0, pt({-5.0})) == doctest::Approx(2.0).epsilon(1e-12));

  ScalarField c("cos(q1)", 1);
  CHECK(std::abs(c.d3(0, 0, 0, pt({0.0}))) < 1e-6);

  // ∂²/∂q1∂q2 exp(q1 q2) = (1 + q1 q2) exp(q1 q2) = 2e at (1,1)
  ScalarField h("exp(q1*q2)", 2);
  CHECK(h.d2(0, 1, pt({1.0, 1.0})) ==
        doctest::Approx(2.0 * std::exp(1.0)).epsilon(1e-10));
}

TEST_CASE("parser errors carry byte offsets") {
  CHECK_THROWS_AS(parse("sin(q1", 1), ParseError);
  CHECK_THROWS_AS(parse("q3", 2), ParseError);
  CHECK_THROWS_AS(parse("foo(q1)", 1), ParseError);
  CHECK_THROWS_AS(parse("sin(q1, q2)", 2), ParseError);
  CHECK_THROWS_AS(parse("1 + * 2", 1), ParseError);
  try {
    parse("q1 + unknown_name", 2);
    CHECK(false);
  } catch (const ParseError& e) {
    CHECK(e.offset() == 5);
  }
}

TEST_CASE("domain errors") {
  ScalarField f("log(q1)", 1);
  CHECK_THROWS_AS(f.value(pt({-1.0})), EvalError);
  ScalarField g("1/q1", 1);
  CHECK_THROWS_AS(g.value(pt({0.0})), EvalError);
  ScalarField s("sqrt(q1)", 1);
  CHECK_THROWS_AS(s.value(pt({-0.5})), EvalError);
}

TEST_CASE("parameters bind at evaluation") {
  std::map<std::string, double> params{{"a", 2.5}};
  ScalarField f("a*q1^2", 1, params);
  CHECK(f.value(pt({2.0})) == doctest::Approx(10.0));
  CHECK(f.d1(0, pt({2.0})) == doctest::Approx(10.0));
  CHECK_THROWS_AS(parse("b*q1", 1, params), ParseError);
}

TEST_CASE("round trip: parse(print(e)) structurally equals e") {
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<int> pick(0, 5);
  std::uniform_real_distribution<double> coef(-3.0, 3.0);
  // random nested expressions over two variables
  std::function<std::string(int)> gen = [&](int depth) -> std::string {
    if (depth == 0) {
      switch (pick(rng) % 3) {
        case 0: return "q1";
        case 1: return "q2";
        default: {
          std::ostringstream os;
          os.precision(17);
          os << std::abs(coef(rng));
          return os.str();
        }
      }
    }
    switch (pick(rng)) {
      case 0: return "(" + gen(depth - 1) + "+" + gen(depth - 1) + ")";
      case 1: return "(" + gen(depth - 1) + "-" + gen(depth - 1) + ")";
      case 2: return "(" + gen(depth - 1) + "*" + gen(depth - 1) + ")";
      case 3: return "sin(" + gen(depth - 1) + ")";
      case 4: return "-" + gen(depth - 1);
      default: return "tanh(" + gen(depth - 1) + ")";
    }
  };
  for (int trial = 0; trial < 50; ++trial) {
    Expr e = parse(gen(3), 2);
    Expr back = parse(e.print(), 2);
    CHECK(back.structurally_equal(e));
  }
}

TEST_CASE("tree derivative matches central differences for every builtin") {
  const char* exprs[] = {"sin(q1)",  "cos(q1)",  "exp(q1)",
                         "log(q1)",  "sqrt(q1)", "tanh(q1)",
                         "q1^3",     "q1^q2",    "q1/q2",
                         "sin(q1*q2) + exp(q2)*cos(q1)"};
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> uni(0.2, 2.0);
  for (const char* text : exprs) {
    ScalarField f(text, 2);
    for (int k = 0; k < 100; ++k) {
      Vec q = pt({uni(rng), uni(rng)});
      for (int var = 0; var < 2; ++var) {
        double h = 1e-6 * std::max(1.0, std::abs(q[var]));
        Vec qp = q, qm = q;
        qp[var] += h;
        qm[var] -= h;
        double fd = (f.value(qp) - f.value(qm)) / (2 * h);
        double ex = f.d1(var, q);
        CHECK(std::abs(fd - ex) <= 1e-6 * std::max(1.0, std::abs(ex)));
      }
    }
  }
}

TEST_CASE("mixed partials are symmetric") {
  ScalarField f("sin(q1*q2)*exp(q1) + q2^3*tanh(q1)", 2);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> uni(-1.5, 1.5);
  for (int k = 0; k < 20; ++k) {
    Vec q = pt({uni(rng), uni(rng)});
    CHECK(std::abs(f.d2(0, 1, q) - f.d2(1, 0, q)) < 1e-8);
  }
}

TEST_CASE("third derivatives by Richardson-extrapolated differences") {
  // f = q1^4: ∂³ = 24 q1
  ScalarField f("q1^4", 1);
  CHECK(f.d3(0, 0, 0, pt({0.7})) == doctest::Approx(24 * 0.7).epsilon(1e-7));
  // f = sin: ∂³ = −cos
  ScalarField s("sin(q1)", 1);
  CHECK(s.d3(0, 0, 0, pt({0.5})) ==
        doctest::Approx(-std::cos(0.5)).epsilon(1e-7));
}
