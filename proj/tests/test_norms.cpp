#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <random>

#include "qie/norms.hpp"
#include "qie/random.hpp"
#include "qie/verify.hpp"

using namespace qie;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {
const GridSpec kGrid = make_grid(20.0, 4096);
const double kPi = std::numbers::pi;
}  // namespace

TEST_CASE("norms of the zero function vanish") {
  GridFunction zero = sample(parse("0"), kGrid);
  CHECK(norm_l1(zero) == 0.0);
  CHECK(norm_l2(zero) == 0.0);
  CHECK(norm_linf(zero) == 0.0);
  CHECK(norm_h1(zero) == 0.0);
  CHECK(norm_w11(zero) == 0.0);
}

TEST_CASE("gaussian norms match the closed forms") {
  GridFunction f = sample(parse("exp(-x^2)"), kGrid);
  CHECK_THAT(norm_l2(f), WithinAbs(std::pow(kPi / 2.0, 0.25), 1e-6));
  CHECK_THAT(norm_l1(f), WithinAbs(std::sqrt(kPi), 1e-6));
  CHECK_THAT(norm_h1(f), WithinAbs(std::sqrt(2.0 * std::sqrt(kPi / 2.0)), 1e-4));
  // ||f'||_1 = int |-2x| e^{-x^2} dx = 2
  CHECK_THAT(norm_w11(f), WithinAbs(std::sqrt(kPi) + 2.0, 1e-4));
  // the node maximum sits at +-h/2
  CHECK_THAT(norm_linf(f), WithinAbs(1.0, 1e-4));
}

TEST_CASE("exponential kink norms match the closed forms") {
  GridFunction f = sample(parse("exp(-abs(x))"), kGrid);
  CHECK_THAT(norm_l2(f), WithinAbs(1.0, 1e-3));
  CHECK_THAT(norm_l1(f), WithinAbs(2.0, 1e-3));
  // no node at 0: the maximum is attained at the two center-adjacent nodes
  CHECK_THAT(norm_linf(f), WithinAbs(std::exp(-0.5 * kGrid.spacing), 1e-15));
  CHECK_THAT(norm_h1(f), WithinAbs(std::numbers::sqrt2, 2e-2));
  CHECK_THAT(norm_w11(f), WithinAbs(4.0, 2e-2));
}

TEST_CASE("vector norm adds component squares") {
  GridFunction f = sample(parse("exp(-x^2)"), kGrid);
  GridFunction zero = sample(parse("0"), kGrid);
  VectorGridFunction both(std::vector<GridFunction>{f, f});
  CHECK_THAT(norm_h1(both), WithinRel(std::numbers::sqrt2 * norm_h1(f), 1e-13));
  VectorGridFunction mixed(std::vector<GridFunction>{f, zero});
  CHECK_THAT(norm_h1(mixed), WithinRel(norm_h1(f), 1e-13));
  VectorGridFunction zeros(std::vector<GridFunction>{zero, zero});
  CHECK(norm_h1(zeros) == 0.0);
}

TEST_CASE("norm report keeps the order relations") {
  std::mt19937_64 rng(7);
  for (int i = 0; i < 50; ++i) {
    GridFunction f = gaussian_mixture(kGrid, rng);
    NormReport r = norm_report(f);
    CHECK(*r.h1 >= *r.l2);
    CHECK(*r.w11 >= *r.l1);
  }
}

TEST_CASE("C1 ball norm, one dimension") {
  SECTION("zero nonlinearity") {
    std::vector<Expr> g{parse("0")};
    CHECK(c1_norm_over_ball(g, 1.0).value == 0.0);
  }
  SECTION("identity has norm r + 1") {
    std::vector<Expr> g{parse("u1")};
    for (double r : {0.5, 1.0, 2.0}) {
      auto est = c1_norm_over_ball(g, r);
      CHECK_THAT(est.value, WithinRel(r + 1.0, 1e-12));
      CHECK_FALSE(est.lower_estimate);
    }
  }
  SECTION("square on the unit ball has norm 3") {
    std::vector<Expr> g{parse("u1^2")};
    auto est = c1_norm_over_ball(g, 1.0);
    CHECK_THAT(est.value, WithinRel(3.0, 1e-12));
  }
  SECTION("domain errors surface") {
    std::vector<Expr> g{parse("log(u1)")};
    CHECK_THROWS_AS(c1_norm_over_ball(g, 1.0), EvalError);
  }
}

TEST_CASE("C1 ball norm, two dimensions") {
  // g = (u1 + u2, u1 u2) over |z| <= r:
  //   max|u1+u2| = sqrt(2) r, partials 1 and 1
  //   max|u1 u2| = r^2/2,     partials each r
  const double r = 1.0;
  const double exact = std::numbers::sqrt2 * r + 2.0 + 0.5 * r * r + 2.0 * r;
  std::vector<Expr> g{parse("u1+u2"), parse("u1*u2")};
  BallNormOptions opts;
  opts.seed = 99;
  auto est = c1_norm_over_ball(g, r, opts);
  CHECK(est.lower_estimate);
  CHECK(est.value <= exact * (1.0 + 1e-9));
  CHECK(est.value >= exact * 0.995);
}

TEST_CASE("embedding ratio") {
  SECTION("sharp witness exp(-|x|)") {
    double ratio = embedding_ratio(sample(parse("exp(-abs(x))"), kGrid));
    CHECK_THAT(ratio, WithinAbs(1.0 / std::numbers::sqrt2, 2e-2));
  }
  SECTION("gaussian sits strictly below the constant") {
    double ratio = embedding_ratio(sample(parse("exp(-x^2)"), kGrid));
    CHECK_THAT(ratio, WithinAbs(1.0 / std::sqrt(2.0 * std::sqrt(kPi / 2.0)), 1e-3));
    CHECK(ratio < 1.0 / std::numbers::sqrt2);
  }
  SECTION("zero function is rejected") {
    CHECK_THROWS_AS(embedding_ratio(sample(parse("0"), kGrid)), GridError);
  }
  SECTION("non-decaying input is not certified") {
    EmbeddingCheck c = embedding_check(sample(parse("1"), kGrid), 1e-6);
    CHECK_FALSE(c.certified);
    CHECK(c.tail_fraction > 0.05);
  }
  SECTION("decaying input is certified") {
    EmbeddingCheck c = embedding_check(sample(parse("exp(-x^2)"), kGrid), 1e-6);
    CHECK(c.certified);
  }
}

TEST_CASE("algebra defect with c_a = sqrt(5/2)") {
  const double c_a = default_algebra_constant();
  GridFunction gauss = sample(parse("exp(-x^2)"), kGrid);
  GridFunction kink = sample(parse("exp(-abs(x))"), kGrid);

  SECTION("gaussian squared, with the analytic product norm") {
    CHECK(algebra_defect(gauss, gauss, c_a) < 0.0);
    // f*f = exp(-2x^2) has H1 norm sqrt(3/2 sqrt(pi))
    CHECK_THAT(norm_h1(gauss * gauss),
               WithinAbs(std::sqrt(1.5 * std::sqrt(kPi)), 2e-4));
  }
  SECTION("mixed pair") {
    CHECK(algebra_defect(gauss, kink, c_a) < 0.0);
  }
  SECTION("random pairs stay within tolerance") {
    std::mt19937_64 rng(11);
    for (int i = 0; i < 50; ++i) {
      GridFunction f = gaussian_mixture(kGrid, rng);
      GridFunction g = gaussian_mixture(kGrid, rng);
      CHECK(algebra_defect(f, g, c_a) <= 1e-3 * norm_h1(f) * norm_h1(g));
    }
  }
}

TEST_CASE("embedding property sweep") {
  VerifyOptions opts;
  opts.seed = 314;
  PropertyResult r = embedding_sweep(opts, 60);
  INFO("worst ratio " << r.worst);
  CHECK(r.pass);
}

TEST_CASE("algebra property sweep") {
  VerifyOptions opts;
  opts.seed = 314;
  PropertyResult r = algebra_sweep(opts, 60);
  INFO("worst normalized defect " << r.worst);
  CHECK(r.pass);
}
