#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <random>

#include "qie/convolve.hpp"
#include "qie/random.hpp"
#include "qie/verify.hpp"

using namespace qie;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {
const GridSpec kGrid = make_grid(20.0, 4096);
}

TEST_CASE("plan pads to the next power of two past 2n-1") {
  ConvolutionPlan plan(make_grid(20.0, 4096));
  CHECK(plan.padded_length() == 8192);
  ConvolutionPlan small(make_grid(1.0, 48));
  CHECK(small.padded_length() == 128);
}

TEST_CASE("convolving with zero gives zero") {
  GridFunction K = sample(parse("exp(-abs(x))"), kGrid);
  GridFunction zero = sample(parse("0"), kGrid);
  GridFunction out = convolve_fft(K, zero);
  CHECK(norm_linf(out) == 0.0);
}

TEST_CASE("grid mismatch is rejected") {
  GridFunction K = sample(parse("exp(-x^2)"), kGrid);
  GridFunction f = sample(parse("exp(-x^2)"), make_grid(10.0, 4096));
  CHECK_THROWS_AS(convolve_fft(K, f), GridError);
  CHECK_THROWS_AS(convolve_direct(K, f), GridError);
}

// h * (1/h) normalization: the total mass of the output is the product of
// the input masses, exactly, whenever the output support fits the window.
TEST_CASE("mass conservation") {
  GridFunction K = sample(parse("exp(-x^2)"), kGrid);
  GridFunction f = sample(parse("exp(-(x-1)^2)"), kGrid);
  GridFunction out = convolve_fft(K, f);
  const double h = kGrid.spacing;
  auto plain_sum = [&](const GridFunction& g) {
    double s = 0.0;
    for (double v : g.values()) s += v;
    return s * h;
  };
  double lhs = plain_sum(out);
  double rhs = plain_sum(K) * plain_sum(f);
  CHECK_THAT(lhs, WithinRel(rhs, 1e-12));
}

// A narrow normalized kernel acts as an approximate identity with O(eps^2)
// error; this is the grid-representable stand-in for a unit impulse at 0.
TEST_CASE("narrow kernel approximates the identity") {
  const double eps = 0.04;
  GridFunction K = sample(parse("exp(-(x/0.04)^2)"), kGrid);
  GridFunction f = sample(parse("exp(-x^2)"), kGrid);
  double mass = norm_l1(K);  // K > 0
  GridFunction out = convolve_fft((1.0 / mass) * K, f);
  double worst = 0.0;
  for (int i = 0; i < kGrid.points; ++i) worst = std::max(worst, std::fabs(out[i] - f[i]));
  CHECK(worst <= 1e-3);  // (eps^2/4) max|f''| plus grid error
  (void)eps;
}

TEST_CASE("gaussian times gaussian has a closed form") {
  GridFunction g = sample(parse("exp(-x^2)"), kGrid);
  GridFunction out = convolve_fft(g, g);
  double worst = 0.0;
  for (int i = 0; i < kGrid.points; ++i) {
    double x = kGrid.node(i);
    double exact = std::sqrt(std::numbers::pi / 2.0) * std::exp(-0.5 * x * x);
    worst = std::max(worst, std::fabs(out[i] - exact));
  }
  INFO("max deviation " << worst);
  CHECK(worst <= 1e-6);

  GridFunction direct = convolve_direct(g, g);
  double diff = 0.0;
  for (int i = 0; i < kGrid.points; ++i)
    diff = std::max(diff, std::fabs(out[i] - direct[i]));
  CHECK(diff <= 1e-10);
}

TEST_CASE("fft and direct summation agree on random pairs") {
  VerifyOptions opts;
  opts.seed = 2024;
  PropertyResult r = fft_direct_sweep(opts, 50, 20.0, 512);
  INFO("worst difference " << r.worst);
  CHECK(r.pass);
}

TEST_CASE("bilinearity") {
  std::mt19937_64 rng(5);
  GridSpec grid = make_grid(10.0, 512);
  for (int trial = 0; trial < 10; ++trial) {
    GridFunction K1 = gaussian_mixture(grid, rng);
    GridFunction K2 = gaussian_mixture(grid, rng);
    GridFunction f = gaussian_mixture(grid, rng);
    double a = 0.7, b = -1.3;
    GridFunction lhs = convolve_fft(a * K1 + b * K2, f);
    GridFunction rhs = a * convolve_fft(K1, f) + b * convolve_fft(K2, f);
    double scale = norm_linf(lhs) + norm_linf(rhs);
    for (int i = 0; i < grid.points; ++i)
      CHECK_THAT(lhs[i] - rhs[i], WithinAbs(0.0, 1e-12 * scale));
  }
}

TEST_CASE("commutativity") {
  std::mt19937_64 rng(6);
  GridSpec grid = make_grid(10.0, 512);
  for (int trial = 0; trial < 10; ++trial) {
    GridFunction K = gaussian_mixture(grid, rng);
    GridFunction f = gaussian_mixture(grid, rng);
    GridFunction ab = convolve_fft(K, f);
    GridFunction ba = convolve_fft(f, K);
    GridFunction dab = convolve_direct(K, f);
    GridFunction dba = convolve_direct(f, K);
    for (int i = 0; i < grid.points; ++i) {
      CHECK_THAT(ab[i] - ba[i], WithinAbs(0.0, 1e-11));
      CHECK_THAT(dab[i] - dba[i], WithinAbs(0.0, 1e-11));
    }
  }
}

TEST_CASE("young defects") {
  SECTION("zero input gives zero defect against a zero bound") {
    GridFunction K = sample(parse("exp(-abs(x))"), kGrid);
    GridFunction zero = sample(parse("0"), kGrid);
    YoungDefect d = young_defect(K, zero);
    CHECK(d.l2_defect == 0.0);
    CHECK(d.deriv_defect == 0.0);
  }
  SECTION("exponential kernel and gaussian") {
    GridFunction K = sample(parse("exp(-abs(x))"), kGrid);
    GridFunction f = sample(parse("exp(-x^2)"), kGrid);
    CHECK_THAT(norm_l1(K), WithinAbs(2.0, 1e-3));  // bound factor cross-check
    YoungDefect d = young_defect(K, f);
    CHECK(d.l2_defect < 0.0);
    CHECK(d.deriv_defect < 0.0);
  }
  SECTION("random sweep stays within tolerance") {
    VerifyOptions opts;
    opts.seed = 88;
    PropertyResult r = young_sweep(opts, 40);
    INFO("worst normalized defect " << r.worst);
    CHECK(r.pass);
  }
}

// Wraparound inflates the convolution mass of spread-out inputs, so the
// periodic mode must trip the Young check while the padded mode does not.
TEST_CASE("circular fault injection is detected") {
  GridFunction one = constant(kGrid, 1.0);
  YoungDefect padded = young_defect(one, one, ConvolutionMode::zero_padded);
  YoungDefect cyclic = young_defect(one, one, ConvolutionMode::periodic);
  double bound = norm_l1(one) * norm_l2(one);
  CHECK(padded.l2_defect < 0.0);
  CHECK(cyclic.l2_defect > 1e-6 * bound);

  VerifyOptions faulty;
  faulty.seed = 88;
  faulty.mode = ConvolutionMode::periodic;
  CHECK_FALSE(young_sweep(faulty, 40).pass);
  CHECK_FALSE(fft_direct_sweep(faulty, 10, 20.0, 512).pass);
}

TEST_CASE("shared plans are reusable") {
  ConvolutionPlan plan(kGrid);
  GridFunction K = sample(parse("exp(-x^2)"), kGrid);
  GridFunction f = sample(parse("exp(-(x-2)^2)"), kGrid);
  GridFunction with_plan = convolve_fft(K, f, plan);
  GridFunction without = convolve_fft(K, f);
  for (int i = 0; i < kGrid.points; ++i) CHECK(with_plan[i] == without[i]);
}
