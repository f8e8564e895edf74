#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "qie/sensitivity.hpp"

using namespace qie;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

ProblemSpec reference_problem() {
  nlohmann::json j = {
      {"N", 1},
      {"grid", {{"L", 20.0}, {"n", 4096}}},
      {"kernels", {"0.01*exp(-abs(x))"}},
      {"multipliers", {"1"}},
      {"initial", {"0.01*exp(-x^2)"}},
      {"g", {"u1^2"}},
      {"rho", 1.0},
  };
  return problem_from_json(j);
}

std::vector<Expr> scaled_square(double factor) {
  std::ostringstream os;
  os.precision(17);
  os << factor << "*u1^2";
  return {parse(os.str())};
}

}  // namespace

TEST_CASE("C1 distance on the ball") {
  SECTION("identical nonlinearities") {
    std::vector<Expr> g{parse("u1^2")};
    CHECK(c1_distance(g, g, 1.0) == 0.0);
  }
  SECTION("relative scaling of the square") {
    // ||u1^2 - (1+eps) u1^2||_C1([-1,1]) = eps (max z^2 + max |2z|) = 3 eps
    std::vector<Expr> g1{parse("u1^2")};
    for (double eps : {0.3, 0.01}) {
      std::vector<Expr> g2 = scaled_square(1.0 + eps);
      CHECK_THAT(c1_distance(g1, g2, 1.0), WithinRel(3.0 * eps, 1e-9));
    }
  }
  SECTION("cubic perturbation") {
    // ||eps u1^3||_C1([-1,1]) = eps (1 + 3) = 4 eps
    std::vector<Expr> g1{parse("u1^2")};
    std::vector<Expr> g2{parse("u1^2+0.125*u1^3")};
    CHECK_THAT(c1_distance(g1, g2, 1.0), WithinRel(0.5, 1e-9));
  }
}

TEST_CASE("identical nonlinearities compare to zero") {
  ProblemSpec p = reference_problem();
  SensitivityReport r = compare_g(p, p.nonlinearity, p.nonlinearity, 1e-10);
  CHECK(r.g_distance == 0.0);
  CHECK(r.lhs == 0.0);
  CHECK(r.rhs == 0.0);
  CHECK(r.margin == 0.0);
  CHECK(r.within_bound);
}

TEST_CASE("the continuity bound holds on the reference pair") {
  ProblemSpec p = reference_problem();
  std::vector<Expr> g2 = scaled_square(1.01);
  SensitivityReport r = compare_g(p, p.nonlinearity, g2, 1e-12);

  CHECK(r.within_bound);
  CHECK(r.lhs > 0.0);
  CHECK(r.margin > 0.0);
  CHECK(r.lhs < r.rhs);
  CHECK(r.notes.empty());  // intermediate eta bound held

  // one sigma covers both maps and stays contractive
  CHECK(r.sigma_used < 1.0);
  CHECK(r.M_used >= 1.05 * 1.01 * 1.9);

  // ||u1 - u2|| computed via the full solutions agrees with the u_p route
  // (the u route subtracts O(1e-2) fields to reach an O(1e-10) difference,
  // so agreement is limited by that cancellation)
  double via_u = norm_h1(r.solution1.u - r.solution2.u);
  CHECK_THAT(via_u, WithinRel(r.lhs, 1e-4));

  // the bound coincides with c_a/(1-sigma) (||u0||+1)^2 Q g_distance
  CHECK_THAT(r.rhs, WithinRel(r.p1p2_rhs, 1e-12));

  // eta route stayed within its own estimate
  CHECK(r.eta_defect <= r.eta_bound + 1e-9);

  // traces of both solves are attached
  CHECK_FALSE(r.solution1.trace.update_norm.empty());
  CHECK_FALSE(r.solution2.trace.update_norm.empty());
}

TEST_CASE("the deviation scales linearly in the perturbation size") {
  ProblemSpec p = reference_problem();
  std::vector<double> eps{0.02, 0.01, 0.005};
  std::vector<double> lhs, rhs;
  for (double e : eps) {
    SensitivityReport r = compare_g(p, p.nonlinearity, scaled_square(1.0 + e), 1e-12);
    CHECK(r.within_bound);
    lhs.push_back(r.lhs);
    rhs.push_back(r.rhs);
  }
  // rhs is linear through g_distance; the shared M (the max over the pair)
  // adds a small eps-dependence of its own through sigma
  CHECK_THAT(rhs[0] / rhs[1], WithinRel(2.0, 1e-2));
  CHECK_THAT(rhs[1] / rhs[2], WithinRel(2.0, 1e-2));
  CHECK(lhs[0] / lhs[1] > 1.8);
  CHECK(lhs[0] / lhs[1] < 2.2);
  CHECK(lhs[1] / lhs[2] > 1.8);
  CHECK(lhs[1] / lhs[2] < 2.2);
}

TEST_CASE("comparison is symmetric in the two nonlinearities") {
  ProblemSpec p = reference_problem();
  std::vector<Expr> g2 = scaled_square(1.02);
  SensitivityReport fwd = compare_g(p, p.nonlinearity, g2, 1e-12);
  SensitivityReport rev = compare_g(p, g2, p.nonlinearity, 1e-12);
  CHECK_THAT(fwd.lhs, WithinRel(rev.lhs, 1e-12));
  CHECK_THAT(fwd.g_distance, WithinRel(rev.g_distance, 1e-12));
}

TEST_CASE("comparison refuses uncertifiable instances") {
  ProblemSpec p = reference_problem();
  p.kernels[0] = parse("exp(-abs(x))");  // smallness condition fails
  CHECK_THROWS_AS(compare_g(p, p.nonlinearity, scaled_square(1.01), 1e-10),
                  CertificationError);
}

TEST_CASE("sensitivity report serializes") {
  ProblemSpec p = reference_problem();
  SensitivityReport r = compare_g(p, p.nonlinearity, scaled_square(1.01), 1e-10);
  nlohmann::json j = to_json(r);
  for (const char* key :
       {"g_distance", "lhs", "rhs", "margin", "sigma_used", "M_used", "p1p2_rhs",
        "within_bound", "iterations", "residuals"})
    CHECK(j.contains(key));
  CHECK(j["within_bound"].get<bool>());
}
