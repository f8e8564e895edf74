#pragma once

/*
 * Continuity of the solution in the nonlinearity: if u_j = u0 + u_{p,j} are
 * the certified fixed-point solutions for g_1, g_2 sharing one C^1 bound M
 * (hence one sigma), then
 *
 *   ||u_1 - u_2||_H1  <=  sigma / (2 M (1 - sigma)) * (||u0||_H1 + 1)
 *                         * ||g_1 - g_2||_C1(ball),
 *
 * which coincides with c_a/(1-sigma) * (||u0||+1)^2 * Q * ||g_1-g_2||_C1
 * through sigma = 2 c_a Q M (||u0||+1).
 */

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "qie/norms.hpp"
#include "qie/problem.hpp"
#include "qie/solver.hpp"

namespace qie {

// C^1(ball) norm of the componentwise difference g1 - g2.
inline double c1_distance(std::span<const Expr> g1, std::span<const Expr> g2, double radius,
                          const BallNormOptions& options = {}) {
  if (g1.size() != g2.size()) throw std::invalid_argument("component count mismatch");
  std::vector<Expr> diff;
  diff.reserve(g1.size());
  for (std::size_t m = 0; m < g1.size(); ++m)
    diff.push_back(Expr::binary(Expr::BinaryOp::sub, g1[m], g2[m]));
  return c1_norm_over_ball(diff, radius, options).value;
}

struct SensitivityReport {
  double g_distance = 0.0;  // ||g1 - g2||_C1(ball)
  double lhs = 0.0;         // ||u1 - u2||_H1
  double rhs = 0.0;         // continuity bound
  double margin = 0.0;      // rhs - lhs
  double sigma_used = 0.0;
  double M_used = 0.0;
  double p1p2_rhs = 0.0;      // c_a/(1-sigma) (||u0||+1)^2 Q * g_distance
  double eta_defect = 0.0;    // ||tau_{g1} u_{p,2} - u_{p,2}||
  double eta_bound = 0.0;     // c_a Q (||u0||+1)^2 * g_distance
  bool within_bound = false;  // lhs <= rhs + 1e-6 (1 + rhs)
  Certificate certificate;    // shared-M certificate covering both maps
  Solution solution1, solution2;
  std::vector<std::string> notes;
};

struct SensitivityOptions {
  std::uint64_t seed = 1;
  BallNormOptions ball;
};

inline SensitivityReport compare_g(const ProblemSpec& p, std::span<const Expr> g1,
                                   std::span<const Expr> g2, double tol,
                                   const SensitivityOptions& opts = {}) {
  if (int(g1.size()) != p.N || int(g2.size()) != p.N)
    throw std::invalid_argument("nonlinearity component count mismatch");

  ProblemSpec p1 = p;
  p1.nonlinearity.assign(g1.begin(), g1.end());
  ProblemSpec p2 = p;
  p2.nonlinearity.assign(g2.begin(), g2.end());

  // One M must bound both nonlinearities, so one sigma covers both maps.
  BallNormOptions ball = opts.ball;
  ball.seed = opts.seed;
  Certificate c1 = certify(p1, {.seed = opts.seed, .ball = ball});
  Certificate c2 = certify(p2, {.seed = opts.seed, .ball = ball});
  const double M_shared = std::max(c1.M, c2.M);
  p1.options.M_override = M_shared;
  p2.options.M_override = M_shared;
  c1 = certify(p1, {.seed = opts.seed, .ball = ball});
  c2 = certify(p2, {.seed = opts.seed, .ball = ball});
  if (!c1.ok() || !c2.ok())
    throw CertificationError("sensitivity comparison requires both instances certified "
                             "under the shared M");

  SensitivityReport report;
  report.M_used = M_shared;
  report.sigma_used = c1.sigma;
  report.certificate = c1;

  SolveOptions so;
  so.certificate = c1;
  report.solution1 = solve(p1, tol, 10000, so);
  so.certificate = c2;
  report.solution2 = solve(p2, tol, 10000, so);
  if (!report.solution1.converged || !report.solution2.converged)
    throw ConvergenceError("sensitivity comparison requires both solves to converge");

  // u0 cancels in u1 - u2.
  report.lhs = norm_h1(report.solution1.u_p - report.solution2.u_p);
  report.g_distance = c1_distance(g1, g2, c1.ball_radius, ball);

  const double w = c1.u0_h1 + 1.0;
  const double sigma = report.sigma_used;
  report.rhs = sigma / (2.0 * M_shared * (1.0 - sigma)) * w * report.g_distance;
  report.p1p2_rhs = p.options.c_a / (1.0 - sigma) * w * w * c1.Q * report.g_distance;
  report.margin = report.rhs - report.lhs;
  report.within_bound = report.lhs <= report.rhs + 1e-6 * (1.0 + report.rhs);

  // Intermediate estimate: one application of tau_{g1} at the second fixed
  // point must stay within c_a Q (||u0||+1)^2 ||g1-g2||_C1 of it.
  VectorGridFunction eta = apply_tau(p1, c1, report.solution2.u_p);
  report.eta_defect = norm_h1(eta - report.solution2.u_p);
  report.eta_bound = p.options.c_a * c1.Q * w * w * report.g_distance;
  if (report.eta_defect > report.eta_bound + 1e-6 * (1.0 + report.eta_bound))
    report.notes.push_back("intermediate bound violated: " +
                           std::to_string(report.eta_defect) + " > " +
                           std::to_string(report.eta_bound));
  return report;
}

inline nlohmann::json to_json(const SensitivityReport& r) {
  nlohmann::json j;
  j["g_distance"] = r.g_distance;
  j["lhs"] = r.lhs;
  j["rhs"] = r.rhs;
  j["margin"] = r.margin;
  j["sigma_used"] = r.sigma_used;
  j["M_used"] = r.M_used;
  j["p1p2_rhs"] = r.p1p2_rhs;
  j["eta_defect"] = r.eta_defect;
  j["eta_bound"] = r.eta_bound;
  j["within_bound"] = r.within_bound;
  j["iterations"] = {r.solution1.iterations, r.solution2.iterations};
  j["residuals"] = {r.solution1.residual, r.solution2.residual};
  j["certificate"] = to_json(r.certificate);
  j["notes"] = r.notes;
  return j;
}

inline std::string format_sensitivity(const SensitivityReport& r) {
  std::ostringstream os;
  os.precision(12);
  os << "sensitivity:\n";
  os << "  g_distance = " << r.g_distance << '\n';
  os << "  lhs ||u1-u2||_H1 = " << r.lhs << '\n';
  os << "  rhs (continuity bound) = " << r.rhs << '\n';
  os << "  margin = " << r.margin << '\n';
  os << "  sigma = " << r.sigma_used << ", M = " << r.M_used << '\n';
  os << "  intermediate bound = " << r.p1p2_rhs << '\n';
  os << "  verdict = " << (r.within_bound ? "PASS" : "FAIL") << '\n';
  for (const auto& n : r.notes) os << "  note: " << n << '\n';
  return os.str();
}

}  // namespace qie
