#pragma once

/*
 * Problem instance
 *
 *   u_m(x) = u_{0,m}(x) + V_m(x) u_m(x) * int K_m(x-y) g_m(u(y)) dy,
 *
 * together with the certificate of the contraction hypotheses:
 *
 *   ||T_m||  <= sup|V_m| + sup|V_m'|          (multiplication operator)
 *   Q         = sqrt( sum_m ||T_m||^2 ||K_m||_W11^2 )
 *   r_I       = (||u0||_H1 + 1) / sqrt(2)     (ball for the C^1 norm of g)
 *   M         = ||g||_C1(ball) * safety factor   (unless overridden)
 *   condition:  c_a * M * (||u0||_H1 + 1)^2 * Q  <=  rho / 2
 *   sigma     = 2 c_a Q M (||u0||_H1 + 1)     (contraction factor, < 1)
 */

#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "qie/expr.hpp"
#include "qie/grid.hpp"
#include "qie/norms.hpp"
#include "qie/random.hpp"

namespace qie {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ProblemOptions {
  double c_a = default_algebra_constant();
  std::optional<double> M_override;
  double safety_factor = 1.05;
  double tail_tolerance = 1e-6;
};

struct ProblemSpec {
  int N = 1;
  GridSpec grid;
  std::vector<Expr> kernels;      // K_m(x)
  std::vector<Expr> multipliers;  // V_m(x)
  std::vector<Expr> initial;      // u_{0,m}(x)
  std::vector<Expr> nonlinearity; // g_m(u1..uN)
  double rho = 1.0;
  ProblemOptions options;
};

inline void validate(const ProblemSpec& p) {
  if (p.N < 1) throw ConfigError("N must be >= 1");
  auto check_count = [&](const std::vector<Expr>& v, const char* field) {
    if (int(v.size()) != p.N)
      throw ConfigError(std::string(field) + " must list exactly N expressions");
  };
  check_count(p.kernels, "kernels");
  check_count(p.multipliers, "multipliers");
  check_count(p.initial, "initial");
  check_count(p.nonlinearity, "g");
  auto check_x_only = [&](const std::vector<Expr>& v, const char* field) {
    for (std::size_t m = 0; m < v.size(); ++m) {
      auto usage = v[m].variables();
      if (usage.max_u > 0)
        throw ConfigError(std::string(field) + "[" + std::to_string(m) +
                          "] may only use the variable x");
    }
  };
  check_x_only(p.kernels, "kernels");
  check_x_only(p.multipliers, "multipliers");
  check_x_only(p.initial, "initial");
  for (std::size_t m = 0; m < p.nonlinearity.size(); ++m) {
    auto usage = p.nonlinearity[m].variables();
    if (usage.uses_x)
      throw ConfigError("g[" + std::to_string(m) + "] may not use x");
    if (usage.max_u > p.N)
      throw ConfigError("g[" + std::to_string(m) + "] uses u" +
                        std::to_string(usage.max_u) + " but N = " + std::to_string(p.N));
  }
  if (!(p.rho > 0.0 && p.rho <= 1.0)) throw ConfigError("rho must lie in (0, 1]");
  if (!(p.options.c_a > 0.0)) throw ConfigError("c_a must be positive");
  if (!(p.options.safety_factor >= 1.0)) throw ConfigError("safety_factor must be >= 1");
  if (!(p.options.tail_tolerance > 0.0)) throw ConfigError("tail_tolerance must be positive");
}

struct Certificate {
  std::vector<double> T_norms;  // upper bounds ||T_m||
  std::vector<double> K_w11;    // ||K_m||_W11
  double Q = 0.0;
  double u0_h1 = 0.0;
  double ball_radius = 0.0;
  double M = 0.0;
  bool M_lower_estimate = false;  // sampled (N >= 2) C^1 estimate
  double sigma = 0.0;
  double rub_lhs = 0.0;
  double rub_rhs = 0.0;
  bool assumption1_ok = false;
  bool assumption2_ok = false;
  bool rub_ok = false;
  std::vector<std::string> notes;

  bool ok() const { return assumption1_ok && assumption2_ok && rub_ok; }
};

// Certified upper bound for the H1->H1 norm of multiplication by V:
// sup|V| + sup|V'|, by dense scan on a 10x refined grid.
inline double operator_norm_bound(const Expr& V, const GridSpec& grid) {
  auto usage = V.variables();
  if (usage.max_u > 0) throw ConfigError("multiplier may only use the variable x");
  Expr dV = differentiate(V, 0);
  const int S = 10 * grid.points;
  double sup_v = 0.0, sup_dv = 0.0;
  for (int j = 0; j < S; ++j) {
    EvalPoint p;
    p.x = -grid.half_width + 2.0 * grid.half_width * double(j) / double(S - 1);
    sup_v = std::max(sup_v, std::fabs(eval_at(V, p)));
    sup_dv = std::max(sup_dv, std::fabs(eval_at(dV, p)));
  }
  return sup_v + sup_dv;
}

inline double compute_Q(std::span<const double> T_norms, std::span<const double> K_w11) {
  if (T_norms.size() != K_w11.size())
    throw std::invalid_argument("compute_Q: length mismatch");
  double sq = 0.0;
  for (std::size_t m = 0; m < T_norms.size(); ++m) {
    double term = T_norms[m] * K_w11[m];
    sq += term * term;
  }
  return std::sqrt(sq);
}

inline double ball_radius(double u0_h1) {
  return (u0_h1 + 1.0) / std::numbers::sqrt2;
}

inline double compute_sigma(double c_a, double Q, double M, double u0_h1) {
  return 2.0 * c_a * Q * M * (u0_h1 + 1.0);
}

struct CertifyOptions {
  std::uint64_t seed = 1;
  BallNormOptions ball;
  // Pre-sampled initial data (manufactured-solution workflows); when set it
  // replaces sampling of the `initial` expressions.
  std::optional<VectorGridFunction> u0_samples;
};

inline Certificate certify(const ProblemSpec& p, const CertifyOptions& opts = {}) {
  validate(p);
  constexpr double nontrivial_eps = 1e-12;
  Certificate cert;
  cert.assumption1_ok = true;
  cert.assumption2_ok = true;

  auto note = [&](std::string text) { cert.notes.push_back(std::move(text)); };

  // (a) kernels: finite W11, nontrivial, decayed inside [-L, L].
  std::vector<GridFunction> K_samples;
  for (int m = 0; m < p.N; ++m) {
    GridFunction Km = [&] {
      try {
        return sample(p.kernels[std::size_t(m)], p.grid);
      } catch (const std::exception& e) {
        throw ConfigError("kernels[" + std::to_string(m) + "]: " + e.what());
      }
    }();
    if (norm_linf(Km) <= nontrivial_eps) {
      cert.assumption1_ok = false;
      note("kernels[" + std::to_string(m) + "] vanishes identically on the grid");
    }
    auto diag = truncation_diagnostic(Km);
    if (diag.tail_fraction > p.options.tail_tolerance) {
      cert.assumption1_ok = false;
      note("kernels[" + std::to_string(m) + "] tail fraction " +
           std::to_string(diag.tail_fraction) + " exceeds tolerance");
    }
    cert.K_w11.push_back(norm_w11(Km));
    K_samples.push_back(std::move(Km));
  }

  // (b) initial data: finite H1 samples, decayed, not all trivial.
  if (opts.u0_samples &&
      (opts.u0_samples->components() != p.N || !(opts.u0_samples->grid() == p.grid)))
    throw ConfigError("supplied initial-data samples do not match the problem");
  std::vector<GridFunction> u0_samples;
  bool any_u0_nontrivial = false;
  for (int m = 0; m < p.N; ++m) {
    GridFunction u0m = [&] {
      if (opts.u0_samples) return (*opts.u0_samples)[m];
      try {
        return sample(p.initial[std::size_t(m)], p.grid);
      } catch (const std::exception& e) {
        throw ConfigError("initial[" + std::to_string(m) + "]: " + e.what());
      }
    }();
    if (norm_linf(u0m) > nontrivial_eps) any_u0_nontrivial = true;
    auto diag = truncation_diagnostic(u0m);
    if (diag.tail_fraction > p.options.tail_tolerance) {
      cert.assumption1_ok = false;
      note("initial[" + std::to_string(m) + "] tail fraction " +
           std::to_string(diag.tail_fraction) + " exceeds tolerance");
    }
    u0_samples.push_back(std::move(u0m));
  }
  if (!any_u0_nontrivial) {
    cert.assumption1_ok = false;
    note("initial data vanishes identically");
  }
  cert.u0_h1 = norm_h1(VectorGridFunction(u0_samples));
  cert.ball_radius = ball_radius(cert.u0_h1);

  // (c) multiplication operators: 0 < ||T_m|| < infinity.
  for (int m = 0; m < p.N; ++m) {
    double bound = [&] {
      try {
        return operator_norm_bound(p.multipliers[std::size_t(m)], p.grid);
      } catch (const std::exception& e) {
        throw ConfigError("multipliers[" + std::to_string(m) + "]: " + e.what());
      }
    }();
    if (!(bound > nontrivial_eps)) {
      cert.assumption1_ok = false;
      note("multipliers[" + std::to_string(m) + "] gives a trivial operator");
    }
    cert.T_norms.push_back(bound);
  }

  // Empirical lower bounds for ||T_m|| from random probes (reported only).
  {
    std::mt19937_64 rng(opts.seed ^ 0x9e3779b97f4a7c15ull);
    for (int m = 0; m < p.N; ++m) {
      GridFunction Vm = sample(p.multipliers[std::size_t(m)], p.grid);
      double lower = 0.0;
      for (int t = 0; t < 3; ++t) {
        GridFunction phi = gaussian_mixture(p.grid, rng);
        lower = std::max(lower, norm_h1(Vm * phi) / norm_h1(phi));
      }
      std::ostringstream os;
      os << "empirical ||T_" << (m + 1) << "|| lower bound " << lower
         << " (certified upper bound " << cert.T_norms[std::size_t(m)] << ")";
      note(os.str());
    }
  }

  cert.Q = compute_Q(cert.T_norms, cert.K_w11);
  if (cert.Q == 0.0) {
    cert.assumption1_ok = false;
    note("Q vanishes; the integral operator is trivial");
  }

  // (d) nonlinearity: g(0) = 0 exactly, nontrivial on the ball, C^1 bound M.
  for (int m = 0; m < p.N; ++m) {
    std::vector<double> origin(std::size_t(p.N), 0.0);
    EvalPoint pt;
    pt.u = origin;
    double g0 = [&] {
      try {
        return eval_at(p.nonlinearity[std::size_t(m)], pt);
      } catch (const std::exception& e) {
        throw ConfigError("g[" + std::to_string(m) + "]: " + e.what());
      }
    }();
    if (g0 != 0.0) {
      cert.assumption2_ok = false;
      note("g[" + std::to_string(m) + "](0) = " + std::to_string(g0) +
           " violates g(0) = 0");
    }
  }
  BallNormEstimate estimate = [&] {
    try {
      BallNormOptions ball = opts.ball;
      ball.seed = opts.seed;
      return c1_norm_over_ball(p.nonlinearity, cert.ball_radius, ball);
    } catch (const std::exception& e) {
      throw ConfigError(std::string("g: ") + e.what());
    }
  }();
  if (estimate.value <= nontrivial_eps) {
    cert.assumption2_ok = false;
    note("g vanishes identically on the ball");
  }
  if (p.options.M_override) {
    cert.M = *p.options.M_override;
    cert.M_lower_estimate = false;
    note("M overridden by configuration");
    if (estimate.value > cert.M)
      note("warning: sampled C1 norm " + std::to_string(estimate.value) +
           " exceeds the override M");
  } else {
    cert.M = estimate.value * p.options.safety_factor;
    cert.M_lower_estimate = estimate.lower_estimate;
    if (estimate.lower_estimate)
      note("M is a sampled lower estimate scaled by the safety factor");
  }

  // (e) the smallness condition and the contraction factor.
  const double w = cert.u0_h1 + 1.0;
  cert.rub_lhs = p.options.c_a * cert.M * w * w * cert.Q;
  cert.rub_rhs = 0.5 * p.rho;
  cert.rub_ok = cert.rub_lhs <= cert.rub_rhs;
  cert.sigma = compute_sigma(p.options.c_a, cert.Q, cert.M, cert.u0_h1);
  if (cert.rub_ok && !(cert.sigma < 1.0)) {
    cert.rub_ok = false;
    note("sigma failed the strictness check");
  }
  return cert;
}

// ---------------------------------------------------------------------------
// JSON serialization (the config schema of the command-line tools).

inline nlohmann::json to_json(const ProblemSpec& p) {
  nlohmann::json j;
  j["N"] = p.N;
  j["grid"] = {{"L", p.grid.half_width}, {"n", p.grid.points}};
  auto dump = [](const std::vector<Expr>& v) {
    std::vector<std::string> out;
    out.reserve(v.size());
    for (const Expr& e : v) out.push_back(to_string(e));
    return out;
  };
  j["kernels"] = dump(p.kernels);
  j["multipliers"] = dump(p.multipliers);
  j["initial"] = dump(p.initial);
  j["g"] = dump(p.nonlinearity);
  j["rho"] = p.rho;
  nlohmann::json o;
  o["c_a"] = p.options.c_a;
  if (p.options.M_override) o["M_override"] = *p.options.M_override;
  o["safety_factor"] = p.options.safety_factor;
  o["tail_tolerance"] = p.options.tail_tolerance;
  j["options"] = o;
  return j;
}

inline std::vector<Expr> parse_expr_list(const nlohmann::json& j, const std::string& field) {
  if (!j.contains(field) || !j[field].is_array())
    throw ConfigError("missing expression list '" + field + "'");
  std::vector<Expr> out;
  for (std::size_t m = 0; m < j[field].size(); ++m) {
    if (!j[field][m].is_string())
      throw ConfigError(field + "[" + std::to_string(m) + "] must be a string");
    try {
      out.push_back(parse(j[field][m].get<std::string>()));
    } catch (const ParseError& e) {
      throw ConfigError(field + "[" + std::to_string(m) + "]: " + e.what());
    }
  }
  return out;
}

inline ProblemSpec problem_from_json(const nlohmann::json& j) {
  ProblemSpec p;
  try {
    p.N = j.at("N").get<int>();
    p.grid = make_grid(j.at("grid").at("L").get<double>(), j.at("grid").at("n").get<int>());
    p.kernels = parse_expr_list(j, "kernels");
    p.multipliers = parse_expr_list(j, "multipliers");
    p.initial = parse_expr_list(j, "initial");
    p.nonlinearity = parse_expr_list(j, "g");
    p.rho = j.value("rho", 1.0);
    if (j.contains("options")) {
      const auto& o = j["options"];
      p.options.c_a = o.value("c_a", default_algebra_constant());
      if (o.contains("M_override") && !o["M_override"].is_null())
        p.options.M_override = o["M_override"].get<double>();
      p.options.safety_factor = o.value("safety_factor", 1.05);
      p.options.tail_tolerance = o.value("tail_tolerance", 1e-6);
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bad problem config: ") + e.what());
  } catch (const GridError& e) {
    throw ConfigError(std::string("bad problem config: ") + e.what());
  }
  validate(p);
  return p;
}

inline nlohmann::json to_json(const Certificate& c) {
  nlohmann::json j;
  j["T_norms"] = c.T_norms;
  j["K_w11"] = c.K_w11;
  j["Q"] = c.Q;
  j["u0_h1"] = c.u0_h1;
  j["ball_radius"] = c.ball_radius;
  j["M"] = c.M;
  j["M_lower_estimate"] = c.M_lower_estimate;
  j["sigma"] = c.sigma;
  j["rub_lhs"] = c.rub_lhs;
  j["rub_rhs"] = c.rub_rhs;
  j["assumption1_ok"] = c.assumption1_ok;
  j["assumption2_ok"] = c.assumption2_ok;
  j["rub_ok"] = c.rub_ok;
  j["ok"] = c.ok();
  j["notes"] = c.notes;
  return j;
}

inline std::string format_certificate(const Certificate& c) {
  std::ostringstream os;
  os.precision(12);
  auto row = [&](const std::string& k, auto v) { os << "  " << k << " = " << v << '\n'; };
  os << "certificate:\n";
  for (std::size_t m = 0; m < c.T_norms.size(); ++m) {
    row("T_norm[" + std::to_string(m + 1) + "]", c.T_norms[m]);
    row("K_w11[" + std::to_string(m + 1) + "]", c.K_w11[m]);
  }
  row("Q", c.Q);
  row("u0_h1", c.u0_h1);
  row("ball_radius", c.ball_radius);
  row("M", c.M);
  row("sigma", c.sigma);
  row("condition_lhs", c.rub_lhs);
  row("condition_rhs", c.rub_rhs);
  row("assumption1", c.assumption1_ok ? "ok" : "FAILED");
  row("assumption2", c.assumption2_ok ? "ok" : "FAILED");
  row("smallness_condition", c.rub_ok ? "ok" : "FAILED");
  row("verdict", c.ok() ? "PASS" : "FAIL");
  for (const auto& n : c.notes) os << "  note: " << n << '\n';
  return os.str();
}

}  // namespace qie
