#pragma once

/*
 * Fixed-point machinery for the perturbed system.  With u = u0 + v the
 * auxiliary map is, componentwise,
 *
 *   (tau v)_m = V_m (u0_m + v_m) * (K_m * g_m(u0 + v)),
 *
 * and under the certified smallness condition tau contracts the ball
 * ||v||_H1(R,R^N) <= rho with factor sigma < 1, so the Picard iteration
 * v^{k+1} = tau v^k from v^0 = 0 converges geometrically to the unique
 * fixed point there.
 */

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <ostream>
#include <random>
#include <string>
#include <vector>

#include "qie/convolve.hpp"
#include "qie/grid.hpp"
#include "qie/norms.hpp"
#include "qie/problem.hpp"
#include "qie/random.hpp"

namespace qie {

class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// The instance failed certification and force was not requested.
class CertificationError : public SolverError {
 public:
  using SolverError::SolverError;
};

// The iteration stopped without meeting the tolerance contract.
class ConvergenceError : public SolverError {
 public:
  using SolverError::SolverError;
};

// Componentwise g_m(w_1(x_i), ..., w_N(x_i)).
inline VectorGridFunction eval_g(std::span<const Expr> g, const VectorGridFunction& w) {
  const int N = w.components();
  if (int(g.size()) != N) throw SolverError("nonlinearity component count mismatch");
  const int n = w.grid().points;
  std::vector<double> point(static_cast<std::size_t>(N));
  std::vector<std::vector<double>> out(static_cast<std::size_t>(N),
                                       std::vector<double>(static_cast<std::size_t>(n)));
  for (int i = 0; i < n; ++i) {
    for (int m = 0; m < N; ++m) point[std::size_t(m)] = w[m][i];
    EvalPoint p;
    p.u = point;
    for (int m = 0; m < N; ++m) {
      try {
        out[std::size_t(m)][std::size_t(i)] = eval_at(g[std::size_t(m)], p);
      } catch (const EvalError& e) {
        throw SolverError("g[" + std::to_string(m) + "] failed at node " +
                          std::to_string(i) + ": " + e.what());
      }
    }
  }
  std::vector<GridFunction> comps;
  comps.reserve(std::size_t(N));
  for (int m = 0; m < N; ++m) comps.emplace_back(w.grid(), std::move(out[std::size_t(m)]));
  return VectorGridFunction(std::move(comps));
}

// Sampled problem data plus a shared convolution plan; the iteration works
// on this so expressions are sampled once per solve.
class DiscretizedProblem {
 public:
  explicit DiscretizedProblem(const ProblemSpec& p,
                              std::optional<VectorGridFunction> u0_samples = {})
      : spec_(p),
        plan_(p.grid),
        u0_(u0_samples ? std::move(*u0_samples) : sample_vector(p.initial, p.grid)) {
    if (u0_.components() != p.N || !(u0_.grid() == p.grid))
      throw SolverError("initial-data samples do not match the problem");
    for (int m = 0; m < p.N; ++m) {
      V_.push_back(sample(p.multipliers[std::size_t(m)], p.grid));
      K_.push_back(sample(p.kernels[std::size_t(m)], p.grid));
    }
  }

  const ProblemSpec& spec() const { return spec_; }
  const VectorGridFunction& u0() const { return u0_; }

  VectorGridFunction apply_tau(const VectorGridFunction& v) const {
    VectorGridFunction w = u0_ + v;
    VectorGridFunction gw = eval_g(spec_.nonlinearity, w);
    std::vector<GridFunction> out;
    out.reserve(std::size_t(spec_.N));
    for (int m = 0; m < spec_.N; ++m)
      out.push_back(V_[std::size_t(m)] * w[m] * convolve_fft(K_[std::size_t(m)], gw[m], plan_));
    return VectorGridFunction(std::move(out));
  }

  // H1 norm of the defect of the full equation at u.
  double residual(const VectorGridFunction& u) const {
    VectorGridFunction gu = eval_g(spec_.nonlinearity, u);
    std::vector<GridFunction> defect;
    defect.reserve(std::size_t(spec_.N));
    for (int m = 0; m < spec_.N; ++m)
      defect.push_back(u[m] - u0_[m] -
                       V_[std::size_t(m)] * u[m] * convolve_fft(K_[std::size_t(m)], gu[m], plan_));
    return norm_h1(VectorGridFunction(std::move(defect)));
  }

 private:
  static VectorGridFunction sample_vector(const std::vector<Expr>& exprs,
                                          const GridSpec& grid) {
    std::vector<GridFunction> comps;
    comps.reserve(exprs.size());
    for (const Expr& e : exprs) comps.push_back(sample(e, grid));
    return VectorGridFunction(std::move(comps));
  }

  ProblemSpec spec_;
  ConvolutionPlan plan_;
  VectorGridFunction u0_;
  std::vector<GridFunction> V_;
  std::vector<GridFunction> K_;
};

inline VectorGridFunction apply_tau(const ProblemSpec& p, const Certificate& cert,
                                    const VectorGridFunction& v) {
  if (!cert.rub_ok) throw SolverError("apply_tau requires a certified contraction");
  if (norm_h1(v) > p.rho + 1e-9) throw SolverError("iterate lies outside the ball");
  return DiscretizedProblem(p).apply_tau(v);
}

struct IterationTrace {
  std::vector<double> update_norm;   // delta_k = ||v^{k+1} - v^k||
  std::vector<double> ratio;         // delta_k / delta_{k-1}, NaN for k = 0
  std::vector<double> iterate_norm;  // ||v^{k+1}||
};

inline void write_csv(std::ostream& os, const IterationTrace& trace) {
  os << "k,delta,ratio,norm\n";
  for (std::size_t k = 0; k < trace.update_norm.size(); ++k) {
    os << k << ',' << detail::format_double(trace.update_norm[k]) << ',';
    if (std::isnan(trace.ratio[k]))
      os << "";
    else
      os << detail::format_double(trace.ratio[k]);
    os << ',' << detail::format_double(trace.iterate_norm[k]) << '\n';
  }
}

enum class SolveStatus { converged, max_iterations, diverged };

struct Solution {
  VectorGridFunction u_p;  // the perturbation (fixed point of tau)
  VectorGridFunction u;    // u0 + u_p
  double residual = 0.0;
  int iterations = 0;
  bool converged = false;
  SolveStatus status = SolveStatus::max_iterations;
  IterationTrace trace;
  Certificate certificate;
  std::vector<std::string> notes;
};

struct SolveOptions {
  bool force = false;  // proceed past a failed certificate (no claims made)
  std::optional<VectorGridFunction> initial_iterate;
  std::optional<Certificate> certificate;  // reuse a precomputed certificate
  std::optional<VectorGridFunction> u0_samples;  // numeric initial data
  std::uint64_t seed = 1;
};

inline Solution solve(const ProblemSpec& p, double tol, int max_iter,
                      const SolveOptions& opts = {}) {
  if (!(tol > 0.0)) throw SolverError("tolerance must be positive");
  if (max_iter < 1) throw SolverError("max_iter must be >= 1");
  Solution sol;
  sol.certificate = opts.certificate
                        ? *opts.certificate
                        : certify(p, {.seed = opts.seed, .u0_samples = opts.u0_samples});
  if (!sol.certificate.ok()) {
    if (!opts.force)
      throw CertificationError(
          "problem failed certification; rerun with force to iterate anyway");
    sol.notes.push_back("iterating on an uncertified problem (forced)");
  }

  DiscretizedProblem dp(p, opts.u0_samples);
  VectorGridFunction v = opts.initial_iterate ? *opts.initial_iterate
                                              : VectorGridFunction::zero(p.grid, p.N);
  if (opts.initial_iterate && norm_h1(v) > p.rho + 1e-9) {
    if (!opts.force) throw SolverError("initial iterate lies outside the ball");
    sol.notes.push_back("initial iterate outside the ball (forced)");
  }

  bool stopped_by_tolerance = false;
  int growth_streak = 0;
  double prev_delta = -1.0;
  int k = 0;
  for (; k < max_iter; ++k) {
    VectorGridFunction next;
    try {
      next = dp.apply_tau(v);
    } catch (const std::runtime_error& e) {
      // overflow in g or non-finite samples on forced runs
      sol.status = SolveStatus::diverged;
      sol.notes.push_back(std::string("iteration aborted: ") + e.what());
      break;
    }
    double delta = norm_h1(next - v);
    double vnorm = norm_h1(next);
    sol.trace.update_norm.push_back(delta);
    sol.trace.ratio.push_back(prev_delta > 0.0 ? delta / prev_delta
                                               : std::numeric_limits<double>::quiet_NaN());
    sol.trace.iterate_norm.push_back(vnorm);
    v = std::move(next);
    if (!std::isfinite(delta) || !std::isfinite(vnorm)) {
      sol.status = SolveStatus::diverged;
      sol.notes.push_back("iteration produced non-finite values");
      ++k;
      break;
    }
    if (delta <= tol * std::max(1.0, vnorm)) {
      stopped_by_tolerance = true;
      sol.status = SolveStatus::converged;
      ++k;
      break;
    }
    growth_streak = (prev_delta >= 0.0 && delta > prev_delta) ? growth_streak + 1 : 0;
    if (growth_streak >= 5) {
      sol.status = SolveStatus::diverged;
      sol.notes.push_back("update norm grew for 5 consecutive steps");
      ++k;
      break;
    }
    prev_delta = delta;
  }
  sol.iterations = k;
  sol.u_p = v;
  sol.u = dp.u0() + v;
  sol.residual = dp.residual(sol.u);
  sol.converged = stopped_by_tolerance && sol.residual <= 10.0 * tol;
  if (stopped_by_tolerance && !sol.converged) {
    sol.status = SolveStatus::max_iterations;
    sol.notes.push_back("update norm converged but the residual check failed");
  }
  return sol;
}

inline double residual(const ProblemSpec& p, const VectorGridFunction& u) {
  return DiscretizedProblem(p).residual(u);
}

// Max empirical ratio ||tau v1 - tau v2|| / ||v1 - v2|| over random ball pairs.
inline double contraction_probe(const ProblemSpec& p, const Certificate& cert, int trials,
                                std::uint64_t seed = 1) {
  (void)cert;
  DiscretizedProblem dp(p);
  std::mt19937_64 rng(seed);
  double worst = 0.0;
  for (int t = 0; t < trials; ++t) {
    VectorGridFunction v1 = random_ball_element(p.grid, p.N, p.rho, rng);
    VectorGridFunction v2 = random_ball_element(p.grid, p.N, p.rho, rng);
    double dist = norm_h1(v1 - v2);
    if (dist < 1e-12) continue;
    double ratio = norm_h1(dp.apply_tau(v1) - dp.apply_tau(v2)) / dist;
    worst = std::max(worst, ratio);
  }
  return worst;
}

}  // namespace qie
