/*
 * qie - certify, solve and verify systems of quadratic integral equations
 *
 *   u_m(x) = u_{0,m}(x) + V_m(x) u_m(x) * int K_m(x-y) g_m(u(y)) dy
 *
 * Subcommands: check, solve, sensitivity, verify, norms.  Problems are read
 * from a JSON config; run control comes from flags.  Exit codes: 0 success,
 * 1 certification/property failure, 2 input error, 3 non-convergence.
 */

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "qie/problem.hpp"
#include "qie/sensitivity.hpp"
#include "qie/solver.hpp"
#include "qie/verify.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitCertification = 1;
constexpr int kExitInput = 2;
constexpr int kExitNoConvergence = 3;

struct CommonArgs {
  std::string input;
  std::string output = ".";
  double tol = 1e-10;
  int max_iter = 10000;
  std::uint64_t seed = 1;
  bool force = false;
  std::string format = "human";
  int threads = 1;
};

bool machine(const CommonArgs& args) { return args.format == "machine"; }

nlohmann::json load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw qie::ConfigError("cannot open config file '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw qie::ConfigError("config is not valid JSON: " + std::string(e.what()));
  }
  return j;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::filesystem::create_directories(path.parent_path().empty() ? "."
                                                                 : path.parent_path());
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  out << text;
}

void emit(const CommonArgs& args, const nlohmann::json& doc, const std::string& human) {
  if (machine(args))
    std::cout << doc.dump(2) << '\n';
  else
    std::cout << human;
}

int cmd_check(const CommonArgs& args) {
  qie::ProblemSpec p = qie::problem_from_json(load_config(args.input));
  qie::Certificate cert = qie::certify(p, {.seed = args.seed});
  nlohmann::json doc;
  doc["command"] = "check";
  doc["certificate"] = qie::to_json(cert);
  doc["ok"] = cert.ok();
  write_text(std::filesystem::path(args.output) / "certificate.json",
             qie::to_json(cert).dump(2) + "\n");
  emit(args, doc, qie::format_certificate(cert));
  return cert.ok() ? kExitOk : kExitCertification;
}

double max_observed_ratio(const qie::IterationTrace& trace) {
  double worst = 0.0;
  for (std::size_t k = 2; k < trace.ratio.size(); ++k)
    if (!std::isnan(trace.ratio[k])) worst = std::max(worst, trace.ratio[k]);
  return worst;
}

int cmd_solve(const CommonArgs& args) {
  qie::ProblemSpec p = qie::problem_from_json(load_config(args.input));
  qie::Certificate cert = qie::certify(p, {.seed = args.seed});
  if (!cert.ok() && !args.force) {
    emit(args,
         {{"command", "solve"}, {"certificate", qie::to_json(cert)}, {"ok", false}},
         qie::format_certificate(cert) + "refusing to solve (use --force to override)\n");
    return kExitCertification;
  }
  qie::SolveOptions opts;
  opts.force = args.force;
  opts.certificate = cert;
  opts.seed = args.seed;
  qie::Solution sol = qie::solve(p, args.tol, args.max_iter, opts);

  std::filesystem::path outdir(args.output);
  {
    std::ostringstream os;
    qie::write_csv(os, sol.u);
    write_text(outdir / "solution.csv", os.str());
  }
  {
    std::ostringstream os;
    qie::write_csv(os, sol.trace);
    write_text(outdir / "trace.csv", os.str());
  }
  write_text(outdir / "certificate.json", qie::to_json(cert).dump(2) + "\n");

  const double worst_ratio = max_observed_ratio(sol.trace);
  nlohmann::json doc;
  doc["command"] = "solve";
  doc["certificate"] = qie::to_json(cert);
  doc["iterations"] = sol.iterations;
  doc["residual"] = sol.residual;
  doc["converged"] = sol.converged;
  doc["status"] = sol.status == qie::SolveStatus::converged      ? "converged"
                  : sol.status == qie::SolveStatus::diverged     ? "diverged"
                                                                 : "max_iterations";
  doc["max_ratio"] = worst_ratio;
  doc["sigma"] = cert.sigma;
  doc["u_p_norm"] = qie::norm_h1(sol.u_p);
  doc["notes"] = sol.notes;

  std::ostringstream human;
  human.precision(12);
  human << qie::format_certificate(cert);
  human << "solve:\n";
  human << "  status = " << doc["status"].get<std::string>() << '\n';
  human << "  iterations = " << sol.iterations << '\n';
  human << "  residual = " << sol.residual << '\n';
  human << "  ||u_p||_H1 = " << qie::norm_h1(sol.u_p) << '\n';
  human << "  max update ratio = " << worst_ratio << " (sigma = " << cert.sigma << ")\n";
  for (const auto& n : sol.notes) human << "  note: " << n << '\n';
  emit(args, doc, human.str());
  return sol.converged ? kExitOk : kExitNoConvergence;
}

int cmd_sensitivity(const CommonArgs& args) {
  nlohmann::json j = load_config(args.input);
  qie::ProblemSpec p = qie::problem_from_json(j);
  std::vector<qie::Expr> g2 = qie::parse_expr_list(j, "g2");
  if (int(g2.size()) != p.N) throw qie::ConfigError("g2 must list exactly N expressions");

  qie::SensitivityOptions opts;
  opts.seed = args.seed;
  qie::SensitivityReport report =
      qie::compare_g(p, p.nonlinearity, g2, args.tol, opts);

  std::filesystem::path outdir(args.output);
  write_text(outdir / "sensitivity_report.json", qie::to_json(report).dump(2) + "\n");
  {
    std::ostringstream os;
    qie::write_csv(os, report.solution1.trace);
    write_text(outdir / "trace1.csv", os.str());
  }
  {
    std::ostringstream os;
    qie::write_csv(os, report.solution2.trace);
    write_text(outdir / "trace2.csv", os.str());
  }

  nlohmann::json doc;
  doc["command"] = "sensitivity";
  doc["report"] = qie::to_json(report);
  emit(args, doc, qie::format_sensitivity(report));
  return report.within_bound ? kExitOk : kExitCertification;
}

int cmd_verify(const CommonArgs& args, bool inject_circular) {
  qie::VerifyOptions opts;
  opts.seed = args.seed;
  opts.threads = args.threads;
  if (inject_circular) opts.mode = qie::ConvolutionMode::periodic;
  std::vector<qie::PropertyResult> results = qie::run_verification(opts);

  bool all_pass = true;
  nlohmann::json doc;
  doc["command"] = "verify";
  doc["seed"] = args.seed;
  nlohmann::json list = nlohmann::json::array();
  std::ostringstream human;
  human.precision(6);
  human << "property suite (seed " << args.seed << "):\n";
  for (const auto& r : results) {
    all_pass = all_pass && r.pass;
    list.push_back({{"name", r.name},
                    {"cases", r.cases},
                    {"worst", r.worst},
                    {"threshold", r.threshold},
                    {"pass", r.pass},
                    {"detail", r.detail}});
    human << "  " << (r.pass ? "[PASS] " : "[FAIL] ") << std::left << std::setw(26)
          << r.name << " cases=" << std::setw(5) << r.cases << " worst=" << std::setw(14)
          << r.worst << " threshold=" << r.threshold << '\n';
  }
  doc["results"] = list;
  doc["ok"] = all_pass;
  write_text(std::filesystem::path(args.output) / "verify.json", doc.dump(2) + "\n");
  emit(args, doc, human.str());
  return all_pass ? kExitOk : kExitCertification;
}

int cmd_norms(const CommonArgs& args) {
  qie::ProblemSpec p = qie::problem_from_json(load_config(args.input));
  nlohmann::json doc;
  doc["command"] = "norms";
  std::ostringstream human;
  human.precision(12);
  auto report_block = [&](const std::string& label, const qie::GridFunction& f) {
    qie::NormReport r = qie::norm_report(f);
    auto diag = qie::truncation_diagnostic(f);
    nlohmann::json j;
    j["l1"] = *r.l1;
    j["l2"] = *r.l2;
    j["linf"] = *r.linf;
    j["h1"] = *r.h1;
    j["w11"] = *r.w11;
    j["tail_fraction"] = diag.tail_fraction;
    j["boundary_max"] = diag.boundary_max;
    doc[label] = j;
    human << label << ":\n";
    human << "  l1 = " << *r.l1 << "\n  l2 = " << *r.l2 << "\n  linf = " << *r.linf
          << "\n  h1 = " << *r.h1 << "\n  w11 = " << *r.w11
          << "\n  tail_fraction = " << diag.tail_fraction << '\n';
  };
  std::vector<qie::GridFunction> u0_parts;
  for (int m = 0; m < p.N; ++m) {
    report_block("kernel_" + std::to_string(m + 1),
                 qie::sample(p.kernels[std::size_t(m)], p.grid));
    report_block("initial_" + std::to_string(m + 1),
                 qie::sample(p.initial[std::size_t(m)], p.grid));
    double t = qie::operator_norm_bound(p.multipliers[std::size_t(m)], p.grid);
    doc["multiplier_" + std::to_string(m + 1)] = {{"operator_norm_bound", t}};
    human << "multiplier_" << (m + 1) << ":\n  operator_norm_bound = " << t << '\n';
    u0_parts.push_back(qie::sample(p.initial[std::size_t(m)], p.grid));
  }
  double u0h1 = qie::norm_h1(qie::VectorGridFunction(u0_parts));
  doc["u0_h1_vector"] = u0h1;
  human << "u0 (vector):\n  h1 = " << u0h1 << '\n';
  emit(args, doc, human.str());
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"solver and hypothesis checker for quadratic integral equations"};
  app.require_subcommand(1);

  CommonArgs args;
  bool inject_circular = false;

  auto add_common = [&](CLI::App* cmd, bool needs_input) {
    if (needs_input)
      cmd->add_option("-i,--input", args.input, "problem config (JSON)")->required();
    cmd->add_option("-o,--output", args.output, "output directory");
    cmd->add_option("--seed", args.seed, "seed for stochastic scans");
    cmd->add_option("--format", args.format, "output format")
        ->check(CLI::IsMember({"human", "machine"}));
    cmd->add_option("--threads", args.threads, "worker threads for sweeps")
        ->check(CLI::PositiveNumber);
  };

  CLI::App* check = app.add_subcommand("check", "certify the contraction hypotheses");
  add_common(check, true);

  CLI::App* solve = app.add_subcommand("solve", "run the fixed-point iteration");
  add_common(solve, true);
  solve->add_option("--tol", args.tol, "relative update tolerance")
      ->check(CLI::PositiveNumber);
  solve->add_option("--max-iter", args.max_iter, "iteration cap")
      ->check(CLI::PositiveNumber);
  solve->add_flag("--force", args.force, "iterate even if certification fails");

  CLI::App* sens = app.add_subcommand("sensitivity",
                                      "compare solutions for two nonlinearities");
  add_common(sens, true);
  sens->add_option("--tol", args.tol, "relative update tolerance")
      ->check(CLI::PositiveNumber);

  CLI::App* verify = app.add_subcommand("verify", "run the seeded property suites");
  add_common(verify, false);
  verify->add_flag("--inject-circular", inject_circular,
                   "fault injection: use periodic convolution (must fail)");

  CLI::App* norms = app.add_subcommand("norms", "report norms of the problem data");
  add_common(norms, true);

  CLI11_PARSE(app, argc, argv);

  try {
    if (check->parsed()) return cmd_check(args);
    if (solve->parsed()) return cmd_solve(args);
    if (sens->parsed()) return cmd_sensitivity(args);
    if (verify->parsed()) return cmd_verify(args, inject_circular);
    if (norms->parsed()) return cmd_norms(args);
  } catch (const qie::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitInput;
  } catch (const qie::ParseError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitInput;
  } catch (const qie::CertificationError& e) {
    std::cerr << "certification error: " << e.what() << '\n';
    return kExitCertification;
  } catch (const qie::ConvergenceError& e) {
    std::cerr << "convergence error: " << e.what() << '\n';
    return kExitNoConvergence;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInput;
  }
  return kExitOk;
}
