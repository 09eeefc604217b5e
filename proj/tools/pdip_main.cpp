#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <string>

#include "pdip/problem.hpp"
#include "pdip/report_io.hpp"
#include "pdip/solver.hpp"

namespace {

constexpr int kExitUsage = 64;
constexpr int kExitIterationLimit = 2;
constexpr int kExitNumericalFailure = 3;

int exit_code(pdip::TerminationKind kind) {
  switch (kind) {
    case pdip::TerminationKind::Kkt:
    case pdip::TerminationKind::InfeasibleStationary:
    case pdip::TerminationKind::SingularStationary:
      return 0;
    case pdip::TerminationKind::IterationLimit:
      return kExitIterationLimit;
    case pdip::TerminationKind::NumericalFailure:
      return kExitNumericalFailure;
  }
  return kExitNumericalFailure;
}

std::string known_problems() {
  std::string out;
  for (const auto& id : pdip::ProblemRegistry::builtin().ids()) {
    if (!out.empty()) out += ", ";
    out += id;
  }
  return out;
}

int run_command(const std::string& id, const pdip::RunConfig& config,
                bool inner_log, const std::string& csv_path,
                const std::string& json_path) {
  const auto& registry = pdip::ProblemRegistry::builtin();
  if (!registry.contains(id)) {
    std::cerr << "error: unknown problem '" << id << "' (known: " << known_problems()
              << ")\n";
    return kExitUsage;
  }

  const pdip::Problem problem = registry.make(id);
  const pdip::SolveReport report = pdip::solve(problem, config);

  std::cout << pdip::human_table(report);
  if (inner_log) std::cout << "\n" << pdip::human_inner_table(report);

  const pdip::Terminal& t = report.terminal;
  std::cout << "\nterminated: " << pdip::to_string(t.kind)
            << "  (iterations: " << report.total_iterations << ")\n";
  std::printf("f = %.10g, v = %.10g, |phi|_inf = %.4g, |psi|_inf = %.4g\n", t.f,
              t.v, t.phi_inf, t.psi_inf);
  std::cout << "x = (";
  for (pdip::Index i = 0; i < t.x.size(); ++i) {
    std::printf("%s%.6g", i > 0 ? ", " : "", t.x[i]);
  }
  std::cout << ")\n";
  if (!t.detail.empty()) std::cout << "detail: " << t.detail << "\n";
  if (t.kind == pdip::TerminationKind::InfeasibleStationary) {
    std::printf("infeasibility stationarity |J^T max(0,c)|_inf = %.4g\n",
                t.stationarity_inf);
  }
  if (t.kind == pdip::TerminationKind::SingularStationary) {
    std::cout << "near-null multiplier direction b = (";
    for (pdip::Index i = 0; i < t.null_multiplier.size(); ++i) {
      std::printf("%s%.4g", i > 0 ? ", " : "", t.null_multiplier[i]);
    }
    std::cout << ")\n";
  }

  if (!csv_path.empty()) pdip::write_csv(report, csv_path);
  if (!json_path.empty()) pdip::write_json(report, json_path, inner_log);
  return exit_code(t.kind);
}

int compare_command(const std::string& run_path, const std::string& ref_path,
                    const pdip::CompareOptions& options) {
  const pdip::ParsedReport run = pdip::parse_csv_file(run_path);
  const pdip::ParsedReport ref = pdip::parse_csv_file(ref_path);
  const pdip::CompareResult result = pdip::compare_reports(run, ref, options);
  for (const pdip::FieldDiff& field : result.fields) {
    std::printf("%-14s %-6s run=%s ref=%s\n", field.field.c_str(),
                field.ok ? "ok" : "DIFF", field.run.c_str(),
                field.reference.c_str());
  }
  std::cout << (result.pass ? "compare: pass\n" : "compare: fail\n");
  return result.pass ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"two-parameter primal-dual interior-point solver"};
  app.require_subcommand(1);

  // run
  auto* run = app.add_subcommand("run", "solve a registry problem");
  std::string problem_id;
  pdip::RunConfig config;
  bool inner_log = false;
  std::string csv_path, json_path;
  run->add_option("problem,--problem", problem_id, "problem id (tp1..tp4)");
  run->add_option("--eps", config.epsilon, "termination tolerance on beta and rho");
  run->add_option("--beta0", config.beta0, "initial barrier parameter");
  run->add_option("--max-iter", config.max_total_iterations,
                  "total iteration budget");
  run->add_flag("--inner-log", inner_log, "print and export inner iterations");
  run->add_option("--csv", csv_path, "write the iteration table as CSV");
  run->add_option("--json", json_path, "write the full report as JSON");

  // compare
  auto* compare = app.add_subcommand("compare", "diff a run CSV against a reference");
  std::string run_path, ref_path;
  pdip::CompareOptions compare_options;
  compare->add_option("run", run_path, "CSV produced by `run --csv`")->required();
  compare->add_option("reference", ref_path, "reference CSV")->required();
  compare->add_option("--tol-f", compare_options.tol_f, "tolerance on terminal f");
  compare->add_option("--tol-v", compare_options.tol_v, "tolerance on terminal v");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (run->parsed()) {
      if (problem_id.empty()) {
        std::cerr << "error: no problem given (known: " << known_problems() << ")\n";
        return kExitUsage;
      }
      return run_command(problem_id, config, inner_log, csv_path, json_path);
    }
    return compare_command(run_path, ref_path, compare_options);
  } catch (const pdip::FormatError& e) {
    std::cerr << "format error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumericalFailure;
  }
}
