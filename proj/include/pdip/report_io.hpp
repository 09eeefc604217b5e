#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "pdip/solver.hpp"

namespace pdip {

/// CSV form of a solve report: the header `l,f,v,phi_inf,psi_inf,beta,rho,k`,
/// one row per outer iteration, and a trailing summary row
/// `#terminal,<kind>,<f>,<v>,<phi_inf>,<psi_inf>,<beta>,<rho>`. Numbers carry
/// 17 significant digits and round-trip exactly.
std::string to_csv(const SolveReport& report);
void write_csv(const SolveReport& report, const std::string& path);

/// A report read back from CSV (enough for comparisons).
struct ParsedReport {
  std::vector<OuterRow> rows;
  std::string terminal_kind;
  double f = 0.0;
  double v = 0.0;
  double phi_inf = 0.0;
  double psi_inf = 0.0;
  double beta = 0.0;
  double rho = 0.0;
};

/// Throws FormatError on schema mismatches (including empty input).
ParsedReport parse_csv(std::istream& in);
ParsedReport parse_csv_file(const std::string& path);

/// JSON form: one object with `problem`, `config`, `rows[]` and
/// `terminal{kind, x[], u[], f, v, phi_inf, psi_inf, ...}`; inner rows are
/// included on request.
std::string to_json(const SolveReport& report, bool include_inner = false);
void write_json(const SolveReport& report, const std::string& path,
                bool include_inner = false);

/// Iteration table in the layout of the published experiments (4 significant
/// decimals).
std::string human_table(const SolveReport& report);
/// Inner-iteration rows, grouped per outer step.
std::string human_inner_table(const SolveReport& report);

enum class RateVerdict { Pass, Fail, NotApplicable };
std::string to_string(RateVerdict verdict);

/// Superlinear-detection check: over the last two rows where rho decreased,
/// ||psi||_inf must satisfy psi_l <= psi_{l-1}^exponent. NotApplicable with
/// fewer than two reductions.
RateVerdict rho_rate_check(const std::vector<OuterRow>& rows,
                           double exponent = 1.3);
/// Same for beta reductions, measured on ||phi||_inf.
RateVerdict beta_rate_check(const std::vector<OuterRow>& rows,
                            double exponent = 1.3);

struct CompareOptions {
  double tol_f = 1e-3;
  double tol_v = 1e-3;
  double rate_exponent = 1.3;
};

struct FieldDiff {
  std::string field;
  std::string run;
  std::string reference;
  bool ok = false;
};

struct CompareResult {
  bool pass = false;
  std::vector<FieldDiff> fields;
};

/// Field-by-field comparison of a run against a stored reference: terminal
/// classification, terminal f and v within tolerances, and agreement of the
/// superlinear-ratio verdicts.
CompareResult compare_reports(const ParsedReport& run, const ParsedReport& ref,
                              const CompareOptions& options = CompareOptions());

}  // namespace pdip
