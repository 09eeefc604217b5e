#include "pdip/report_io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <sstream>

#include <json.hpp>

namespace pdip {

namespace {

std::string num17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

// 4 significant decimals, fixed for moderate magnitudes like the published
// tables, scientific otherwise.
std::string num4(double v) {
  char buf[40];
  const double a = std::abs(v);
  if (v == 0.0) {
    return "0";
  } else if (a >= 1e-3 && a < 1e5) {
    std::snprintf(buf, sizeof(buf), "%.4f", v);
  } else {
    std::snprintf(buf, sizeof(buf), "%.4e", v);
  }
  return buf;
}

constexpr const char* kCsvHeader = "l,f,v,phi_inf,psi_inf,beta,rho,k";

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(sep, start);
    if (pos == std::string::npos) {
      out.push_back(line.substr(start));
      break;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return out;
}

double parse_double(const std::string& s) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw FormatError("csv: malformed number '" + s + "'");
    return v;
  } catch (const std::logic_error&) {
    throw FormatError("csv: malformed number '" + s + "'");
  }
}

bool known_kind(const std::string& kind) {
  return kind == "kkt" || kind == "infeasible_stationary" ||
         kind == "singular_stationary" || kind == "iteration_limit" ||
         kind == "numerical_failure";
}

}  // namespace

std::string to_csv(const SolveReport& report) {
  std::ostringstream out;
  out << kCsvHeader << "\n";
  for (const OuterRow& r : report.rows) {
    out << r.l << ',' << num17(r.f) << ',' << num17(r.v) << ','
        << num17(r.phi_inf) << ',' << num17(r.psi_inf) << ',' << num17(r.beta)
        << ',' << num17(r.rho) << ',' << r.inner_iterations << "\n";
  }
  const Terminal& t = report.terminal;
  out << "#terminal," << to_string(t.kind) << ',' << num17(t.f) << ','
      << num17(t.v) << ',' << num17(t.phi_inf) << ',' << num17(t.psi_inf)
      << ',' << num17(t.beta) << ',' << num17(t.rho) << "\n";
  return out.str();
}

void write_csv(const SolveReport& report, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot open '" + path + "' for writing");
  out << to_csv(report);
}

ParsedReport parse_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw FormatError("csv: empty input");
  if (line == kCsvHeader + std::string("\r")) line.pop_back();
  if (line != kCsvHeader) {
    throw FormatError("csv: unexpected header '" + line + "'");
  }

  ParsedReport out;
  bool saw_terminal = false;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::vector<std::string> fields = split(line, ',');
    if (fields[0] == "#terminal") {
      if (fields.size() != 8) throw FormatError("csv: malformed terminal row");
      if (!known_kind(fields[1])) {
        throw FormatError("csv: unknown termination kind '" + fields[1] + "'");
      }
      out.terminal_kind = fields[1];
      out.f = parse_double(fields[2]);
      out.v = parse_double(fields[3]);
      out.phi_inf = parse_double(fields[4]);
      out.psi_inf = parse_double(fields[5]);
      out.beta = parse_double(fields[6]);
      out.rho = parse_double(fields[7]);
      saw_terminal = true;
      continue;
    }
    if (fields.size() != 8) {
      throw FormatError("csv: expected 8 fields, got " +
                        std::to_string(fields.size()));
    }
    OuterRow row;
    row.l = static_cast<int>(parse_double(fields[0]));
    row.f = parse_double(fields[1]);
    row.v = parse_double(fields[2]);
    row.phi_inf = parse_double(fields[3]);
    row.psi_inf = parse_double(fields[4]);
    row.beta = parse_double(fields[5]);
    row.rho = parse_double(fields[6]);
    row.inner_iterations = static_cast<int>(parse_double(fields[7]));
    out.rows.push_back(row);
  }
  if (out.rows.empty()) throw FormatError("csv: no data rows");
  if (!saw_terminal) throw FormatError("csv: missing #terminal row");
  return out;
}

ParsedReport parse_csv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open '" + path + "'");
  return parse_csv(in);
}

std::string to_json(const SolveReport& report, bool include_inner) {
  nlohmann::json j;
  j["problem"] = report.problem;
  j["total_iterations"] = report.total_iterations;
  j["config"] = {{"beta0", report.config.beta0},
                 {"delta", report.config.delta},
                 {"sigma", report.config.sigma},
                 {"epsilon", report.config.epsilon},
                 {"max_total_iterations", report.config.max_total_iterations},
                 {"max_inner_per_outer", report.config.max_inner_per_outer},
                 {"t_max", report.config.t_max},
                 {"feasibility_tol", report.config.feasibility_tol}};

  nlohmann::json rows = nlohmann::json::array();
  for (const OuterRow& r : report.rows) {
    rows.push_back({{"l", r.l},
                    {"f", r.f},
                    {"v", r.v},
                    {"phi_inf", r.phi_inf},
                    {"psi_inf", r.psi_inf},
                    {"beta", r.beta},
                    {"rho", r.rho},
                    {"k", r.inner_iterations}});
  }
  j["rows"] = std::move(rows);

  const Terminal& t = report.terminal;
  j["terminal"] = {{"kind", to_string(t.kind)},
                   {"x", std::vector<double>(t.x.begin(), t.x.end())},
                   {"u", std::vector<double>(t.u.begin(), t.u.end())},
                   {"f", t.f},
                   {"v", t.v},
                   {"v_inf", t.v_inf},
                   {"phi_inf", t.phi_inf},
                   {"psi_inf", t.psi_inf},
                   {"beta", t.beta},
                   {"rho", t.rho},
                   {"stationarity_inf", t.stationarity_inf},
                   {"detail", t.detail}};
  if (t.kind == TerminationKind::SingularStationary) {
    j["terminal"]["null_multiplier"] =
        std::vector<double>(t.null_multiplier.begin(), t.null_multiplier.end());
  }

  if (include_inner) {
    nlohmann::json inner = nlohmann::json::array();
    for (const InnerRow& r : report.inner) {
      inner.push_back({{"l", r.l},
                       {"k", r.k},
                       {"f", r.f},
                       {"v", r.v},
                       {"phi_inf", r.phi_inf},
                       {"psi_inf", r.psi_inf},
                       {"alpha", r.alpha},
                       {"backtracks", r.backtracks},
                       {"xi", r.xi},
                       {"x", std::vector<double>(r.x.begin(), r.x.end())}});
    }
    j["inner"] = std::move(inner);
  }
  return j.dump(2);
}

void write_json(const SolveReport& report, const std::string& path,
                bool include_inner) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot open '" + path + "' for writing");
  out << to_json(report, include_inner) << "\n";
}

std::string human_table(const SolveReport& report) {
  std::ostringstream out;
  char line[160];
  std::snprintf(line, sizeof(line), "%3s  %12s %12s %12s %12s %12s %12s %4s\n",
                "l", "f", "v", "|phi|_inf", "|psi|_inf", "beta", "rho", "k");
  out << line;
  for (const OuterRow& r : report.rows) {
    std::snprintf(line, sizeof(line), "%3d  %12s %12s %12s %12s %12s %12s %4s\n",
                  r.l, num4(r.f).c_str(), num4(r.v).c_str(),
                  num4(r.phi_inf).c_str(), num4(r.psi_inf).c_str(),
                  num4(r.beta).c_str(), num4(r.rho).c_str(),
                  r.l == 0 ? "-" : std::to_string(r.inner_iterations).c_str());
    out << line;
  }
  return out.str();
}

std::string human_inner_table(const SolveReport& report) {
  std::ostringstream out;
  char line[200];
  int current_l = -1;
  for (const InnerRow& r : report.inner) {
    if (r.l != current_l) {
      current_l = r.l;
      out << "inner iterations of outer step " << current_l << ":\n";
      std::snprintf(line, sizeof(line),
                    "  %3s %12s %12s %12s %12s %8s %10s %10s %6s %6s %3s\n", "k",
                    "f", "v", "|phi|_inf", "|psi|_inf", "alpha", "xi", "|g|_inf",
                    "step", "sigma", "st");
      out << line;
    }
    std::snprintf(line, sizeof(line),
                  "  %3d %12s %12s %12s %12s %8s %10s %10s %6s %6s %3s  x = (",
                  r.k, num4(r.f).c_str(), num4(r.v).c_str(),
                  num4(r.phi_inf).c_str(), num4(r.psi_inf).c_str(),
                  num4(r.alpha).c_str(), num4(r.xi).c_str(),
                  num4(r.g_inf).c_str(), num4(r.step_norm).c_str(),
                  num4(r.rr_ratio).c_str(), r.stalled ? "s" : "-");
    out << line;
    for (Index i = 0; i < r.x.size(); ++i) {
      out << (i > 0 ? ", " : "") << num4(r.x[i]);
    }
    out << ")\n";
  }
  return out.str();
}

std::string to_string(RateVerdict verdict) {
  switch (verdict) {
    case RateVerdict::Pass: return "pass";
    case RateVerdict::Fail: return "fail";
    case RateVerdict::NotApplicable: return "n/a";
  }
  return "n/a";
}

namespace {

RateVerdict rate_check(const std::vector<OuterRow>& rows,
                       double OuterRow::*param, double OuterRow::*residual,
                       double exponent) {
  std::vector<std::size_t> reductions;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    if (rows[i].*param < rows[i - 1].*param) reductions.push_back(i);
  }
  if (reductions.size() < 2) return RateVerdict::NotApplicable;
  for (std::size_t j = reductions.size() - 2; j < reductions.size(); ++j) {
    const std::size_t i = reductions[j];
    const double prev = rows[i - 1].*residual;
    const double cur = rows[i].*residual;
    if (!(cur <= std::pow(prev, exponent))) return RateVerdict::Fail;
  }
  return RateVerdict::Pass;
}

}  // namespace

RateVerdict rho_rate_check(const std::vector<OuterRow>& rows, double exponent) {
  return rate_check(rows, &OuterRow::rho, &OuterRow::psi_inf, exponent);
}

RateVerdict beta_rate_check(const std::vector<OuterRow>& rows, double exponent) {
  return rate_check(rows, &OuterRow::beta, &OuterRow::phi_inf, exponent);
}

CompareResult compare_reports(const ParsedReport& run, const ParsedReport& ref,
                              const CompareOptions& options) {
  CompareResult out;

  auto add = [&](const std::string& field, const std::string& a,
                 const std::string& b, bool ok) {
    out.fields.push_back({field, a, b, ok});
  };

  add("terminal_kind", run.terminal_kind, ref.terminal_kind,
      run.terminal_kind == ref.terminal_kind);
  add("f", num17(run.f), num17(ref.f), std::abs(run.f - ref.f) <= options.tol_f);
  add("v", num17(run.v), num17(ref.v), std::abs(run.v - ref.v) <= options.tol_v);

  const RateVerdict run_rho = rho_rate_check(run.rows, options.rate_exponent);
  const RateVerdict ref_rho = rho_rate_check(ref.rows, options.rate_exponent);
  add("rate_rho_psi", to_string(run_rho), to_string(ref_rho), run_rho == ref_rho);

  const RateVerdict run_beta = beta_rate_check(run.rows, options.rate_exponent);
  const RateVerdict ref_beta = beta_rate_check(ref.rows, options.rate_exponent);
  add("rate_beta_phi", to_string(run_beta), to_string(ref_beta),
      run_beta == ref_beta);

  out.pass = true;
  for (const FieldDiff& f : out.fields) out.pass = out.pass && f.ok;
  return out;
}

}  // namespace pdip
