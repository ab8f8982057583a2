#include "benfrag/output.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "benfrag/error.hpp"

namespace benfrag {

namespace {

std::string printf_double(const char* fmt, double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, fmt, x);
  return buf;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) {
    while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' ')) cell.pop_back();
    while (!cell.empty() && cell.front() == ' ') cell.erase(cell.begin());
    out.push_back(cell);
  }
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_cell(const std::string& cell, std::size_t line_no) {
  std::size_t used = 0;
  double value = 0.0;
  try {
    value = std::stod(cell, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != cell.size())
    throw ValidationError("line " + std::to_string(line_no) + ": '" + cell + "' is not a number");
  return value;
}

}  // namespace

Format parse_format(const std::string& name) {
  if (name == "csv") return Format::csv;
  if (name == "json") return Format::json;
  throw ValidationError("format must be csv or json, got '" + name + "'");
}

std::string format_double(double x) { return printf_double("%.17g", x); }

std::string format_scientific(double x) { return printf_double("%.16e", x); }

nlohmann::json json_number(double x) {
  if (!std::isfinite(x)) return nullptr;
  return x;
}

std::string render(const nlohmann::json& j) { return j.dump(2) + "\n"; }

// ---------------------------------------------------------------------------

std::string pieces_csv(const FragmentationRun& run) {
  const int m = run.m();
  std::string out = "path,log10_volume";
  for (int i = 1; i <= m; ++i) out += ",edge_" + std::to_string(i);
  for (int d = 1; d <= m; ++d) out += ",c_" + std::to_string(d);
  out += '\n';
  std::vector<std::vector<double>> contents;
  for (int d = 1; d <= m; ++d) contents.push_back(run.log10_contents(d));
  for (std::size_t i = 0; i < run.size(); ++i) {
    out += run.path(i).to_string();
    out += ',';
    out += format_double(run.log10_volume(i));
    for (double e : run.log_edges(i)) {
      out += ',';
      out += format_double(e);
    }
    for (const auto& c : contents) {
      out += ',';
      out += format_scientific(std::pow(10.0, c[i]));
    }
    out += '\n';
  }
  return out;
}

nlohmann::json pieces_json(const FragmentationRun& run) {
  nlohmann::json pieces = nlohmann::json::array();
  std::vector<std::vector<double>> contents;
  for (int d = 1; d <= run.m(); ++d) contents.push_back(run.log10_contents(d));
  for (std::size_t i = 0; i < run.size(); ++i) {
    nlohmann::json piece;
    piece["path"] = run.path(i).to_string();
    piece["log10_volume"] = json_number(run.log10_volume(i));
    nlohmann::json edges = nlohmann::json::array();
    for (double e : run.log_edges(i)) edges.push_back(json_number(e));
    piece["edges"] = edges;
    nlohmann::json c = nlohmann::json::array();
    for (const auto& column : contents) c.push_back(json_number(std::pow(10.0, column[i])));
    piece["contents"] = c;
    pieces.push_back(std::move(piece));
  }
  return {{"config", run.config().to_json()}, {"pieces", pieces}};
}

// ---------------------------------------------------------------------------

std::string convergence_csv(std::span<const ConvergenceRow> rows) {
  std::string out = "m,N,s,trials,mean_P,var_P,theory_log10_s,mellin_bound,abs_error\n";
  for (const auto& r : rows) {
    out += std::to_string(r.m) + ',' + std::to_string(r.N) + ',' + format_double(r.s) + ',' +
           std::to_string(r.trials) + ',' + format_double(r.mean_P) + ',' +
           format_double(r.var_P) + ',' + format_double(r.theory) + ',' +
           format_double(r.bound) + ',' + format_double(r.abs_error) + '\n';
  }
  return out;
}

nlohmann::json convergence_json(std::span<const ConvergenceRow> rows) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& r : rows) {
    nlohmann::json j{{"m", r.m},
                     {"N", r.N},
                     {"s", r.s},
                     {"trials", r.trials},
                     {"mean_P", json_number(r.mean_P)},
                     {"var_P", json_number(r.var_P)},
                     {"theory_log10_s", r.theory},
                     {"mellin_bound", json_number(r.bound)},
                     {"abs_error", json_number(r.abs_error)},
                     {"within_bound", r.within_bound}};
    if (!r.flag.empty()) j["flag"] = r.flag;
    out.push_back(std::move(j));
  }
  return out;
}

// ---------------------------------------------------------------------------

std::string conjecture_csv(std::span<const ConjectureRow> rows) {
  std::string out = "m,d,N,count,ks,chi_square,monotone_flag\n";
  for (const auto& r : rows) {
    out += std::to_string(r.m) + ',' + std::to_string(r.d) + ',' + std::to_string(r.N) + ',' +
           std::to_string(r.count) + ',' + format_double(r.ks) + ',' +
           format_double(r.chi_square) + ',' + (r.monotone ? "1" : "0") + '\n';
  }
  return out;
}

nlohmann::json conjecture_json(std::span<const ConjectureRow> rows) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& r : rows) {
    nlohmann::json j{{"m", r.m},
                     {"d", r.d},
                     {"N", r.N},
                     {"count", r.count},
                     {"ks", json_number(r.ks)},
                     {"chi_square", json_number(r.chi_square)},
                     {"monotone_flag", r.monotone}};
    if (!r.flag.empty()) j["flag"] = r.flag;
    out.push_back(std::move(j));
  }
  return out;
}

// ---------------------------------------------------------------------------

namespace {

void check_bounds(std::size_t profiles, std::size_t bounds) {
  if (bounds != 0 && bounds != profiles)
    throw ValidationError("need one dependence bound per profile");
}

}  // namespace

std::string dependency_csv(std::span<const DependencyProfile> profiles,
                           std::span<const double> bounds) {
  std::string out =
      "m,N,s,runs,cutoff_ceil_ln_N,mu,pair_count,both_count,mean_phiphi,reference,"
      "high_dependence_fraction,low_dependence_deviation,dependence_bound\n";
  check_bounds(profiles.size(), bounds.size());
  for (std::size_t p = 0; p < profiles.size(); ++p) {
    const auto& pr = profiles[p];
    const std::string tail = format_double(pr.high_dependence_fraction()) + ',' +
                             format_double(pr.low_dependence_deviation()) + ',' +
                             format_double(p < bounds.size() ? bounds[p] : NAN) + '\n';
    for (const auto& st : pr.strata) {
      out += std::to_string(pr.m) + ',' + std::to_string(pr.N) + ',' + format_double(pr.s) + ',' +
             std::to_string(pr.runs) + ',' + std::to_string(pr.cutoff) + ',' +
             std::to_string(st.mu) + ',' + std::to_string(st.pair_count) + ',' +
             std::to_string(st.both_count) + ',' + format_double(st.mean_phiphi()) + ',' +
             format_double(pr.reference) + ',' + tail;
    }
  }
  return out;
}

nlohmann::json dependency_json(std::span<const DependencyProfile> profiles,
                               std::span<const double> bounds) {
  check_bounds(profiles.size(), bounds.size());
  nlohmann::json out = nlohmann::json::array();
  for (std::size_t p = 0; p < profiles.size(); ++p) {
    const auto& pr = profiles[p];
    nlohmann::json strata = nlohmann::json::array();
    for (const auto& st : pr.strata)
      strata.push_back({{"mu", st.mu},
                        {"pair_count", st.pair_count},
                        {"both_count", st.both_count},
                        {"mean_phiphi", json_number(st.mean_phiphi())}});
    out.push_back({{"m", pr.m},
                   {"N", pr.N},
                   {"s", pr.s},
                   {"base", pr.base},
                   {"runs", pr.runs},
                   {"leaves", pr.leaves},
                   {"cutoff", pr.cutoff},
                   {"cutoff_rule", "ceil(ln N)"},
                   {"reference", pr.reference},
                   {"high_dependence_ordered_pairs", pr.high_dependence_ordered_pairs()},
                   {"high_dependence_fraction", json_number(pr.high_dependence_fraction())},
                   {"low_dependence_deviation", json_number(pr.low_dependence_deviation())},
                   {"dependence_bound", json_number(p < bounds.size() ? bounds[p] : NAN)},
                   {"strata", strata}});
  }
  return out;
}

// ---------------------------------------------------------------------------

nlohmann::json stats_json(const ProportionCurve& curve) {
  const auto& stats = curve.stats;
  nlohmann::json j;
  j["base"] = stats.base();
  j["count"] = stats.count();
  j["digit_counts"] = stats.digit_counts();
  j["digit_law"] = digit_law(stats.base());
  j["ks"] = json_number(mantissa_discrepancy(stats));
  try {
    const ChiSquare chi = chi_square_digits(stats);
    j["chi_square"] = {{"statistic", json_number(chi.statistic)}, {"dof", chi.dof}};
  } catch (const ValidationError& e) {
    j["chi_square"] = {{"statistic", nullptr}, {"dof", stats.base() - 2}, {"flag", e.what()}};
  }
  nlohmann::json table = nlohmann::json::array();
  for (const auto& p : curve.points)
    table.push_back({{"s", p.s}, {"P", p.proportion}, {"log_B_s", p.benford}});
  j["table"] = table;
  return j;
}

std::string stats_csv(const ProportionCurve& curve) {
  std::string out = "s,P,log_B_s\n";
  for (const auto& p : curve.points)
    out += format_double(p.s) + ',' + format_double(p.proportion) + ',' +
           format_double(p.benford) + '\n';
  return out;
}

std::string mellin_csv(const MellinReport& report) {
  std::string out = "ell,magnitude,magnitude_pow_n\n";
  for (std::size_t i = 0; i < report.magnitudes.size(); ++i) {
    const double mag = report.magnitudes[i];
    out += std::to_string(i + 1) + ',' + format_double(mag) + ',' +
           format_double(std::pow(mag, report.factors)) + '\n';
  }
  return out;
}

// ---------------------------------------------------------------------------

std::vector<double> read_csv_column(const std::string& path, const std::string& column) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) throw ValidationError("'" + path + "' is empty");
  const auto header = split_csv_line(line);
  std::size_t index = header.size();
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] == column) index = i;
  if (index == header.size())
    throw ValidationError("'" + path + "' has no column '" + column + "'");
  std::vector<double> values;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto cells = split_csv_line(line);
    if (cells.size() <= index)
      throw ValidationError("line " + std::to_string(line_no) + " is too short");
    values.push_back(parse_cell(cells[index], line_no));
  }
  return values;
}

void write_text(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text << std::flush;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write '" + path + "'");
  out << text;
  if (!out) throw ValidationError("failed writing '" + path + "'");
}

}  // namespace benfrag
