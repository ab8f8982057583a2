#pragma once

#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "benfrag/benford.hpp"
#include "benfrag/fragmentation.hpp"
#include "benfrag/harness.hpp"
#include "benfrag/mellin.hpp"

namespace benfrag {

// CSV uses 17 significant digits; JSON uses the shortest string that parses
// back to the same double. Either way every number round-trips exactly.
// Non-finite values become "nan"/"inf" in CSV and null in JSON.

enum class Format { csv, json };

Format parse_format(const std::string& name);

std::string format_double(double x);
/// 17 significant digits in scientific notation.
std::string format_scientific(double x);

/// Non-finite values become null.
nlohmann::json json_number(double x);

/// path, log10_volume, edge_1..edge_m, c_1..c_m.
std::string pieces_csv(const FragmentationRun& run);
nlohmann::json pieces_json(const FragmentationRun& run);

/// m, N, s, trials, mean_P, var_P, theory_log10_s, mellin_bound, abs_error.
std::string convergence_csv(std::span<const ConvergenceRow> rows);
nlohmann::json convergence_json(std::span<const ConvergenceRow> rows);

/// m, d, N, count, ks, chi_square, monotone_flag.
std::string conjecture_csv(std::span<const ConjectureRow> rows);
nlohmann::json conjecture_json(std::span<const ConjectureRow> rows);

/// One row per (N, s, mu). `bounds` holds D_{T(M)} per profile.
std::string dependency_csv(std::span<const DependencyProfile> profiles,
                           std::span<const double> bounds);
nlohmann::json dependency_json(std::span<const DependencyProfile> profiles,
                               std::span<const double> bounds);

/// digit_counts, digit_law, ks, chi_square and the (s, P(s), log_B s) table.
nlohmann::json stats_json(const ProportionCurve& curve);
/// The (s, P(s), log_B s) table.
std::string stats_csv(const ProportionCurve& curve);

/// ell, magnitude, magnitude_pow_n.
std::string mellin_csv(const MellinReport& report);

/// dump() with a trailing newline.
std::string render(const nlohmann::json& j);

/// Reads the named column of a CSV file with a header row.
std::vector<double> read_csv_column(const std::string& path, const std::string& column);

/// Writes `text` to `path`, or to stdout when `path` is empty or "-".
void write_text(const std::string& path, const std::string& text);

}  // namespace benfrag
