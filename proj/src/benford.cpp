#include "benfrag/benford.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "benfrag/error.hpp"

namespace benfrag {

namespace {

// Ties between a mantissa and a threshold within this many units resolve
// toward inclusion.
constexpr double kTie = 4.0 * std::numeric_limits<double>::epsilon();

void check_base(int base) {
  if (base < 2) throw ValidationError("base must be at least 2");
}

double log_base(int base, double s) {
  if (base == 10) return std::log10(s);
  return std::log10(s) / std::log10(static_cast<double>(base));
}

}  // namespace

double mantissa(int base, double log10_value) {
  check_base(base);
  if (!std::isfinite(log10_value)) throw ValidationError("significand needs a finite log value");
  const double y = base == 10 ? log10_value : log10_value / std::log10(static_cast<double>(base));
  double frac = y - std::floor(y);
  if (frac >= 1.0) frac = std::nextafter(1.0, 0.0);
  return frac;
}

double significand(int base, double log10_value) {
  const double b = static_cast<double>(base);
  const double s = std::pow(b, mantissa(base, log10_value));
  return std::clamp(s, 1.0, std::nextafter(b, 0.0));
}

int leading_digit(int base, double log10_value) {
  const double mant = mantissa(base, log10_value);
  int digit = 1;
  for (int d = 2; d < base; ++d) {
    if (log_base(base, d) <= mant + kTie)
      digit = d;
    else
      break;
  }
  return digit;
}

int phi_s(int base, double s, double log10_value) {
  check_base(base);
  if (!(s >= 1.0 && s < base)) throw ValidationError("phi_s needs s in [1, B)");
  return mantissa(base, log10_value) <= log_base(base, s) + kTie ? 1 : 0;
}

double benford_cdf(int base, double s) {
  check_base(base);
  if (!(s >= 1.0 && s <= base)) throw ValidationError("benford_cdf needs s in [1, B]");
  return log_base(base, s);
}

std::vector<double> digit_law(int base) {
  check_base(base);
  std::vector<double> law(static_cast<std::size_t>(base - 1));
  for (int d = 1; d < base; ++d)
    law[static_cast<std::size_t>(d - 1)] = log_base(base, (d + 1.0) / d);
  return law;
}

SignificandStats::SignificandStats(int base, std::span<const double> log10_values)
    : base_(base), digit_counts_(static_cast<std::size_t>(std::max(base - 1, 1)), 0) {
  check_base(base);
  mantissas_.reserve(log10_values.size());
  for (double v : log10_values) {
    mantissas_.push_back(mantissa(base, v));
    ++digit_counts_[static_cast<std::size_t>(leading_digit(base, v) - 1)];
  }
  std::sort(mantissas_.begin(), mantissas_.end());
}

std::size_t SignificandStats::count_at_most(double s) const {
  if (!(s >= 1.0 && s < base_)) throw ValidationError("P(s) needs s in [1, B)");
  const double threshold = log_base(base_, s) + kTie;
  const auto below = std::upper_bound(mantissas_.begin(), mantissas_.end(), threshold);
  return static_cast<std::size_t>(below - mantissas_.begin());
}

double SignificandStats::proportion(double s) const {
  if (mantissas_.empty()) throw ValidationError("P(s) of an empty sample");
  return static_cast<double>(count_at_most(s)) / static_cast<double>(count());
}

SignificandStats merge(const SignificandStats& a, const SignificandStats& b) {
  if (a.base_ != b.base_) throw ValidationError("cannot merge statistics of different bases");
  SignificandStats out;
  out.base_ = a.base_;
  out.digit_counts_ = a.digit_counts_;
  for (std::size_t i = 0; i < out.digit_counts_.size(); ++i)
    out.digit_counts_[i] += b.digit_counts_[i];
  out.mantissas_.resize(a.mantissas_.size() + b.mantissas_.size());
  std::merge(a.mantissas_.begin(), a.mantissas_.end(), b.mantissas_.begin(), b.mantissas_.end(),
             out.mantissas_.begin());
  return out;
}

ProportionCurve proportion_curve(std::span<const double> log10_values, int base,
                                 std::span<const double> s_grid) {
  if (log10_values.empty()) throw ValidationError("proportion curve of an empty sample");
  ProportionCurve curve{SignificandStats(base, log10_values), {}};
  curve.points.reserve(s_grid.size());
  for (double s : s_grid)
    curve.points.push_back({s, curve.stats.proportion(s), benford_cdf(base, s)});
  return curve;
}

std::vector<double> log_spaced_grid(int base, int points) {
  check_base(base);
  if (points < 1) throw ValidationError("s-grid needs at least one point");
  std::vector<double> grid(static_cast<std::size_t>(points));
  for (int k = 1; k <= points; ++k)
    grid[static_cast<std::size_t>(k - 1)] =
        std::pow(static_cast<double>(base), static_cast<double>(k) / (points + 1));
  return grid;
}

double mantissa_discrepancy(const SignificandStats& stats) {
  const auto& u = stats.mantissas();
  if (u.empty()) throw ValidationError("discrepancy of an empty sample");
  const double n = static_cast<double>(u.size());
  double d = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double above = static_cast<double>(i + 1) / n - u[i];
    const double below = u[i] - static_cast<double>(i) / n;
    d = std::max({d, above, below});
  }
  return d;
}

double mantissa_discrepancy(std::span<const double> log10_values, int base) {
  if (log10_values.empty()) throw ValidationError("discrepancy of an empty sample");
  return mantissa_discrepancy(SignificandStats(base, log10_values));
}

ChiSquare chi_square_digits(const SignificandStats& stats) {
  const int base = stats.base();
  const std::size_t needed = 5 * static_cast<std::size_t>(base - 1);
  if (stats.count() < needed)
    throw ValidationError("chi-square needs at least " + std::to_string(needed) + " values");
  const auto law = digit_law(base);
  const double n = static_cast<double>(stats.count());
  double chi = 0.0;
  for (std::size_t d = 0; d < law.size(); ++d) {
    const double expected = n * law[d];
    const double diff = static_cast<double>(stats.digit_counts()[d]) - expected;
    chi += diff * diff / expected;
  }
  return {chi, base - 2};
}

ChiSquare chi_square_digits(std::span<const double> log10_values, int base) {
  return chi_square_digits(SignificandStats(base, log10_values));
}

}  // namespace benfrag
