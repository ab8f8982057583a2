#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace benfrag {

// Every value here enters as log10 of a positive real, so deep fragmentation
// runs never materialize underflowing volumes.

/// frac(log_B x) in [0, 1).
double mantissa(int base, double log10_value);

/// S_B(x) in [1, B).
double significand(int base, double log10_value);

/// Leading base-B digit in 1..B-1.
int leading_digit(int base, double log10_value);

/// 1 iff the significand of x is at most s (ties count as included).
int phi_s(int base, double s, double log10_value);

/// log_B(s) for s in [1, B].
double benford_cdf(int base, double s);

/// F_d = log_B((d + 1) / d) for d = 1..B-1.
std::vector<double> digit_law(int base);

/// Leading-digit counts and the sorted mantissas of a sample.
class SignificandStats {
 public:
  SignificandStats(int base, std::span<const double> log10_values);

  int base() const noexcept { return base_; }
  std::size_t count() const noexcept { return mantissas_.size(); }
  const std::vector<std::uint64_t>& digit_counts() const noexcept { return digit_counts_; }
  const std::vector<double>& mantissas() const noexcept { return mantissas_; }

  /// P(s): fraction of the sample with significand at most s, s in [1, B).
  double proportion(double s) const;
  /// Numerator of proportion(s).
  std::size_t count_at_most(double s) const;

  /// Counts add and mantissas merge; associative and commutative.
  friend SignificandStats merge(const SignificandStats& a, const SignificandStats& b);

 private:
  SignificandStats() = default;

  int base_ = 10;
  std::vector<std::uint64_t> digit_counts_;
  std::vector<double> mantissas_;
};

struct CurvePoint {
  double s = 1.0;
  double proportion = 0.0;
  double benford = 0.0;
};

struct ProportionCurve {
  SignificandStats stats;
  std::vector<CurvePoint> points;
};

ProportionCurve proportion_curve(std::span<const double> log10_values, int base,
                                 std::span<const double> s_grid);

/// `points` values s_k = B^{k / (points + 1)}, k = 1..points: log-spaced inside (1, B).
std::vector<double> log_spaced_grid(int base, int points);

/// Kolmogorov-Smirnov distance between the mantissas and U[0, 1);
/// equals sup_s |P(s) - log_B s|.
double mantissa_discrepancy(const SignificandStats& stats);
double mantissa_discrepancy(std::span<const double> log10_values, int base);

struct ChiSquare {
  double statistic = 0.0;
  int dof = 0;
};

/// Pearson statistic of the leading-digit counts against digit_law(B).
/// Needs at least 5 (B - 1) values.
ChiSquare chi_square_digits(const SignificandStats& stats);
ChiSquare chi_square_digits(std::span<const double> log10_values, int base);

}  // namespace benfrag
