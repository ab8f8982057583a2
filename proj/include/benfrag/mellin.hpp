#pragma once

#include <complex>
#include <cstdint>
#include <vector>

#include "json.hpp"

#include "benfrag/density.hpp"

namespace benfrag {

/// Closed subinterval [a, b] of [0, 1] for mantissa probabilities.
struct UnitInterval {
  double a = 0.0;
  double b = 1.0;

  double width() const { return b - a; }
};

void validate(const UnitInterval& interval);

/// Mellin transform of a density at s = 1 - 2 pi i ell / ln(base).
struct MellinPoint {
  std::int64_t ell = 0;
  int base = 10;
  std::complex<double> value{1.0, 0.0};
};

/// Angular frequency 2 pi ell / ln(base) of the ell-th mantissa harmonic.
double harmonic_frequency(std::int64_t ell, int base);

/// 1 / (1 - 2 pi i ell / ln B), the transform of the uniform density.
std::complex<double> uniform_mellin(std::int64_t ell, int base);

/// Adaptive-Simpson evaluation of the transform, integrated in x = -ln t where
/// the oscillation has constant period. Throws NumericalError when the
/// absolute tolerance cannot be met.
std::complex<double> mellin_quadrature(const Density& d, std::int64_t ell, int base,
                                       double tolerance = 1e-10);

/// The transform at one harmonic. ell = 0 gives exactly 1. Uniform and
/// (unreflected) power densities use closed forms; everything else goes
/// through mellin_quadrature.
MellinPoint mellin_at(const Density& d, std::int64_t ell, int base);

/// |M(ell)| for ell = 1..ell_max of the symmetrized density. Reused for any
/// number of factors; |M(-ell)| = |M(ell)| for real densities.
struct MellinSpectrum {
  Density density = Density::uniform();
  int base = 10;
  std::vector<double> magnitudes;

  int ell_max() const { return static_cast<int>(magnitudes.size()); }
};

MellinSpectrum mellin_spectrum(const Density& d, int base, int ell_max, unsigned threads = 1);

/// Truncated condition sum over 0 < |ell| <= ell_max for `factors` identical
/// factors, together with the spectrum it was built from.
struct MellinReport {
  nlohmann::json density;
  bool symmetrized = true;
  int base = 10;
  int factors = 1;
  int ell_max = 0;
  std::vector<double> magnitudes;
  double condition_sum = 0.0;
  /// Integral comparison bound on the ell > ell_max remainder, both signs
  /// included; +inf when factors == 1.
  double tail_estimate = 0.0;
};

/// sum over 0 < |ell| <= ell_max of |M(ell)|^exponent; exponent 0 gives 2 ell_max.
double truncated_condition_sum(const MellinSpectrum& spectrum, int exponent);
double tail_estimate(const MellinSpectrum& spectrum, int exponent);

MellinReport condition_sum(const MellinSpectrum& spectrum, int factors);
MellinReport condition_sum(const Density& d, int factors, int base, int ell_max,
                           unsigned threads = 1);

/// (b - a) times the condition sum: bounds |Prob(log_B X mod 1 in [a, b]) - (b - a)|
/// for a product X of `factors` independent cuts.
double expectation_error_bound(const MellinSpectrum& spectrum, int factors,
                               const UnitInterval& interval);
double expectation_error_bound(const Density& d, int factors, int base,
                               const UnitInterval& interval, int ell_max);

/// Error bound for a pair of pieces sharing at most `cutoff` factors out of
/// `total_factors`: the same sum with T = total_factors - (cutoff + 1) factors.
double dependence_bound(const MellinSpectrum& spectrum, int total_factors, int cutoff,
                        const UnitInterval& interval);
double dependence_bound(const Density& d, int total_factors, int cutoff, int base,
                        const UnitInterval& interval, int ell_max);

nlohmann::json to_json(const MellinReport& report);

}  // namespace benfrag
