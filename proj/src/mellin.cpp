#include "benfrag/mellin.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include <gsl/gsl_errno.h>
#include <gsl/gsl_sf_gamma.h>

#include "benfrag/error.hpp"
#include "benfrag/parallel.hpp"
#include "benfrag/quadrature.hpp"

namespace benfrag {

namespace {

constexpr int kMaxDepth = 48;
constexpr std::size_t kMaxEvaluations = 20'000'000;

using cd = std::complex<double>;

void check_base(int base) {
  if (base < 2) throw ValidationError("base must be at least 2");
}

/// x^z for x > 0 and Re z > 0; 0^z = 0.
cd cpow(double x, cd z) {
  if (x == 0.0) return 0.0;
  return std::exp(z * std::log(x));
}

/// int_0^1 f(t) t^{s-1} dt for f piecewise linear through `knots`, zero outside.
cd piecewise_linear_mellin(const std::vector<Knot>& knots, cd s) {
  cd total = 0.0;
  for (std::size_t i = 0; i + 1 < knots.size(); ++i) {
    const double a = knots[i].t;
    const double b = knots[i + 1].t;
    if (!(b > a)) continue;
    const double slope = (knots[i + 1].value - knots[i].value) / (b - a);
    const double c0 = knots[i].value - slope * a;
    total += c0 * (cpow(b, s) - cpow(a, s)) / s + slope * (cpow(b, s + 1.0) - cpow(a, s + 1.0)) / (s + 1.0);
  }
  return total;
}

std::vector<Knot> base_knots(const Density& d) {
  switch (d.kind()) {
    case DensityKind::uniform:
      return {{0.0, 1.0}, {1.0, 1.0}};
    case DensityKind::triangular: {
      const double c = d.mode();
      if (c <= 0.0) return {{0.0, 2.0}, {1.0, 0.0}};
      if (c >= 1.0) return {{0.0, 0.0}, {1.0, 2.0}};
      return {{0.0, 0.0}, {c, 2.0}, {1.0, 0.0}};
    }
    case DensityKind::table:
      return d.knots();
    case DensityKind::power:
      break;
  }
  throw ValidationError("density has no piecewise-linear form");
}

/// (alpha + 1) B(s, alpha + 1), the transform of (alpha + 1)(1 - t)^alpha.
cd mirrored_power_mellin(double alpha, cd s) {
  if (alpha == std::floor(alpha) && alpha <= 170.0) {
    cd value = 1.0;
    for (int k = 0; k <= static_cast<int>(alpha); ++k) value *= static_cast<double>(k + 1) / (s + static_cast<double>(k));
    return value;
  }
  static const gsl_error_handler_t* previous = gsl_set_error_handler_off();
  (void)previous;
  gsl_sf_result lnr_s, arg_s, lnr_sa, arg_sa;
  const cd sa = s + alpha + 1.0;
  if (gsl_sf_lngamma_complex_e(s.real(), s.imag(), &lnr_s, &arg_s) != GSL_SUCCESS ||
      gsl_sf_lngamma_complex_e(sa.real(), sa.imag(), &lnr_sa, &arg_sa) != GSL_SUCCESS)
    throw NumericalError("complex log-gamma failed", std::numeric_limits<double>::infinity());
  const cd log_ratio(lnr_s.val - lnr_sa.val, arg_s.val - arg_sa.val);
  return std::exp(log_ratio + std::lgamma(alpha + 2.0));
}

/// Transform of the untransformed shape of `d`, or of its reflection.
cd base_mellin(const Density& d, cd s, bool reflected) {
  if (d.kind() == DensityKind::power) {
    const double a1 = d.alpha() + 1.0;
    return reflected ? mirrored_power_mellin(d.alpha(), s) : a1 / (s + d.alpha());
  }
  std::vector<Knot> knots = base_knots(d);
  if (reflected) {
    std::reverse(knots.begin(), knots.end());
    for (auto& k : knots) k.t = 1.0 - k.t;
  }
  return piecewise_linear_mellin(knots, s);
}

}  // namespace

void validate(const UnitInterval& interval) {
  if (!(interval.a >= 0.0 && interval.a <= interval.b && interval.b <= 1.0))
    throw ValidationError("interval must satisfy 0 <= a <= b <= 1");
}

double harmonic_frequency(std::int64_t ell, int base) {
  check_base(base);
  return 2.0 * std::numbers::pi * static_cast<double>(ell) / std::log(static_cast<double>(base));
}

std::complex<double> uniform_mellin(std::int64_t ell, int base) {
  if (ell == 0) return {1.0, 0.0};
  return 1.0 / std::complex<double>(1.0, -harmonic_frequency(ell, base));
}

std::complex<double> mellin_quadrature(const Density& d, std::int64_t ell, int base,
                                       double tolerance) {
  const double omega = harmonic_frequency(ell, base);
  const double fmax = d.max_value();
  const double tail_budget = 0.01 * tolerance;
  const double x_end = std::max(1.0, std::log(std::max(fmax, 1.0) / tail_budget));

  // Panels run between consecutive cuts in x = -ln t; kinks of f are cut
  // exactly, and interior cuts follow the oscillation period.
  struct Cut {
    double x;
    double t;
    bool kink;
  };
  std::vector<Cut> cuts{{0.0, 1.0, true}};
  for (double b : d.breakpoints()) cuts.push_back({-std::log(b), b, true});
  if (omega != 0.0) {
    const double period = 2.0 * std::numbers::pi / std::abs(omega);
    for (double x = period; x < x_end; x += period) cuts.push_back({x, std::exp(-x), false});
  }
  cuts.push_back({x_end, std::exp(-x_end), false});
  std::sort(cuts.begin(), cuts.end(), [](const Cut& l, const Cut& r) { return l.x < r.x; });
  // A period cut that nearly coincides with a kink would leave a sliver panel.
  std::vector<Cut> merged;
  for (const Cut& c : cuts) {
    if (!merged.empty() && c.x - merged.back().x <= 1e-9 * std::max(1.0, c.x)) {
      if (c.kink && !merged.back().kink) merged.back() = c;
      continue;
    }
    merged.push_back(c);
  }
  cuts.swap(merged);
  while (cuts.size() > 1 && cuts.back().x > x_end) cuts.pop_back();

  // Budget each panel by its share of the envelope fmax e^{-x}.
  const double budget = 0.99 * tolerance;
  std::complex<double> total{0.0, 0.0};
  double error = fmax * std::exp(-x_end);
  bool converged = true;
  std::size_t evaluations = 0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    const double a = cuts[i].x;
    const double b = cuts[i + 1].x;
    // One-sided values at the panel ends, so a jump at a cut is never sampled
    // from the wrong side. Reflected densities evaluate f(1 - t), whose
    // resolution is that of numbers near 1, hence a relative nudge of 1e-12.
    const double t_hi = cuts[i].t * (1.0 - 1e-12);
    const double t_lo = cuts[i + 1].t * (1.0 + 1e-12);
    // M = int_0^inf f(e^{-x}) e^{-x} e^{i omega x} dx
    auto integrand = [&](double x) {
      const double t = std::clamp(std::exp(-x), t_lo, t_hi);
      const double w = d.pdf(t) * t;
      return std::complex<double>(w * std::cos(omega * x), w * std::sin(omega * x));
    };
    // x = u^2 on the first panel absorbs (1 - t)^alpha behaviour at t = 1.
    auto near_one = [&](double u) { return 2.0 * u * integrand(u * u); };
    const double share = std::exp(-a) - std::exp(-b);
    const std::size_t left = kMaxEvaluations > evaluations ? kMaxEvaluations - evaluations : 0;
    auto part = i == 0 ? adaptive_simpson<std::complex<double>>(near_one, 0.0, std::sqrt(b),
                                                                budget * share, kMaxDepth, left)
                       : adaptive_simpson<std::complex<double>>(integrand, a, b, budget * share,
                                                                kMaxDepth, left);
    total += part.value;
    error += part.error_estimate;
    evaluations += part.evaluations;
    converged = converged && part.converged;
  }
  if (!converged || !(error <= tolerance)) {
    std::ostringstream msg;
    msg.precision(3);
    msg << "Mellin quadrature did not converge at ell=" << ell << " (error estimate " << error
        << ", tolerance " << tolerance << ")";
    throw NumericalError(msg.str(), error);
  }
  return total;
}

MellinPoint mellin_at(const Density& d, std::int64_t ell, int base) {
  check_base(base);
  MellinPoint p{ell, base, {1.0, 0.0}};
  if (ell == 0) return p;
  if (d.is_uniform()) {
    p.value = uniform_mellin(ell, base);
    return p;
  }
  const std::complex<double> s(1.0, -harmonic_frequency(ell, base));
  switch (d.transform()) {
    case DensityTransform::none:
      p.value = base_mellin(d, s, false);
      break;
    case DensityTransform::mirrored:
      p.value = base_mellin(d, s, true);
      break;
    case DensityTransform::symmetrized:
      p.value = 0.5 * (base_mellin(d, s, false) + base_mellin(d, s, true));
      break;
  }
  return p;
}

MellinSpectrum mellin_spectrum(const Density& d, int base, int ell_max, unsigned threads) {
  check_base(base);
  if (ell_max < 1) throw ValidationError("ell_max must be at least 1");
  MellinSpectrum spectrum;
  spectrum.density = symmetrize(d);
  spectrum.base = base;
  spectrum.magnitudes.assign(static_cast<std::size_t>(ell_max), 0.0);
  parallel_for(spectrum.magnitudes.size(), threads, [&](std::size_t i) {
    spectrum.magnitudes[i] =
        std::abs(mellin_at(spectrum.density, static_cast<std::int64_t>(i + 1), base).value);
  });
  return spectrum;
}

double truncated_condition_sum(const MellinSpectrum& spectrum, int exponent) {
  if (exponent < 0) throw ValidationError("factor count must be non-negative");
  double sum = 0.0;
  for (double m : spectrum.magnitudes) sum += std::pow(m, exponent);
  return 2.0 * sum;
}

double tail_estimate(const MellinSpectrum& spectrum, int exponent) {
  if (exponent <= 1) return std::numeric_limits<double>::infinity();
  // |M(ell)| ~ c / ell with c fitted at ell_max:
  // sum_{ell > L} (c/ell)^n <= int_L^inf (c/x)^n dx = |M(L)|^n L / (n - 1)
  const double last = spectrum.magnitudes.back();
  const double l = static_cast<double>(spectrum.ell_max());
  return 2.0 * std::pow(last, exponent) * l / static_cast<double>(exponent - 1);
}

MellinReport condition_sum(const MellinSpectrum& spectrum, int factors) {
  if (factors < 1) throw ValidationError("factor count must be at least 1");
  MellinReport r;
  r.density = spectrum.density.to_json();
  r.symmetrized = true;
  r.base = spectrum.base;
  r.factors = factors;
  r.ell_max = spectrum.ell_max();
  r.magnitudes = spectrum.magnitudes;
  r.condition_sum = truncated_condition_sum(spectrum, factors);
  r.tail_estimate = tail_estimate(spectrum, factors);
  return r;
}

MellinReport condition_sum(const Density& d, int factors, int base, int ell_max,
                           unsigned threads) {
  if (factors < 1) throw ValidationError("factor count must be at least 1");
  return condition_sum(mellin_spectrum(d, base, ell_max, threads), factors);
}

double expectation_error_bound(const MellinSpectrum& spectrum, int factors,
                               const UnitInterval& interval) {
  validate(interval);
  if (factors < 1) throw ValidationError("factor count must be at least 1");
  if (interval.width() == 0.0) return 0.0;
  return interval.width() * truncated_condition_sum(spectrum, factors);
}

double expectation_error_bound(const Density& d, int factors, int base,
                               const UnitInterval& interval, int ell_max) {
  validate(interval);
  return expectation_error_bound(mellin_spectrum(d, base, ell_max), factors, interval);
}

double dependence_bound(const MellinSpectrum& spectrum, int total_factors, int cutoff,
                        const UnitInterval& interval) {
  validate(interval);
  if (cutoff < 0 || cutoff >= total_factors)
    throw ValidationError("dependency cutoff M must satisfy 0 <= M <= Nm - 1");
  const int remaining = total_factors - (cutoff + 1);
  return interval.width() * truncated_condition_sum(spectrum, remaining);
}

double dependence_bound(const Density& d, int total_factors, int cutoff, int base,
                        const UnitInterval& interval, int ell_max) {
  if (cutoff < 0 || cutoff >= total_factors)
    throw ValidationError("dependency cutoff M must satisfy 0 <= M <= Nm - 1");
  return dependence_bound(mellin_spectrum(d, base, ell_max), total_factors, cutoff, interval);
}

nlohmann::json to_json(const MellinReport& report) {
  nlohmann::json j;
  j["density"] = report.density;
  j["symmetrized"] = report.symmetrized;
  j["base"] = report.base;
  j["factors"] = report.factors;
  j["ell_max"] = report.ell_max;
  j["condition_sum"] = report.condition_sum;
  if (std::isfinite(report.tail_estimate))
    j["tail_estimate"] = report.tail_estimate;
  else
    j["tail_estimate"] = nullptr;
  j["magnitudes"] = report.magnitudes;
  return j;
}

}  // namespace benfrag
