#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <span>

namespace benfrag {

template <typename T>
struct QuadratureResult {
  T value{};
  double error_estimate = 0.0;
  bool converged = true;
  std::size_t evaluations = 0;
};

namespace detail {

inline double magnitude(double v) { return std::abs(v); }
inline double magnitude(const std::complex<double>& v) {
  return std::max(std::abs(v.real()), std::abs(v.imag()));
}

template <typename T, typename F>
void simpson_step(F& f, double a, double b, T fa, T fm, T fb, T whole, double tol, int depth,
                  std::size_t limit, QuadratureResult<T>& out) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const T flm = f(lm);
  const T frm = f(rm);
  out.evaluations += 2;
  const double h = (b - a) / 12.0;
  const T left = h * (fa + 4.0 * flm + fm);
  const T right = h * (fm + 4.0 * frm + fb);
  const T delta = left + right - whole;
  const double err = magnitude(delta) / 15.0;
  if (err <= tol || depth <= 0 || out.evaluations >= limit || !(m > a && m < b)) {
    if (err > tol) out.converged = false;
    out.value += left + right + delta / 15.0;
    out.error_estimate += err;
    return;
  }
  simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1, limit, out);
  simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1, limit, out);
}

}  // namespace detail

/// Adaptive Simpson with Richardson correction. `tol` is an absolute
/// tolerance on the whole interval; each half receives half the budget.
/// Works for real- and complex-valued integrands (componentwise error).
/// Refinement stops, unconverged, after `max_evaluations` integrand calls.
template <typename T, typename F>
QuadratureResult<T> adaptive_simpson(F&& f, double a, double b, double tol, int max_depth = 60,
                                     std::size_t max_evaluations = 10'000'000) {
  QuadratureResult<T> out;
  if (!(b > a)) return out;
  const T fa = f(a);
  const T fb = f(b);
  const T fm = f(0.5 * (a + b));
  out.evaluations = 3;
  const T whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  detail::simpson_step(f, a, b, fa, fm, fb, whole, tol, max_depth, max_evaluations, out);
  return out;
}

/// Integrates over consecutive panels [cuts[i], cuts[i+1]], sharing `tol`
/// in proportion to panel width.
template <typename T, typename F>
QuadratureResult<T> adaptive_simpson_panels(F&& f, std::span<const double> cuts, double tol,
                                            int max_depth = 60,
                                            std::size_t max_evaluations = 10'000'000) {
  QuadratureResult<T> total;
  if (cuts.size() < 2) return total;
  const double span_width = cuts.back() - cuts.front();
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    const double width = cuts[i + 1] - cuts[i];
    if (!(width > 0)) continue;
    const std::size_t left =
        max_evaluations > total.evaluations ? max_evaluations - total.evaluations : 0;
    auto part =
        adaptive_simpson<T>(f, cuts[i], cuts[i + 1], tol * width / span_width, max_depth, left);
    total.value += part.value;
    total.error_estimate += part.error_estimate;
    total.converged = total.converged && part.converged;
    total.evaluations += part.evaluations;
  }
  return total;
}

}  // namespace benfrag
