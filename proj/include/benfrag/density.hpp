#pragma once

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "benfrag/rng.hpp"

namespace benfrag {

enum class DensityKind { uniform, power, triangular, table };

/// How the base shape is read: as is, reflected (t -> 1 - t), or averaged with
/// its reflection.
enum class DensityTransform { none, mirrored, symmetrized };

struct Knot {
  double t = 0.0;
  double value = 0.0;
};

/// A probability density of a cut proportion on (0, 1).
///
/// Values are immutable once constructed. Every factory checks, by adaptive
/// quadrature, that the density integrates to one within 1e-9.
///
///   uniform            f(t) = 1
///   power(alpha)       f(t) = (alpha + 1) t^alpha, alpha >= 0
///   triangular(mode)   rises linearly to 2 at `mode`, then falls to 0 at 1
///   table(knots)       piecewise linear through the knots, zero outside them,
///                      rescaled to unit mass
class Density {
 public:
  static Density uniform();
  static Density power(double alpha);
  static Density triangular(double mode);
  static Density table(std::vector<Knot> knots);

  /// Parses {"kind": "uniform"} | {"kind": "power", "alpha": a} |
  /// {"kind": "triangular", "mode": c} | {"kind": "table", "knots": [[t, f], ...]},
  /// with an optional "transform": "mirrored" | "symmetrized".
  static Density from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
  std::string describe() const;

  DensityKind kind() const noexcept { return kind_; }
  DensityTransform transform() const noexcept { return transform_; }
  double alpha() const noexcept { return param_; }
  double mode() const noexcept { return param_; }
  const std::vector<Knot>& knots() const noexcept { return knots_; }

  /// True when f(t) = 1 identically, so the uniform closed forms apply.
  bool is_uniform() const noexcept;

  /// f(t) on [0, 1] (endpoint values are the one-sided limits); zero outside.
  double pdf(double t) const;

  /// Upper bound on f over (0, 1).
  double max_value() const;

  /// Interior points where f is not smooth (kinks), sorted and deduplicated.
  std::vector<double> breakpoints() const;

  /// One cut proportion strictly inside (0, 1). Draws that land on 0 or 1
  /// are discarded and redrawn from the same stream.
  double draw(CounterRng& rng) const;

  friend Density mirror(const Density& d);
  friend Density symmetrize(const Density& d);

  bool operator==(const Density&) const;

 private:
  Density(DensityKind kind, double param, std::vector<Knot> knots,
          DensityTransform transform = DensityTransform::none);

  double base_pdf(double t) const;
  double base_draw(CounterRng& rng) const;
  std::vector<double> base_breakpoints() const;
  void validate_mass() const;

  DensityKind kind_;
  double param_ = 0.0;
  std::vector<Knot> knots_;
  std::vector<double> cumulative_;  // table: mass to the left of each knot
  DensityTransform transform_ = DensityTransform::none;
};

/// Density of 1 - P when P has density d: g(t) = f(1 - t).
Density mirror(const Density& d);

/// g(t) = (f(t) + f(1 - t)) / 2. Idempotent.
Density symmetrize(const Density& d);

/// `count` independent cuts from the stream named by `rng`.
std::vector<double> sample(const Density& d, RngSpec rng, std::size_t count);

/// Quadrature of f over (0, 1), split at the density's kinks.
double total_mass(const Density& d);

}  // namespace benfrag
