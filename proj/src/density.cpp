#include "benfrag/density.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "benfrag/error.hpp"
#include "benfrag/quadrature.hpp"

namespace benfrag {

namespace {

constexpr double kMassTolerance = 1e-9;
constexpr double kQuadratureTolerance = 1e-10;
constexpr int kMaxRedraws = 64;

const char* transform_name(DensityTransform t) {
  switch (t) {
    case DensityTransform::none:
      return "none";
    case DensityTransform::mirrored:
      return "mirrored";
    case DensityTransform::symmetrized:
      return "symmetrized";
  }
  return "none";
}

}  // namespace

Density::Density(DensityKind kind, double param, std::vector<Knot> knots,
                 DensityTransform transform)
    : kind_(kind), param_(param), knots_(std::move(knots)), transform_(transform) {
  switch (kind_) {
    case DensityKind::uniform:
      param_ = 0.0;
      break;
    case DensityKind::power:
      if (!std::isfinite(param_) || param_ < 0.0)
        throw ValidationError("power density requires a finite alpha >= 0");
      break;
    case DensityKind::triangular:
      if (!std::isfinite(param_) || param_ < 0.0 || param_ > 1.0)
        throw ValidationError("triangular density requires mode in [0, 1]");
      break;
    case DensityKind::table: {
      if (knots_.size() < 2) throw ValidationError("table density needs at least two knots");
      for (std::size_t i = 0; i < knots_.size(); ++i) {
        const Knot& k = knots_[i];
        if (!std::isfinite(k.t) || !std::isfinite(k.value) || k.value < 0.0)
          throw ValidationError("table knots must be finite with non-negative values");
        if (k.t < 0.0 || k.t > 1.0) throw ValidationError("table knots must lie in [0, 1]");
        if (i > 0 && !(k.t > knots_[i - 1].t))
          throw ValidationError("table knot positions must be strictly increasing");
      }
      cumulative_.assign(knots_.size(), 0.0);
      for (std::size_t i = 1; i < knots_.size(); ++i) {
        cumulative_[i] = cumulative_[i - 1] + 0.5 * (knots_[i - 1].value + knots_[i].value) *
                                                  (knots_[i].t - knots_[i - 1].t);
      }
      const double area = cumulative_.back();
      if (!(area > 0.0)) throw ValidationError("table density has zero mass");
      // Knots already normalized to rounding stay as given, so to_json/from_json round-trips.
      if (std::abs(area - 1.0) > 8 * std::numeric_limits<double>::epsilon()) {
        for (auto& k : knots_) k.value /= area;
        for (auto& c : cumulative_) c /= area;
      }
      cumulative_.back() = 1.0;
      break;
    }
  }
  if (kind_ != DensityKind::table) knots_.clear();
  validate_mass();
}

Density Density::uniform() { return Density(DensityKind::uniform, 0.0, {}); }
Density Density::power(double alpha) { return Density(DensityKind::power, alpha, {}); }
Density Density::triangular(double mode) { return Density(DensityKind::triangular, mode, {}); }
Density Density::table(std::vector<Knot> knots) {
  return Density(DensityKind::table, 0.0, std::move(knots));
}

Density Density::from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("kind") || !j["kind"].is_string())
    throw ValidationError("density must be an object with a string \"kind\"");
  const std::string kind = j["kind"].get<std::string>();
  auto number = [&](const char* key) {
    if (!j.contains(key) || !j[key].is_number())
      throw ValidationError(std::string("density kind '") + kind + "' needs numeric \"" + key +
                            "\"");
    return j[key].get<double>();
  };
  Density d = [&] {
    if (kind == "uniform") return uniform();
    if (kind == "power") return power(number("alpha"));
    if (kind == "triangular") return triangular(number("mode"));
    if (kind == "table") {
      if (!j.contains("knots") || !j["knots"].is_array())
        throw ValidationError("table density needs a \"knots\" array");
      std::vector<Knot> knots;
      for (const auto& k : j["knots"]) {
        if (!k.is_array() || k.size() != 2 || !k[0].is_number() || !k[1].is_number())
          throw ValidationError("each table knot must be [t, f]");
        knots.push_back({k[0].get<double>(), k[1].get<double>()});
      }
      return table(std::move(knots));
    }
    throw ValidationError("unknown density kind '" + kind + "'");
  }();
  if (j.contains("transform")) {
    const auto& t = j["transform"];
    if (!t.is_string()) throw ValidationError("density \"transform\" must be a string");
    const std::string name = t.get<std::string>();
    if (name == "mirrored") return mirror(d);
    if (name == "symmetrized") return symmetrize(d);
    if (name != "none") throw ValidationError("unknown density transform '" + name + "'");
  }
  return d;
}

nlohmann::json Density::to_json() const {
  nlohmann::json j;
  switch (kind_) {
    case DensityKind::uniform:
      j["kind"] = "uniform";
      break;
    case DensityKind::power:
      j["kind"] = "power";
      j["alpha"] = param_;
      break;
    case DensityKind::triangular:
      j["kind"] = "triangular";
      j["mode"] = param_;
      break;
    case DensityKind::table: {
      j["kind"] = "table";
      auto arr = nlohmann::json::array();
      for (const auto& k : knots_) arr.push_back({k.t, k.value});
      j["knots"] = std::move(arr);
      break;
    }
  }
  if (transform_ != DensityTransform::none) j["transform"] = transform_name(transform_);
  return j;
}

std::string Density::describe() const { return to_json().dump(); }

bool Density::is_uniform() const noexcept {
  if (kind_ == DensityKind::uniform) return true;
  if (kind_ == DensityKind::power && param_ == 0.0) return true;
  // (2t + 2(1 - t)) / 2 = 1
  if (kind_ == DensityKind::power && param_ == 1.0 &&
      transform_ == DensityTransform::symmetrized)
    return true;
  return false;
}

double Density::base_pdf(double t) const {
  switch (kind_) {
    case DensityKind::uniform:
      return 1.0;
    case DensityKind::power:
      return (param_ + 1.0) * std::pow(t, param_);
    case DensityKind::triangular:
      if (t < param_) return 2.0 * t / param_;
      if (param_ == 1.0) return 2.0;
      return 2.0 * (1.0 - t) / (1.0 - param_);
    case DensityKind::table: {
      if (t < knots_.front().t || t > knots_.back().t) return 0.0;
      auto it = std::upper_bound(knots_.begin(), knots_.end(), t,
                                 [](double x, const Knot& k) { return x < k.t; });
      if (it == knots_.end()) return knots_.back().value;
      const Knot& hi = *it;
      const Knot& lo = *(it - 1);
      const double w = (t - lo.t) / (hi.t - lo.t);
      return lo.value + w * (hi.value - lo.value);
    }
  }
  return 0.0;
}

double Density::pdf(double t) const {
  if (!(t >= 0.0 && t <= 1.0)) return 0.0;
  switch (transform_) {
    case DensityTransform::none:
      return base_pdf(t);
    case DensityTransform::mirrored:
      return base_pdf(1.0 - t);
    case DensityTransform::symmetrized:
      return 0.5 * (base_pdf(t) + base_pdf(1.0 - t));
  }
  return 0.0;
}

double Density::max_value() const {
  switch (kind_) {
    case DensityKind::uniform:
      return 1.0;
    case DensityKind::power:
      return param_ + 1.0;
    case DensityKind::triangular:
      return 2.0;
    case DensityKind::table: {
      double m = 0.0;
      for (const auto& k : knots_) m = std::max(m, k.value);
      return m;
    }
  }
  return 1.0;
}

std::vector<double> Density::base_breakpoints() const {
  std::vector<double> out;
  if (kind_ == DensityKind::triangular) out.push_back(param_);
  if (kind_ == DensityKind::table)
    for (const auto& k : knots_) out.push_back(k.t);
  return out;
}

std::vector<double> Density::breakpoints() const {
  std::vector<double> base = base_breakpoints();
  std::vector<double> out;
  for (double b : base) {
    if (transform_ != DensityTransform::mirrored) out.push_back(b);
    if (transform_ != DensityTransform::none) out.push_back(1.0 - b);
  }
  std::erase_if(out, [](double b) { return !(b > 0.0 && b < 1.0); });
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

double Density::base_draw(CounterRng& rng) const {
  const double u = rng.next_open01();
  switch (kind_) {
    case DensityKind::uniform:
      return u;
    case DensityKind::power:
      return std::pow(u, 1.0 / (param_ + 1.0));
    case DensityKind::triangular:
      if (u < param_) return std::sqrt(u * param_);
      return 1.0 - std::sqrt((1.0 - u) * (1.0 - param_));
    case DensityKind::table: {
      auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
      if (it == cumulative_.end()) return knots_.back().t;
      const std::size_t i = static_cast<std::size_t>(it - cumulative_.begin()) - 1;
      const double target = u - cumulative_[i];
      const double width = knots_[i + 1].t - knots_[i].t;
      const double f0 = knots_[i].value;
      const double slope = (knots_[i + 1].value - f0) / width;
      // Solve f0 x + slope x^2 / 2 = target in the form that stays stable for
      // either sign of the slope.
      const double disc = std::max(0.0, f0 * f0 + 2.0 * slope * target);
      const double denom = f0 + std::sqrt(disc);
      const double x = denom > 0.0 ? 2.0 * target / denom : 0.0;
      return knots_[i].t + std::clamp(x, 0.0, width);
    }
  }
  return u;
}

double Density::draw(CounterRng& rng) const {
  for (int attempt = 0; attempt < kMaxRedraws; ++attempt) {
    double v = 0.0;
    switch (transform_) {
      case DensityTransform::none:
        v = base_draw(rng);
        break;
      case DensityTransform::mirrored:
        v = 1.0 - base_draw(rng);
        break;
      case DensityTransform::symmetrized: {
        const bool flip = rng.next_open01() >= 0.5;
        const double b = base_draw(rng);
        v = flip ? 1.0 - b : b;
        break;
      }
    }
    if (v > 0.0 && v < 1.0) return v;
  }
  throw ValidationError("density sampler cannot produce values strictly inside (0, 1): " +
                        describe());
}

void Density::validate_mass() const {
  const double mass = total_mass(*this);
  if (!(std::abs(mass - 1.0) <= kMassTolerance)) {
    std::ostringstream msg;
    msg.precision(17);
    msg << "density does not integrate to 1 (got " << mass << "): " << describe();
    throw ValidationError(msg.str());
  }
}

bool Density::operator==(const Density& other) const {
  if (kind_ != other.kind_ || param_ != other.param_ || transform_ != other.transform_)
    return false;
  if (knots_.size() != other.knots_.size()) return false;
  for (std::size_t i = 0; i < knots_.size(); ++i)
    if (knots_[i].t != other.knots_[i].t || knots_[i].value != other.knots_[i].value)
      return false;
  return true;
}

Density mirror(const Density& d) {
  if (d.kind_ == DensityKind::uniform || d.transform_ == DensityTransform::symmetrized) return d;
  if (d.kind_ == DensityKind::triangular) return Density::triangular(1.0 - d.param_);
  Density out = d;
  out.transform_ = d.transform_ == DensityTransform::mirrored ? DensityTransform::none
                                                               : DensityTransform::mirrored;
  return out;
}

Density symmetrize(const Density& d) {
  if (d.kind_ == DensityKind::uniform) return d;
  if (d.kind_ == DensityKind::power && (d.param_ == 0.0 || d.param_ == 1.0))
    return Density::uniform();
  Density out = d;
  out.transform_ = DensityTransform::symmetrized;
  return out;
}

std::vector<double> sample(const Density& d, RngSpec rng, std::size_t count) {
  if (count < 1) throw ValidationError("sample count must be at least 1");
  CounterRng gen(rng);
  std::vector<double> out(count);
  for (auto& v : out) v = d.draw(gen);
  return out;
}

double total_mass(const Density& d) {
  std::vector<double> cuts{0.0};
  for (double b : d.breakpoints()) cuts.push_back(b);
  cuts.push_back(1.0);
  auto result = adaptive_simpson_panels<double>([&](double t) { return d.pdf(t); }, cuts,
                                                kQuadratureTolerance);
  return result.value;
}

}  // namespace benfrag
