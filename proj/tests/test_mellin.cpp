#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <complex>
#include <limits>

#include "benfrag/error.hpp"
#include "benfrag/mellin.hpp"

using namespace benfrag;
using cd = std::complex<double>;

namespace {

// Independent high-precision values (30-digit quadrature, confirmed by the
// closed forms of the same integrals).
constexpr double kUniformAbs1 = 0.344090049004831;
const cd kUniform1{0.118397961824147, 0.323078758911871};
const cd kTriangular03_1{-0.219140961978848, 0.306853634801249};
const cd kTriangular03_3{-0.0507614063432490, 0.0136637030190272};
const cd kMirrorPower2_1{-0.145956444995167, 0.0365970443902288};
const cd kMirrorPower2_2{-0.0256895501929662, -0.0152489272782456};
const cd kMirrorPowerHalf_1{-0.0373939228958460, 0.251440058441413};
const cd kMirrorPowerHalf_7{-0.0100696331838508, 0.0122653481819158};
const cd kMirrorPowerHalf_1000{-6.58986076879381e-6, 6.59892314061546e-6};
constexpr double kSumN3L100 = 0.100657709106765;
constexpr double kSumN3L1000 = 0.100662532534186;
constexpr double kSumN18L1000 = 9.14390826858e-9;
constexpr double kBoundN18Log2 = 2.75259066644e-9;
constexpr double kDependenceT26 = 1.79682159471548e-12;

cd power_mellin(double alpha, int ell, int base) {
  return (alpha + 1.0) / cd(alpha + 1.0, -harmonic_frequency(ell, base));
}

std::vector<Density> catalog() {
  return {Density::uniform(),         Density::power(0.5),
          Density::power(2.0),        Density::triangular(0.3),
          Density::triangular(1.0),   Density::table({{0.0, 0.0}, {1.0, 2.0}}),
          mirror(Density::power(2.0)), symmetrize(Density::triangular(0.2))};
}

}  // namespace

TEST_CASE("ell = 0 gives exactly one") {
  for (const auto& d : catalog()) {
    const MellinPoint p = mellin_at(d, 0, 10);
    CHECK(p.value == cd(1.0, 0.0));
  }
}

TEST_CASE("uniform closed form") {
  const cd m1 = mellin_at(Density::uniform(), 1, 10).value;
  CHECK(std::abs(m1 - kUniform1) < 1e-14);
  CHECK(std::abs(std::abs(m1) - kUniformAbs1) < 1e-14);
  const double w = 2.0 * M_PI / std::log(10.0);
  CHECK(std::abs(std::abs(m1) - 1.0 / std::sqrt(1.0 + w * w)) < 1e-15);
  CHECK(mellin_at(Density::uniform(), -1, 10).value == std::conj(m1));
}

TEST_CASE("quadrature matches the uniform closed form for |ell| <= 20") {
  for (int base : {10, 2, 16}) {
    for (int ell = -20; ell <= 20; ++ell) {
      CAPTURE(base);
      CAPTURE(ell);
      const cd q = mellin_quadrature(Density::uniform(), ell, base);
      const cd a = uniform_mellin(ell, base);
      CHECK(std::abs(q.real() - a.real()) < 1e-8);
      CHECK(std::abs(q.imag() - a.imag()) < 1e-8);
    }
  }
}

TEST_CASE("quadrature matches the power closed form") {
  for (double alpha : {0.5, 1.0, 2.0, 4.0}) {
    for (int ell = -20; ell <= 20; ++ell) {
      CAPTURE(alpha);
      CAPTURE(ell);
      const cd q = mellin_quadrature(Density::power(alpha), ell, 10);
      CHECK(std::abs(q - power_mellin(alpha, ell, 10)) < 1e-8);
      CHECK(std::abs(mellin_at(Density::power(alpha), ell, 10).value -
                     power_mellin(alpha, ell, 10)) < 1e-14);
    }
  }
  // A table through (0, 0) and (1, 2) is f(t) = 2t.
  const Density tab = Density::table({{0.0, 0.0}, {1.0, 2.0}});
  for (int ell = 1; ell <= 10; ++ell)
    CHECK(std::abs(mellin_at(tab, ell, 10).value - power_mellin(1.0, ell, 10)) < 1e-8);
}

TEST_CASE("quadrature matches high-precision values for non-analytic densities") {
  CHECK(std::abs(mellin_at(Density::triangular(0.3), 1, 10).value - kTriangular03_1) < 1e-9);
  CHECK(std::abs(mellin_at(Density::triangular(0.3), 3, 10).value - kTriangular03_3) < 1e-9);
  const Density mp = mirror(Density::power(2.0));
  CHECK(std::abs(mellin_at(mp, 1, 10).value - kMirrorPower2_1) < 1e-9);
  CHECK(std::abs(mellin_at(mp, 2, 10).value - kMirrorPower2_2) < 1e-9);
  const Density half = mirror(Density::power(0.5));
  CHECK(std::abs(mellin_at(half, 1, 10).value - kMirrorPowerHalf_1) < 1e-12);
  CHECK(std::abs(mellin_at(half, 7, 10).value - kMirrorPowerHalf_7) < 1e-12);
  CHECK(std::abs(mellin_at(half, 1000, 10).value - kMirrorPowerHalf_1000) < 1e-12);
  CHECK(std::abs(mellin_quadrature(half, 1, 10) - kMirrorPowerHalf_1) < 1e-9);
}

TEST_CASE("closed forms agree with quadrature for every catalog density") {
  std::vector<Density> all = catalog();
  for (double alpha : {0.5, 2.5, 3.0}) all.push_back(symmetrize(Density::power(alpha)));
  all.push_back(mirror(Density::table({{0.1, 0.0}, {0.4, 3.0}, {0.9, 0.5}})));
  all.push_back(symmetrize(Density::table({{0.0, 0.5}, {0.6, 2.0}, {1.0, 1.0}})));
  for (const auto& d : all) {
    for (int ell = -20; ell <= 20; ++ell) {
      CAPTURE(d.describe());
      CAPTURE(ell);
      const cd q = mellin_quadrature(d, ell, 10);
      const cd c = mellin_at(d, ell, 10).value;
      CHECK(std::abs(q.real() - c.real()) < 1e-8);
      CHECK(std::abs(q.imag() - c.imag()) < 1e-8);
    }
  }
}

TEST_CASE("conjugate symmetry and |M| < 1") {
  for (const auto& d : catalog()) {
    CAPTURE(d.describe());
    for (int ell = 1; ell <= 30; ++ell) {
      const cd plus = mellin_at(d, ell, 10).value;
      const cd minus = mellin_at(d, -ell, 10).value;
      CHECK(std::abs(plus - std::conj(minus)) < 1e-10);
      CHECK(std::abs(plus) < 1.0);
    }
  }
}

TEST_CASE("condition sums") {
  const auto u100 = mellin_spectrum(Density::uniform(), 10, 100);
  const auto u1000 = mellin_spectrum(Density::uniform(), 10, 1000);
  CHECK(condition_sum(u100, 3).condition_sum == doctest::Approx(kSumN3L100).epsilon(1e-12));
  CHECK(condition_sum(u1000, 3).condition_sum == doctest::Approx(kSumN3L1000).epsilon(1e-12));
  const MellinReport r18 = condition_sum(u1000, 18);
  CHECK(r18.condition_sum == doctest::Approx(kSumN18L1000).epsilon(1e-10));
  CHECK(r18.condition_sum < 1e-8);
  CHECK(r18.symmetrized);
  CHECK(r18.magnitudes.size() == 1000);
  CHECK(condition_sum(Density::uniform(), 18, 10, 1000).condition_sum == r18.condition_sum);
}

TEST_CASE("tail estimate") {
  const auto u = mellin_spectrum(Density::uniform(), 10, 1000);
  CHECK(std::isinf(condition_sum(u, 1).tail_estimate));
  const double m = u.magnitudes.back();
  CHECK(condition_sum(u, 3).tail_estimate == doctest::Approx(2.0 * std::pow(m, 3) * 1000 / 2.0));
  // For uniform |M(l)| < 1 / (w l), so the integral comparison really bounds the remainder.
  double rest = 0.0;
  const auto far = mellin_spectrum(Density::uniform(), 10, 20000);
  for (int ell = 1001; ell <= 20000; ++ell) rest += 2.0 * std::pow(far.magnitudes[ell - 1], 3);
  CHECK(rest <= condition_sum(u, 3).tail_estimate);
}

TEST_CASE("condition sum decreases strictly in n until negligible") {
  for (const auto& d : catalog()) {
    CAPTURE(d.describe());
    const auto spectrum = mellin_spectrum(d, 10, 200);
    double previous = truncated_condition_sum(spectrum, 1);
    for (int n = 2; n <= 200 && previous >= 1e-15; ++n) {
      const double next = truncated_condition_sum(spectrum, n);
      CHECK(next < previous);
      previous = next;
    }
  }
}

TEST_CASE("spectrum uses the symmetrized density and is thread-independent") {
  const auto a = mellin_spectrum(Density::power(2.0), 10, 300, 1);
  const auto b = mellin_spectrum(Density::power(2.0), 10, 300, 4);
  CHECK(a.magnitudes == b.magnitudes);
  CHECK(a.density == symmetrize(Density::power(2.0)));
  const auto c = mellin_spectrum(mirror(Density::power(2.0)), 10, 300);
  for (std::size_t i = 0; i < a.magnitudes.size(); ++i)
    CHECK(std::abs(a.magnitudes[i] - c.magnitudes[i]) < 1e-10);
}

TEST_CASE("expectation error bound") {
  const auto u = mellin_spectrum(Density::uniform(), 10, 1000);
  const double full = expectation_error_bound(u, 18, {0.0, 1.0});
  CHECK(full == truncated_condition_sum(u, 18));
  const double log2 = expectation_error_bound(u, 18, {0.0, std::log10(2.0)});
  CHECK(log2 == doctest::Approx(kBoundN18Log2).epsilon(1e-10));
  CHECK(log2 < 1e-8);
  CHECK(expectation_error_bound(u, 5, {0.3, 0.3}) == 0.0);
  CHECK(expectation_error_bound(Density::uniform(), 18, 10, {0.0, std::log10(2.0)}, 1000) ==
        log2);
  CHECK_THROWS_AS(expectation_error_bound(u, 5, {0.5, 0.2}), ValidationError);
  CHECK_THROWS_AS(expectation_error_bound(u, 5, {-0.1, 0.2}), ValidationError);
  CHECK_THROWS_AS(expectation_error_bound(u, 0, {0.0, 1.0}), ValidationError);
}

TEST_CASE("dependence bound") {
  const auto u = mellin_spectrum(Density::uniform(), 10, 1000);
  const double d26 = dependence_bound(u, 30, 3, {0.0, 1.0});
  CHECK(d26 == doctest::Approx(kDependenceT26).epsilon(1e-10));
  CHECK(d26 < 2e-12);
  CHECK(dependence_bound(u, 30, 29, {0.0, 0.5}) == doctest::Approx(1000.0));
  for (int m = 1; m < 29; ++m)
    CHECK(dependence_bound(u, 30, m - 1, {0.0, 1.0}) <= dependence_bound(u, 30, m, {0.0, 1.0}));
  CHECK_THROWS_AS(dependence_bound(u, 30, 30, {0.0, 1.0}), ValidationError);
  CHECK_THROWS_AS(dependence_bound(u, 30, -1, {0.0, 1.0}), ValidationError);
}

TEST_CASE("report json") {
  const MellinReport r = condition_sum(Density::uniform(), 1, 10, 50);
  const nlohmann::json j = to_json(r);
  CHECK(j["tail_estimate"].is_null());
  CHECK(j["symmetrized"] == true);
  CHECK(j["factors"] == 1);
  CHECK(j["magnitudes"].size() == 50);
  CHECK(j["condition_sum"].get<double>() == r.condition_sum);
}

TEST_CASE("quadrature failure is a numerical error") {
  CHECK_THROWS_AS(mellin_quadrature(Density::triangular(0.3), 5, 10, 1e-300), NumericalError);
}
