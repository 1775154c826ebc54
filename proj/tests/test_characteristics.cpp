#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "kinetic_layer/characteristics.hpp"
#include "kinetic_layer/errors.hpp"
#include "kinetic_layer/grids.hpp"

using namespace kinetic_layer;

TEST_CASE("phi_prime") {
  const ForceProfile flat = ForceProfile::flat();
  CHECK(phi_prime(flat, -0.7, 2.0, 9.0) == doctest::Approx(0.7).epsilon(1e-15));
  const ForceProfile p = ForceProfile::inner(1.0, 0.1, 1.0);
  CHECK(phi_prime(p, kPi / 2, 4.0, 0.0) == doctest::Approx(kPi / 2).epsilon(1e-15));
  CHECK(phi_prime(p, kPi / 3, 2.0, 0.0) == doctest::Approx(std::acos(0.6)).epsilon(1e-12));
  CHECK(phi_prime(p, kPi / 3, 2.0, 0.0) == doctest::Approx(0.927295218).epsilon(1e-9));
  // |E| = 1.3 cos(0.1) > 1 cannot reach the wall.
  CHECK_THROWS_AS(phi_prime(p, 0.1, 3.0, 0.0), UnreachableError);
}

TEST_CASE("phi_prime reciprocity") {
  const ForceProfile p = ForceProfile::inner(1.0, 0.1, 1.0);
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> eta(0.0, 10.0), angle(-kPi, kPi);
  int checked = 0;
  while (checked < 200) {
    const double a = eta(rng), b = eta(rng), phi = angle(rng);
    if (std::abs(p.energy(a, phi)) >= std::exp(p.potential(b))) continue;
    const double there = phi_prime(p, phi, a, b);
    CHECK(phi_prime(p, there, b, a) == doctest::Approx(std::abs(phi)).epsilon(1e-10));
    ++checked;
  }
}

TEST_CASE("turning points") {
  const ForceProfile p = ForceProfile::inner(1.0, 0.1, 1.0);
  CHECK(turning_point(p, 0.0, 0.0) == 0.0);
  CHECK_THROWS_AS(turning_point(ForceProfile::flat(), 1.0, 0.4), NoTurningError);

  // Wide plateau: e^V = 1 + εη/R, so |E| = 1.1 turns at η⁺ = 1.
  const ForceProfile wide = ForceProfile::inner(1.0, 0.1, 10.0);
  const double phi = std::acos(1.1 / 1.3);
  CHECK(std::abs(wide.energy(3.0, phi) - 1.1) < 1e-12);
  const double turn = turning_point(wide, 3.0, phi);
  CHECK(std::abs(turn - 1.0) < 1e-8);
  CHECK(sin_squared_along(wide, phi, 3.0, turn) < 1e-12);
}

TEST_CASE("attenuation") {
  const ForceProfile flat = ForceProfile::flat();
  CHECK(attenuation(flat, 3.0, 1.0, 0.4) == doctest::Approx(2.0 / std::sin(0.4)).epsilon(1e-13));
  CHECK(attenuation(flat, 3.0, 1.0, -0.4, 0.5) == doctest::Approx(1.5 * 2.0 / std::sin(0.4)).epsilon(1e-13));
  const ForceProfile p = ForceProfile::inner(1.0, 0.1, 1.0);
  CHECK(attenuation(p, 2.0, 2.0, 0.8) == 0.0);
  CHECK(attenuation(p, 6.0, 1.0, 1.0, 1.0) == doctest::Approx(2.0 * attenuation(p, 6.0, 1.0, 1.0)).epsilon(1e-13));
  CHECK_THROWS_AS(attenuation(flat, 2.0, 1.0, 0.0), GrazingError);

  // Smooth segment against composite Simpson in η.
  const double phi = 1.2, hi = 7.0, lo = 0.5;
  const int panels = 20000;
  const double h = (hi - lo) / panels;
  auto integrand = [&](double x) { return 1.0 / std::sqrt(sin_squared_along(p, phi, hi, x)); };
  double sum = integrand(lo) + integrand(hi);
  for (int k = 1; k < panels; ++k) sum += (k % 2 ? 4.0 : 2.0) * integrand(lo + k * h);
  CHECK(attenuation(p, hi, lo, phi) == doctest::Approx(sum * h / 3.0).epsilon(1e-9));
}

TEST_CASE("attenuation is additive, including across turning points") {
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (const ForceProfile& p : {ForceProfile::inner(1.0, 0.1, 1.0), ForceProfile::outer(2.0, 0.1, 1.0)}) {
    int checked = 0;
    while (checked < 100) {
      const double top = 10.0 * unit(rng);
      const double phi = (0.02 + 3.1 * unit(rng)) * (unit(rng) < 0.5 ? 1.0 : -1.0);
      // Admissible range below top.
      double floor_eta = 0.0;
      if (std::abs(p.energy(top, phi)) > 1.0 && p.kind() == ForceProfile::Kind::inner) {
        floor_eta = turning_point(p, top, phi);
      }
      if (p.kind() == ForceProfile::Kind::outer) {
        // Convex side: the curve reaches η = 0 whenever it comes from above.
        if (std::abs(p.energy(top, phi)) > 1.0) continue;
      }
      const double a = floor_eta + (top - floor_eta) * unit(rng);
      const double b = floor_eta + (a - floor_eta) * unit(rng);
      const double whole = attenuation(p, top, b, phi);
      const double parts = attenuation(p, top, a, phi) + attenuation(p, a, b, phi_prime(p, phi, top, a));
      CHECK(whole == doctest::Approx(parts).epsilon(1e-8));
      ++checked;
    }
  }
}

TEST_CASE("classification") {
  const ForceProfile flat = ForceProfile::flat();
  CHECK(classify(flat, {1.0, kPi / 4}) == CaseTag::I);
  CHECK(classify(flat, {1.0, -kPi / 4}) == CaseTag::IV);
  const ForceProfile p = ForceProfile::inner(1.0, 0.1, 1.0);
  // e^{V(3)} = 1.3 on the plateau.
  CHECK(std::exp(p.potential(3.0)) == doctest::Approx(1.3).epsilon(1e-13));
  CHECK(classify(p, {3.0, kPi / 6}) == CaseTag::II);
  CHECK(classify(p, {3.0, -kPi / 6}) == CaseTag::III);
  CHECK(classify(p, {3.0, kPi / 2.5}) == CaseTag::I);
  // |E| = 1 goes to the wall-reaching branch.
  CHECK(classify(p, {0.0, 1e-300}) == CaseTag::I);
  CHECK_THROWS_AS(classify(p, {1.0, 0.0}), GrazingError);
  CHECK(std::string(to_string(CaseTag::III)) == "III");
}

TEST_CASE("traced curves conserve energy") {
  const ForceProfile flat = ForceProfile::flat();
  const auto vertical = trace_curve(flat, {0.0, 0.9}, 12.0, 50);
  REQUIRE(vertical.size() >= 2);
  for (const auto& point : vertical) CHECK(point.phi == doctest::Approx(0.9).epsilon(1e-15));

  const ForceProfile p = ForceProfile::inner(1.0, 0.1, 1.0);
  const CharPoint start{6.0, 0.3};
  REQUIRE(classify(p, start) == CaseTag::II);
  const auto curve = trace_curve(p, start, 10.0, 101);
  const double energy = p.energy(start.eta, start.phi);
  double min_sin = 1.0;
  for (const auto& point : curve) {
    CHECK(std::abs(p.energy(point.eta, point.phi) - energy) <= 1e-10 * (1.0 + std::abs(energy)));
    min_sin = std::min(min_sin, std::abs(std::sin(point.phi)));
  }
  CHECK(min_sin < 1e-5);
}

TEST_CASE("unprojected integration keeps the energy") {
  const ForceProfile p = ForceProfile::inner(1.0, 0.1, 1.0);
  const CharPoint start{5.0, -0.4};
  const auto path = integrate_characteristic(p, start, 8.0, 0.01);
  REQUIRE(path.size() > 10);
  const double energy = p.energy(start.eta, start.phi);
  for (const auto& point : path) CHECK(std::abs(p.energy(point.eta, point.phi) - energy) < 1e-9);
  // The curve turns before the wall and heads back up.
  CHECK(path.back().phi > 0.0);
}
