#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "kinetic_layer/errors.hpp"
#include "kinetic_layer/force.hpp"
#include "kinetic_layer/grids.hpp"

using namespace kinetic_layer;

namespace {

// Composite Simpson on −F, fine enough to act as a reference for the ramp.
double simpson_potential(const ForceProfile& p, double eta, int panels = 20000) {
  const double h = eta / panels;
  double sum = -p.force(0.0) - p.force(eta);
  for (int k = 1; k < panels; ++k) sum += (k % 2 ? 4.0 : 2.0) * -p.force(k * h);
  return sum * h / 3.0;
}

}  // namespace

TEST_CASE("flat profile") {
  const ForceProfile flat = ForceProfile::flat();
  CHECK(flat.force(3.7) == 0.0);
  CHECK(flat.potential(123.0) == 0.0);
  CHECK(flat.energy(5.0, 0.3) == doctest::Approx(std::cos(0.3)).epsilon(1e-15));
  CHECK(std::isinf(flat.support_end()));
}

TEST_CASE("inner profile point values") {
  const ForceProfile p = ForceProfile::inner(1.0, 0.1, 1.0);
  CHECK(p.force(1.0) == doctest::Approx(-1.0 / 11.0).epsilon(1e-14));
  CHECK(p.force(10.0) == 0.0);
  CHECK(std::abs(p.potential(2.0) - std::log(1.2)) < 1e-10);
  CHECK(p.energy(2.0, kPi / 3) == doctest::Approx(0.6).epsilon(1e-12));
  CHECK(p.energy(0.0, 0.7) == doctest::Approx(std::cos(0.7)).epsilon(1e-15));
  CHECK_THROWS_AS(p.force(-0.1), DomainError);
  CHECK_THROWS_AS(p.potential(-1e-9), DomainError);
}

TEST_CASE("potential against an independent quadrature on the ramp") {
  const ForceProfile p = ForceProfile::inner(1.0, 0.1, 1.0);
  for (double eta : {5.5, 6.25, 7.0, 7.5, 9.0}) {
    CHECK(std::abs(p.potential(eta) - simpson_potential(p, eta)) < 1e-10);
  }
  const ForceProfile q = ForceProfile::outer(2.0, 0.05, 1.0);
  for (double eta : {4.0, 11.0, 13.0, 20.0}) {
    CHECK(std::abs(q.potential(eta) - simpson_potential(q, eta)) < 1e-10);
  }
}

TEST_CASE("potential invariants") {
  for (double eps : {0.5, 0.1, 0.025}) {
    const ForceProfile p = ForceProfile::inner(1.0, eps, 1.0);
    double previous = 0.0;
    CHECK(p.potential(0.0) == 0.0);
    for (int k = 1; k <= 400; ++k) {
      const double eta = k * p.support_end() / 300.0;
      const double v = p.potential(eta);
      CHECK(v >= previous - 1e-15);
      CHECK(std::exp(v) >= 1.0);
      CHECK(std::exp(v) <= 4.0);
      // V' = −F by central differences.
      const double h = 1e-4;
      const double slope = (p.potential(eta + h) - p.potential(std::max(eta - h, 0.0))) / (eta + h - std::max(eta - h, 0.0));
      CHECK(std::abs(slope + p.force(eta)) < 1e-6);
      previous = v;
    }
    const double end = p.support_end();
    CHECK(end == doctest::Approx(0.75 / eps));
    CHECK(p.potential(end) == doctest::Approx(p.potential(end * 3.0)).epsilon(1e-15));
    CHECK(p.potential(end) == doctest::Approx(p.potential_limit()).epsilon(1e-13));
  }
}

TEST_CASE("outer profile has a nonnegative force and decreasing potential") {
  const ForceProfile p = ForceProfile::outer(2.0, 0.1, 1.0);
  double previous = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double eta = 0.1 * k;
    CHECK(p.force(eta) >= 0.0);
    CHECK(p.potential(eta) <= previous + 1e-15);
    previous = p.potential(eta);
  }
  // Plateau: V = ln((R − εη)/R).
  CHECK(std::abs(p.potential(3.0) - std::log(1.7 / 2.0)) < 1e-12);
  CHECK_THROWS_AS(ForceProfile::outer(0.7, 0.1, 1.0), DomainError);
}

TEST_CASE("energy bounded by the potential") {
  const ForceProfile p = ForceProfile::inner(1.0, 0.1, 1.0);
  for (double eta : {0.0, 1.0, 4.0, 8.0}) {
    for (double phi : {-2.0, -0.4, 0.3, 1.1, 2.9}) {
      CHECK(std::abs(p.energy(eta, phi)) <= std::exp(p.potential(eta)) + 1e-15);
    }
    CHECK(std::abs(p.energy(eta, 0.0)) == doctest::Approx(std::exp(p.potential(eta))).epsilon(1e-15));
  }
}

TEST_CASE("inverse potential and cancellation-free differences") {
  const ForceProfile p = ForceProfile::inner(1.0, 0.1, 1.0);
  for (double eta : {0.0, 0.5, 3.0, 6.0, 7.2}) {
    CHECK(p.inverse_potential(p.potential(eta)) == doctest::Approx(eta).epsilon(1e-10));
  }
  CHECK(p.potential_difference(2.0, 2.0 + 1e-9) == doctest::Approx(0.1e-9 / 1.2).epsilon(1e-6));
  CHECK(p.potential_difference(1.0, 6.5) == doctest::Approx(p.potential(6.5) - p.potential(1.0)).epsilon(1e-12));
}
