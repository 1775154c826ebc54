#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "kinetic_layer/annulus.hpp"
#include "kinetic_layer/errors.hpp"

using namespace kinetic_layer;

namespace {

AnnulusProblem make_problem(double epsilon, int radii = 33, int angles = 16, double clustering = 0.0) {
  return AnnulusProblem(epsilon, RadialGrid(1.0, 2.0, radii, clustering), AngularGrid(angles));
}

// Marches the backward ray in small steps and bisects the first crossing.
std::pair<double, Circle> marched_exit(double r, double phi, double epsilon) {
  const double wx = -std::sin(phi), wy = -std::cos(phi);
  auto radius = [&](double t) { return std::hypot(r - epsilon * t * wx, -epsilon * t * wy); };
  auto outside = [&](double t) { const double q = radius(t); return q < 1.0 || q > 2.0; };
  const double step = 1e-3 / epsilon;
  double t = 0.0;
  while (!outside(t + step)) t += step;
  double lo = t, hi = t + step;
  for (int k = 0; k < 80; ++k) {
    const double mid = 0.5 * (lo + hi);
    (outside(mid) ? hi : lo) = mid;
  }
  return {lo, radius(hi) < 1.5 ? Circle::inner : Circle::outer};
}

}  // namespace

TEST_CASE("radial and tangential exit times") {
  AnnulusProblem p = make_problem(0.1);
  const ExitPoint out = exit_time(p, 1.4, -kPi / 2);
  CHECK(out.circle == Circle::inner);
  CHECK(out.time == doctest::Approx(0.4 / 0.1).epsilon(1e-13));
  const ExitPoint in = exit_time(p, 1.4, kPi / 2);
  CHECK(in.circle == Circle::outer);
  CHECK(in.time == doctest::Approx(0.6 / 0.1).epsilon(1e-13));
  // Tangent to the inner circle: half the chord of the outer circle.
  const ExitPoint tangent = exit_time(p, 1.0, 0.0);
  CHECK(tangent.circle == Circle::outer);
  CHECK(tangent.time == doctest::Approx(std::sqrt(3.0) / 0.1).epsilon(1e-12));
  CHECK_THROWS_AS(exit_time(p, 2.5, 0.3), DomainError);
}

TEST_CASE("exit times against ray marching") {
  AnnulusProblem p = make_problem(0.2);
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> radius(1.0, 2.0), angle(-kPi, kPi);
  for (int k = 0; k < 100; ++k) {
    const double r = radius(rng), phi = angle(rng);
    const ExitPoint exit = exit_time(p, r, phi);
    const auto [time, circle] = marched_exit(r, phi, 0.2);
    CHECK(exit.circle == circle);
    CHECK(exit.time == doctest::Approx(time).epsilon(1e-9));
    // p = r cosφ is carried to the arrival point.
    const double arrival = circle == Circle::inner ? 1.0 : 2.0;
    CHECK(std::abs(arrival * std::cos(exit.arrival_angle) - r * std::cos(phi)) < 1e-12);
    // The arrival direction is incoming there.
    const double s = std::sin(exit.arrival_angle);
    CHECK((circle == Circle::inner ? s < 1e-12 : s > -1e-12));
  }
}

TEST_CASE("ray integration") {
  AnnulusProblem p = make_problem(0.2);
  p.set_inflow_inner([](double) { return 1.0; });
  p.set_inflow_outer([](double) { return 1.0; });
  const std::vector<double> zero(33, 0.0), constant(33, 1.0);
  for (double phi : {-2.0, -0.3, 0.4, 2.8}) {
    const double tb = exit_time(p, 1.3, phi).time;
    CHECK(ray_integrate(p, zero, 1.3, phi) == doctest::Approx(std::exp(-tb)).epsilon(1e-14));
    CHECK(std::abs(ray_integrate(p, constant, 1.3, phi) - 1.0) < 1e-14);
  }

  // ū linear in r is interpolated exactly; compare with a fine Simpson rule along the ray.
  p.set_inflow_inner([](double phi) { return std::cos(phi); });
  p.set_inflow_outer([](double) { return 0.0; });
  std::vector<double> linear;
  for (double r : p.radial.nodes()) linear.push_back(3.0 - r);
  for (double phi : {-1.9, -0.05, 0.6, 3.0}) {
    const double r = 1.55;
    const ExitPoint exit = exit_time(p, r, phi);
    const double wx = -std::sin(phi), wy = -std::cos(phi);
    auto integrand = [&](double t) {
      return std::exp(-t) * (3.0 - std::hypot(r - 0.2 * t * wx, -0.2 * t * wy));
    };
    const int panels = 200000;
    const double h = exit.time / panels;
    double sum = integrand(0.0) + integrand(exit.time);
    for (int k = 1; k < panels; ++k) sum += (k % 2 ? 4.0 : 2.0) * integrand(k * h);
    const double boundary = exit.circle == Circle::inner ? std::cos(exit.arrival_angle) : 0.0;
    const double reference = sum * h / 3.0 + boundary * std::exp(-exit.time);
    CHECK(std::abs(ray_integrate(p, linear, r, phi) - reference) < 1e-8);
  }
}

TEST_CASE("solve against the dense oracle") {
  AnnulusProblem p = make_problem(0.2);
  p.set_inflow_inner([](double phi) { return std::cos(phi) + 0.4 * std::sin(2.0 * phi); });
  p.set_inflow_outer([](double phi) { return 0.5 * std::sin(phi); });
  const TransportSolution s = solve(p);
  CHECK(sup_difference(s.u, dense_oracle_transport(p)) < 1e-7);
  for (int i = 0; i < s.u.rows(); ++i) CHECK(std::abs(angular_mean(p.angles, s.u.row(i)) - s.u_bar[static_cast<std::size_t>(i)]) < 1e-9);
}

TEST_CASE("constant data") {
  AnnulusProblem p = make_problem(0.2);
  p.set_inflow_inner([](double) { return 3.0; });
  p.set_inflow_outer([](double) { return 3.0; });
  const TransportSolution s = solve(p);
  CHECK(sup_difference(s.u, Field2D(p.radial.nodes(), p.angles.nodes(), 3.0)) < 1e-12);
  CHECK(sup_difference(dense_oracle_transport(p), Field2D(p.radial.nodes(), p.angles.nodes(), 3.0)) < 1e-12);
}

TEST_CASE("mirror symmetry φ → π − φ") {
  AnnulusProblem p = make_problem(0.2);
  // Data with g(π − φ) = g(φ).
  p.set_inflow_inner([](double phi) { return std::sin(phi) * std::sin(phi) + std::sin(phi); });
  p.set_inflow_outer([](double phi) { return 1.0 + std::sin(3.0 * phi); });
  const Field2D u = dense_oracle_transport(p);
  for (int i = 0; i < u.rows(); ++i)
    for (int j = 0; j < u.cols(); ++j) CHECK(std::abs(u(i, j) - u(i, p.angles.mirror(j))) < 1e-10);
}

TEST_CASE("maximum principle and sup bound") {
  AnnulusProblem p = make_problem(0.1, 41, 32, 2.0);
  p.set_inflow_inner([](double phi) { return std::cos(phi); });
  p.set_inflow_outer([](double) { return 0.0; });
  const TransportSolution s = solve(p);
  double lo = 1e300, hi = -1e300;
  for (double v : s.u.values()) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  CHECK(lo >= -1.0 - 1e-9);
  CHECK(hi <= 1.0 + 1e-9);
}

TEST_CASE("plain iteration residual is nonincreasing at the end") {
  AnnulusProblem p = make_problem(0.2);
  p.set_inflow_inner([](double phi) { return std::cos(phi) + 1.0; });
  p.set_inflow_outer([](double) { return 0.0; });
  p.control.acceleration = Acceleration::none;
  const TransportSolution s = solve(p);
  const auto& h = s.residual_history;
  REQUIRE(h.size() > 11);
  for (std::size_t k = h.size() - 10; k < h.size(); ++k) CHECK(h[k] <= h[k - 1] * (1.0 + 1e-12));
}

TEST_CASE("reduced solution satisfies the planar equation at any rotation") {
  // Residual of ε w·∇u + u − ū at random points, directions and rotations. It is set by the
  // radial interpolation of ū, so it must shrink with the radial mesh.
  const double epsilon = 0.2;
  auto worst_residual = [&](int radii) {
    AnnulusProblem p = make_problem(epsilon, radii, 32);
    p.set_inflow_inner([](double phi) { return std::cos(phi) + 2.0; });
    p.set_inflow_outer([](double phi) { return std::sin(phi); });
    const TransportSolution s = solve(p);
    auto planar = [&](double x1, double x2, double w1, double w2) {
      const double theta = std::atan2(x2, x1);
      const double c = std::cos(theta), sn = std::sin(theta);
      const double v1 = c * w1 + sn * w2, v2 = -sn * w1 + c * w2;  // (−sinφ, −cosφ)
      return ray_integrate(p, s.u_bar, std::hypot(x1, x2), std::atan2(-v1, -v2));
    };
    std::mt19937 rng(5);
    std::uniform_real_distribution<double> radius(1.2, 1.8), angle(-kPi, kPi);
    double worst = 0.0;
    for (int k = 0; k < 20; ++k) {
      const double r = radius(rng), theta = angle(rng), xi = angle(rng);
      const double x1 = r * std::cos(theta), x2 = r * std::sin(theta);
      const double w1 = std::cos(xi), w2 = std::sin(xi);
      // Five-point stencil; a wide step keeps the quadrature jitter out of the difference.
      const double h = 1e-2;
      auto at = [&](double k) { return planar(x1 + k * h * w1, x2 + k * h * w2, w1, w2); };
      const double derivative = (at(-2.0) - 8.0 * at(-1.0) + 8.0 * at(1.0) - at(2.0)) / (12.0 * h);
      const double mean = interpolate_linear(p.radial.nodes(), s.u_bar, r);
      worst = std::max(worst, std::abs(epsilon * derivative + planar(x1, x2, w1, w2) - mean));
    }
    return worst;
  };
  const double coarse = worst_residual(41);
  const double fine = worst_residual(161);
  CHECK(coarse < 1e-4);
  CHECK(fine < 0.5 * coarse);
}
