#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "kinetic_layer/errors.hpp"
#include "kinetic_layer/grids.hpp"

using namespace kinetic_layer;

TEST_CASE("angular mean of simple profiles") {
  const AngularGrid grid(32);
  std::vector<double> constant(32, 4.25), cosine, sine_sq;
  for (double phi : grid.nodes()) {
    cosine.push_back(std::cos(phi));
    sine_sq.push_back(std::sin(phi) * std::sin(phi));
  }
  CHECK(angular_mean(grid, constant) == doctest::Approx(4.25).epsilon(1e-15));
  CHECK(std::abs(angular_mean(grid, cosine)) < 1e-14);
  // (1/2π)∫ sin² = 1/2
  CHECK(std::abs(angular_mean(grid, sine_sq) - 0.5) < 1e-12);
  CHECK_THROWS_AS(angular_mean(grid, std::vector<double>(31, 1.0)), DimensionError);
}

TEST_CASE("angular grid symmetries") {
  const AngularGrid grid(16);
  for (int j = 0; j < grid.count(); ++j) {
    CHECK(grid.node(grid.reflect(j)) == doctest::Approx(-grid.node(j)).epsilon(1e-15));
    const double mirrored = grid.node(grid.mirror(j));
    CHECK(std::cos(mirrored) == doctest::Approx(-std::cos(grid.node(j))).epsilon(1e-13));
    CHECK(std::sin(mirrored) == doctest::Approx(std::sin(grid.node(j))).epsilon(1e-13));
    CHECK(std::abs(std::sin(grid.node(j))) > 0.0);
  }
  CHECK_THROWS_AS(AngularGrid(0), DomainError);
}

TEST_CASE("cut-off plateaus, supports and midpoints") {
  const double d = 1.0;
  CHECK(cutoff_psi(0.4 * d, d) == 1.0);
  CHECK(cutoff_psi(0.8 * d, d) == 0.0);
  CHECK(cutoff_psi(0.625 * d, d) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(cutoff_psi0(0.2 * d, d) == 1.0);
  CHECK(cutoff_psi0(0.4 * d, d) == 0.0);
  CHECK(cutoff_psi0(0.3125 * d, d) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK_THROWS_AS(cutoff_psi(-0.1, d), DomainError);
  CHECK_THROWS_AS(cutoff_psi0(0.1, 0.0), DomainError);

  // Monotone and C¹ across both ramp ends.
  double previous = 1.0;
  for (int k = 0; k <= 400; ++k) {
    const double mu = k * 1e-3 * 2.0;
    const double v = cutoff_psi(mu * 0.5, d);
    CHECK(v <= previous + 1e-15);
    previous = v;
  }
  const double h = 1e-6;
  for (double edge : {0.5, 0.75}) {
    const double left = (cutoff_psi(edge, d) - cutoff_psi(edge - h, d)) / h;
    const double right = (cutoff_psi(edge + h, d) - cutoff_psi(edge, d)) / h;
    CHECK(std::abs(left - right) < 1e-4);
  }
}

TEST_CASE("slab and radial grids") {
  const SlabGrid uniform = SlabGrid::uniform(8.0, 33);
  CHECK(uniform.count() == 33);
  CHECK(uniform.length() == 8.0);
  CHECK(uniform.node(1) == doctest::Approx(0.25));

  const SlabGrid graded = SlabGrid::graded(10.0, 21, 5.0);
  CHECK(graded.node(0) == 0.0);
  CHECK(graded.length() == doctest::Approx(10.0).epsilon(1e-14));
  const double first = graded.node(1) - graded.node(0);
  const double last = graded.node(20) - graded.node(19);
  CHECK(last / first == doctest::Approx(5.0).epsilon(1e-10));
  CHECK_THROWS_AS(SlabGrid({0.0, 2.0, 1.0}), DomainError);

  const RadialGrid radial(1.0, 2.0, 41, 2.5);
  CHECK(radial.r_minus() == 1.0);
  CHECK(radial.r_plus() == 2.0);
  for (int i = 1; i < radial.count(); ++i) CHECK(radial.node(i) > radial.node(i - 1));
  // Clustering puts the wall cells below the uniform spacing.
  CHECK(radial.node(1) - radial.node(0) < 1.0 / 40);
  CHECK_THROWS_AS(RadialGrid(2.0, 1.0, 11), DomainError);
}

TEST_CASE("field norms and interpolation") {
  const Field2D zero({0.0, 1.0}, {0.0, 1.0, 2.0});
  CHECK(sup_norm(zero) == 0.0);

  Field2D field({0.0, 1.0, 3.0}, {-1.0, 1.0});
  for (int i = 0; i < field.rows(); ++i)
    for (int j = 0; j < field.cols(); ++j)
      field(i, j) = 2.0 * field.row_coords()[static_cast<std::size_t>(i)] - 0.5 * field.col_coords()[static_cast<std::size_t>(j)] + 0.1 * i * j;
  CHECK(interpolate(field, {1.0, 1.0}) == field(1, 1));
  // Bilinear data is reproduced exactly.
  Field2D plane({0.0, 1.0, 3.0}, {-1.0, 1.0});
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 2; ++j)
      plane(i, j) = 1.0 + plane.row_coords()[static_cast<std::size_t>(i)] * plane.col_coords()[static_cast<std::size_t>(j)];
  CHECK(interpolate(plane, {2.0, 0.25}) == doctest::Approx(1.5).epsilon(1e-14));
  CHECK_THROWS_AS(interpolate(plane, {3.5, 0.0}), DomainError);
  CHECK(sup_difference(plane, plane) == 0.0);
  CHECK_THROWS_AS(sup_difference(plane, zero), DimensionError);

  const std::vector<double> nodes{0.0, 1.0, 2.0};
  const std::vector<double> values{0.0, 2.0, 3.0};
  CHECK(interpolate_linear(nodes, values, 1.5) == doctest::Approx(2.5));
  CHECK(interpolate_linear(nodes, values, 5.0) == 3.0);
}
