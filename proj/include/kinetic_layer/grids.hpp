#pragma once

#include <span>
#include <utility>
#include <vector>

namespace kinetic_layer {

inline constexpr double kPi = 3.14159265358979323846;

/// Midpoint grid on the velocity circle: φ_j = −π + (j + 1/2)·2π/count.
///
/// Faces sit at φ_{j−1/2} = −π + j·h. For even counts the grid is closed
/// under φ → −φ and φ → π − φ and never samples sinφ = 0.
class AngularGrid {
 public:
  explicit AngularGrid(int count);

  int count() const { return count_; }
  double weight() const { return weight_; }
  double node(int j) const { return nodes_[static_cast<std::size_t>(j)]; }
  const std::vector<double>& nodes() const { return nodes_; }
  /// Lower face of cell j, −π + j·h.
  double face(int j) const;
  /// Index of −φ_j.
  int reflect(int j) const { return count_ - 1 - j; }
  /// Index of π − φ_j (requires an even count).
  int mirror(int j) const;

 private:
  int count_;
  double weight_;
  std::vector<double> nodes_;
};

/// (1/2π) Σ values·weight over an angular grid.
double angular_mean(const AngularGrid& grid, std::span<const double> values);

/// Nodes 0 = η_0 < … < η_N = L of the truncated half-space.
class SlabGrid {
 public:
  explicit SlabGrid(std::vector<double> nodes);
  static SlabGrid uniform(double length, int count);
  /// Geometric grading with last/first cell width ratio `ratio` (ratio = 1 is uniform).
  static SlabGrid graded(double length, int count, double ratio);

  double length() const { return nodes_.back(); }
  int count() const { return static_cast<int>(nodes_.size()); }
  int cells() const { return count() - 1; }
  double node(int i) const { return nodes_[static_cast<std::size_t>(i)]; }
  const std::vector<double>& nodes() const { return nodes_; }

 private:
  std::vector<double> nodes_;
};

/// Radial nodes spanning [r_minus, r_plus], optionally clustered at both walls.
class RadialGrid {
 public:
  /// clustering = 0 gives uniform spacing; larger values pull nodes toward both circles
  /// through a tanh map.
  RadialGrid(double r_minus, double r_plus, int count, double clustering = 0.0);

  double r_minus() const { return nodes_.front(); }
  double r_plus() const { return nodes_.back(); }
  int count() const { return static_cast<int>(nodes_.size()); }
  double node(int i) const { return nodes_[static_cast<std::size_t>(i)]; }
  const std::vector<double>& nodes() const { return nodes_; }

 private:
  std::vector<double> nodes_;
};

/// Dense row-major table over two coordinate axes.
class Field2D {
 public:
  Field2D() = default;
  Field2D(std::vector<double> rows, std::vector<double> cols, double fill = 0.0);
  Field2D(std::vector<double> rows, std::vector<double> cols, std::vector<double> values);

  int rows() const { return static_cast<int>(row_coords_.size()); }
  int cols() const { return static_cast<int>(col_coords_.size()); }
  const std::vector<double>& row_coords() const { return row_coords_; }
  const std::vector<double>& col_coords() const { return col_coords_; }

  double& operator()(int i, int j) { return values_[index(i, j)]; }
  double operator()(int i, int j) const { return values_[index(i, j)]; }
  std::span<const double> row(int i) const;
  std::span<double> row(int i);
  const std::vector<double>& values() const { return values_; }

 private:
  std::size_t index(int i, int j) const {
    return static_cast<std::size_t>(i) * col_coords_.size() + static_cast<std::size_t>(j);
  }

  std::vector<double> row_coords_;
  std::vector<double> col_coords_;
  std::vector<double> values_;
};

double sup_norm(const Field2D& field);
/// Largest |a − b| over two fields of identical shape.
double sup_difference(const Field2D& a, const Field2D& b);
/// Bilinear interpolation; throws DomainError outside the bounding box.
double interpolate(const Field2D& field, std::pair<double, double> point);

/// Piecewise-linear interpolation of `values` sampled at increasing `nodes`.
double interpolate_linear(std::span<const double> nodes, std::span<const double> values,
                          double x);

/// Cut-off ψ: 1 on μ ≤ d/2, 0 on μ ≥ 3d/4, cubic smoothstep in between.
double cutoff_psi(double mu, double width);
/// Cut-off ψ₀: 1 on μ ≤ d/4, 0 on μ ≥ 3d/8, cubic smoothstep in between.
double cutoff_psi0(double mu, double width);

}  // namespace kinetic_layer
