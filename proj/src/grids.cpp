#include "kinetic_layer/grids.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "kinetic_layer/errors.hpp"

namespace kinetic_layer {

AngularGrid::AngularGrid(int count) : count_(count), weight_(0.0) {
  if (count <= 0) throw DomainError("AngularGrid: count must be positive");
  weight_ = 2.0 * kPi / count;
  nodes_.resize(static_cast<std::size_t>(count));
  for (int j = 0; j < count; ++j) nodes_[static_cast<std::size_t>(j)] = -kPi + (j + 0.5) * weight_;
}

double AngularGrid::face(int j) const { return -kPi + j * weight_; }

int AngularGrid::mirror(int j) const {
  if (count_ % 2 != 0) throw DomainError("AngularGrid::mirror needs an even count");
  const int k = count_ / 2 - 1 - j;
  return ((k % count_) + count_) % count_;
}

double angular_mean(const AngularGrid& grid, std::span<const double> values) {
  if (static_cast<int>(values.size()) != grid.count()) {
    throw DimensionError("angular_mean: slice has " + std::to_string(values.size()) +
                         " values, grid has " + std::to_string(grid.count()));
  }
  double sum = 0.0;
  for (double v : values) sum += v;
  return sum * grid.weight() / (2.0 * kPi);
}

SlabGrid::SlabGrid(std::vector<double> nodes) : nodes_(std::move(nodes)) {
  if (nodes_.size() < 2) throw DomainError("SlabGrid: need at least two nodes");
  if (nodes_.front() != 0.0) throw DomainError("SlabGrid: first node must be 0");
  for (std::size_t i = 1; i < nodes_.size(); ++i) {
    if (!(nodes_[i] > nodes_[i - 1])) throw DomainError("SlabGrid: nodes must increase strictly");
  }
}

SlabGrid SlabGrid::uniform(double length, int count) { return graded(length, count, 1.0); }

SlabGrid SlabGrid::graded(double length, int count, double ratio) {
  if (!(length > 0.0) || count < 2 || !(ratio > 0.0)) {
    throw DomainError("SlabGrid::graded: need length > 0, count >= 2, ratio > 0");
  }
  const int cells = count - 1;
  std::vector<double> nodes(static_cast<std::size_t>(count));
  if (std::abs(ratio - 1.0) < 1e-14 || cells == 1) {
    for (int i = 0; i < count; ++i) nodes[static_cast<std::size_t>(i)] = length * i / cells;
  } else {
    const double growth = std::pow(ratio, 1.0 / (cells - 1));
    const double first = length * (growth - 1.0) / (std::pow(growth, cells) - 1.0);
    double width = first;
    nodes[0] = 0.0;
    for (int i = 1; i < count; ++i) {
      nodes[static_cast<std::size_t>(i)] = nodes[static_cast<std::size_t>(i - 1)] + width;
      width *= growth;
    }
  }
  nodes.back() = length;
  return SlabGrid(std::move(nodes));
}

RadialGrid::RadialGrid(double r_minus, double r_plus, int count, double clustering) {
  if (!(r_minus > 0.0) || !(r_plus > r_minus)) {
    throw DomainError("RadialGrid: need 0 < r_minus < r_plus");
  }
  if (count < 2) throw DomainError("RadialGrid: need at least two nodes");
  if (clustering < 0.0) throw DomainError("RadialGrid: clustering must be nonnegative");
  nodes_.resize(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    double s = static_cast<double>(i) / (count - 1);  // [0,1]
    if (clustering > 0.0) {
      s = 0.5 * (1.0 + std::tanh(clustering * (2.0 * s - 1.0)) / std::tanh(clustering));
    }
    nodes_[static_cast<std::size_t>(i)] = r_minus + (r_plus - r_minus) * s;
  }
  nodes_.front() = r_minus;
  nodes_.back() = r_plus;
}

Field2D::Field2D(std::vector<double> rows, std::vector<double> cols, double fill)
    : row_coords_(std::move(rows)), col_coords_(std::move(cols)) {
  values_.assign(row_coords_.size() * col_coords_.size(), fill);
}

Field2D::Field2D(std::vector<double> rows, std::vector<double> cols, std::vector<double> values)
    : row_coords_(std::move(rows)), col_coords_(std::move(cols)), values_(std::move(values)) {
  if (values_.size() != row_coords_.size() * col_coords_.size()) {
    throw DimensionError("Field2D: table size does not match grids");
  }
}

std::span<const double> Field2D::row(int i) const {
  return {values_.data() + index(i, 0), col_coords_.size()};
}

std::span<double> Field2D::row(int i) { return {values_.data() + index(i, 0), col_coords_.size()}; }

double sup_norm(const Field2D& field) {
  double m = 0.0;
  for (double v : field.values()) m = std::max(m, std::abs(v));
  return m;
}

double sup_difference(const Field2D& a, const Field2D& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw DimensionError("sup_difference: shapes differ");
  }
  double m = 0.0;
  for (std::size_t k = 0; k < a.values().size(); ++k) {
    m = std::max(m, std::abs(a.values()[k] - b.values()[k]));
  }
  return m;
}

namespace {

// Index i with nodes[i] <= x <= nodes[i+1]; assumes x inside the range.
std::size_t bracket(std::span<const double> nodes, double x) {
  auto it = std::upper_bound(nodes.begin(), nodes.end(), x);
  std::size_t i = static_cast<std::size_t>(std::distance(nodes.begin(), it));
  if (i == 0) return 0;
  i -= 1;
  return std::min(i, nodes.size() - 2);
}

}  // namespace

double interpolate_linear(std::span<const double> nodes, std::span<const double> values,
                          double x) {
  if (nodes.size() != values.size() || nodes.empty()) {
    throw DimensionError("interpolate_linear: size mismatch");
  }
  if (nodes.size() == 1) return values[0];
  if (x <= nodes.front()) return values.front();
  if (x >= nodes.back()) return values.back();
  const std::size_t i = bracket(nodes, x);
  const double t = (x - nodes[i]) / (nodes[i + 1] - nodes[i]);
  return (1.0 - t) * values[i] + t * values[i + 1];
}

double interpolate(const Field2D& field, std::pair<double, double> point) {
  const auto& rows = field.row_coords();
  const auto& cols = field.col_coords();
  const auto [x, y] = point;
  if (rows.size() < 2 || cols.size() < 2) throw DimensionError("interpolate: field too small");
  if (x < rows.front() || x > rows.back() || y < cols.front() || y > cols.back()) {
    throw DomainError("interpolate: point outside the grid bounding box");
  }
  const std::size_t i = bracket(rows, x);
  const std::size_t j = bracket(cols, y);
  const double tx = (x - rows[i]) / (rows[i + 1] - rows[i]);
  const double ty = (y - cols[j]) / (cols[j + 1] - cols[j]);
  const int ii = static_cast<int>(i);
  const int jj = static_cast<int>(j);
  return (1.0 - tx) * ((1.0 - ty) * field(ii, jj) + ty * field(ii, jj + 1)) +
         tx * ((1.0 - ty) * field(ii + 1, jj) + ty * field(ii + 1, jj + 1));
}

namespace {

double ramp(double mu, double width, double start_frac, double end_frac, const char* name) {
  if (!(width > 0.0)) throw DomainError(std::string(name) + ": width must be positive");
  if (mu < 0.0) throw DomainError(std::string(name) + ": distance must be nonnegative");
  const double a = start_frac * width;
  const double b = end_frac * width;
  if (mu <= a) return 1.0;
  if (mu >= b) return 0.0;
  const double t = (mu - a) / (b - a);
  return 1.0 - t * t * (3.0 - 2.0 * t);
}

}  // namespace

double cutoff_psi(double mu, double width) { return ramp(mu, width, 0.5, 0.75, "cutoff_psi"); }

double cutoff_psi0(double mu, double width) {
  return ramp(mu, width, 0.25, 0.375, "cutoff_psi0");
}

}  // namespace kinetic_layer
