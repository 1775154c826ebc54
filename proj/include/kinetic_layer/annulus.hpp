#pragma once

#include <vector>

#include "kinetic_layer/grids.hpp"
#include "kinetic_layer/iteration.hpp"
#include "kinetic_layer/milne.hpp"

namespace kinetic_layer {

/// Steady transport ε w·∇u + u − ū = 0 in R₋ < |x| < R₊ for rotationally symmetric data.
///
/// States are (r, φ) with the direction w = (−sinφ, −cosφ) seen from the point (r, 0).
/// Incoming directions are sinφ < 0 on the inner circle and sinφ > 0 on the outer one.
/// The reduced equation reads −ε sinφ ∂r u − (ε/r) cosφ ∂φ u + u − ū = 0.
struct AnnulusProblem {
  AnnulusProblem(double epsilon, RadialGrid radial, AngularGrid angles);

  void set_inflow_inner(AngularFunction g);
  void set_inflow_outer(AngularFunction g);
  /// Samples on the full angular grid; only the incoming half is read.
  void set_inflow_inner(std::vector<double> samples);
  void set_inflow_outer(std::vector<double> samples);
  double inflow_inner_at(double phi) const;
  double inflow_outer_at(double phi) const;

  double r_minus() const { return radial.r_minus(); }
  double r_plus() const { return radial.r_plus(); }

  double epsilon;
  RadialGrid radial;
  AngularGrid angles;
  std::vector<double> inflow_inner;
  std::vector<double> inflow_outer;
  AngularFunction inner_function;
  AngularFunction outer_function;
  IterationControl control;
};

struct TransportSolution {
  Field2D u;                 // over (r_i, φ_j)
  std::vector<double> u_bar;  // angular mean at each r_i
  int iterations = 0;
  double residual = 0.0;
  std::vector<double> residual_history;
};

enum class Circle { inner, outer };

struct ExitPoint {
  double time = 0.0;  // t_b: the backward ray x − εtw leaves the annulus at t = t_b
  Circle circle = Circle::inner;
  double arrival_angle = 0.0;  // relative angle φ at the boundary point
};

ExitPoint exit_time(const AnnulusProblem& problem, double r, double phi);

/// u(r, φ) = g(φ_b) e^{−t_b} + ∫_0^{t_b} e^{−t} ū(|x − εtw|) dt with ū piecewise linear in r.
double ray_integrate(const AnnulusProblem& problem, const std::vector<double>& u_bar, double r,
                     double phi);

/// The Duhamel formula on all grid states as an affine map of ū: u = boundary + response·ū.
class DuhamelMap {
 public:
  explicit DuhamelMap(const AnnulusProblem& problem);

  int states() const { return static_cast<int>(boundary_.size()); }
  int radii() const { return radii_; }
  const std::vector<double>& boundary() const { return boundary_; }
  /// Row-major states × radii.
  const std::vector<double>& response() const { return response_; }
  Field2D apply(const std::vector<double>& u_bar) const;

 private:
  const AnnulusProblem& problem_;
  int radii_;
  std::vector<double> boundary_;
  std::vector<double> response_;
};

/// Source iteration ū ← mean(boundary + response·ū).
TransportSolution solve(const AnnulusProblem& problem);

/// Direct dense solve of (I − response·mean) u = boundary on the grid states.
Field2D dense_oracle_transport(const AnnulusProblem& problem);

}  // namespace kinetic_layer
