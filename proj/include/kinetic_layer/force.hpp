#pragma once

namespace kinetic_layer {

/// Curvature force acting on the angle in a boundary layer, with its potential.
///
/// Distances are in the stretched variable η = μ/ε, μ the physical distance to the wall.
/// The inner (concave) wall of radius R gives F = −εψ(εη)/(R + εη) ≤ 0, the outer (convex)
/// wall gives F = +εψ(εη)/(R − εη) ≥ 0. V' = −F, V(0) = 0 and the energy cosφ·e^V is
/// constant along characteristics.
class ForceProfile {
 public:
  enum class Kind { flat, inner, outer };

  static ForceProfile flat();
  /// Concave side: the layer next to the inner circle of an annulus.
  static ForceProfile inner(double radius, double epsilon, double width);
  /// Convex side: the layer next to the outer circle of an annulus.
  static ForceProfile outer(double radius, double epsilon, double width);

  Kind kind() const { return kind_; }
  bool is_flat() const { return kind_ == Kind::flat; }
  double radius() const { return radius_; }
  double epsilon() const { return epsilon_; }
  double width() const { return width_; }

  double force(double eta) const;
  double potential(double eta) const;
  /// V(b) − V(a) without cancellation for close arguments.
  double potential_difference(double a, double b) const;
  double energy(double eta, double phi) const;
  /// V beyond the support of the force.
  double potential_limit() const;
  /// η where the force vanishes for good (infinity for the flat profile).
  double support_end() const;
  /// Smallest η with V(η) = v; v must lie between 0 and potential_limit().
  double inverse_potential(double v) const;

 private:
  ForceProfile(Kind kind, double radius, double epsilon, double width);

  // +1 for the inner wall, −1 for the outer wall.
  double orientation() const { return kind_ == Kind::outer ? -1.0 : 1.0; }
  // ∫_a^b ψ(m)/(R + s·m) dm over physical distances.
  double scaled_integral(double a, double b) const;

  Kind kind_;
  double radius_ = 0.0;
  double epsilon_ = 0.0;
  double width_ = 0.0;
};

}  // namespace kinetic_layer
