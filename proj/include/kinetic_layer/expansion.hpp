#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "kinetic_layer/annulus.hpp"
#include "kinetic_layer/milne.hpp"

namespace kinetic_layer {

enum class Variant { classical, geometric };

const char* to_string(Variant variant);
Variant parse_variant(const std::string& name);

/// Radial harmonic function c₁ + c₂ ln r.
struct InteriorProfile {
  double c1 = 0.0;
  double c2 = 0.0;
  double value(double r) const;
  double slope(double r) const;
};

/// ū₀ with ū₀(r_minus) = a_minus and ū₀(r_plus) = a_plus.
InteriorProfile interior_order0(double a_minus, double a_plus, double r_minus, double r_plus);

struct LayerSettings {
  double slab_length = 15.0;  // added beyond the cut-off support, in stretched units
  int n_eta = 241;            // nodes over slab_length; the extension keeps the spacing
  int n_phi = 64;
  IterationControl control;
};

/// Boundary layer attached to one circle, solved in its own stretched coordinates.
///
/// Inner circle: η = (r − R₋)/ε and layer angle −φ. Outer circle: η = (R₊ − r)/ε, same angle.
struct BoundaryLayer {
  Circle circle = Circle::inner;
  Variant variant = Variant::classical;
  double epsilon = 0.0;
  double r_minus = 0.0;
  double r_plus = 0.0;
  MilneProblem problem;
  MilneSolution solution;

  double f_inf() const { return solution.f_inf; }
  /// Layer solution f at an annulus state (no cut-off, no subtraction of f∞).
  double solution_at(double r, double phi) const;
  /// ψ₀(distance)·(f − f∞) at an annulus state.
  double at(double r, double phi) const;
};

/// Solves the flat (classical) or curvature-corrected (geometric) Milne problem with inflow g
/// given in annulus angles, S = 0.
BoundaryLayer boundary_layer_order0(Variant variant, Circle circle, const AngularFunction& g,
                                    double epsilon, double r_minus, double r_plus,
                                    const LayerSettings& settings);

struct ExpansionBundle {
  Variant variant = Variant::classical;
  double epsilon = 0.0;
  double r_minus = 0.0;
  double r_plus = 0.0;
  InteriorProfile interior;
  std::optional<BoundaryLayer> inner;
  std::optional<BoundaryLayer> outer;
  // Order ε terms.
  std::optional<InteriorProfile> interior1;
  std::optional<BoundaryLayer> inner1;
  std::optional<BoundaryLayer> outer1;
};

ExpansionBundle build_bundle(Variant variant, double epsilon, double r_minus, double r_plus,
                             const AngularFunction& g_minus, const AngularFunction& g_plus,
                             const LayerSettings& settings);

/// Adds ū₁ and the order-one layers. Their inflow is w·∇ū₀ = −sinφ ū₀′(r) at each wall.
void add_order1(ExpansionBundle& bundle, const LayerSettings& settings);

/// ū₀(r) + outer layer + inner layer, plus ε·(ū₁ + sinφ ū₀′ + order-one layers) when present
/// and requested.
double composite(const ExpansionBundle& bundle, double r, double phi, bool with_order1 = false);

/// Sup over the radial × angular grid of |u − composite|.
double composite_error(const ExpansionBundle& bundle, const TransportSolution& solution,
                       bool with_order1 = false);

struct ExperimentConfig {
  double r_minus = 1.0;
  double r_plus = 2.0;
  std::vector<double> epsilons{0.1, 0.05, 0.025};
  double n_grazing = 0.5;
  int n_eta = 241;
  int n_phi = 64;
  int n_r = 81;
  double slab_length = 15.0;
  double tolerance = 1e-10;
  Variant variant = Variant::geometric;
  std::string output;
  double radial_clustering = 2.0;
  bool shifted = false;  // g₋ = cosφ + 2 instead of cosφ in the convergence study

  void validate() const;
  LayerSettings layer_settings() const;
};

/// Reads key = value lines; '#' starts a comment. Unknown keys are errors.
ExperimentConfig parse_config(std::istream& in);
ExperimentConfig load_config(const std::string& path);

struct ConvergenceRow {
  double epsilon = 0.0;
  double sup_error = 0.0;
  double fitted_order = 0.0;  // least-squares slope of log error against log ε, all rows
};

/// Annulus transport with g₋ = cosφ (or cosφ + 2), g₊ = 0 against the composite expansion.
std::vector<ConvergenceRow> convergence_study(const ExperimentConfig& config);

struct CounterexampleRow {
  double epsilon = 0.0;
  double u_num = 0.0;
  double U_num = 0.0;
  double u_pred = 0.0;
  double U_pred = 0.0;
  double discrepancy = 0.0;
};

/// Flat and curvature-corrected Milne problems with inflow G = cosφ + 2 on the inner wall,
/// compared at the stretched point (η, φ) = (nε, ε).
std::vector<CounterexampleRow> counterexample_experiment(const ExperimentConfig& config);

struct CharacteristicRow {
  std::string family;
  int curve = 0;
  double eta = 0.0;
  double phi = 0.0;
  double energy = 0.0;
};

/// Fans of constant-energy curves: "flat", "concave" (inner wall) and "convex" (outer wall).
std::vector<CharacteristicRow> emit_characteristics(const ExperimentConfig& config);

void write_csv(std::ostream& out, const std::vector<ConvergenceRow>& rows);
void write_csv(std::ostream& out, const std::vector<CounterexampleRow>& rows);
void write_csv(std::ostream& out, const std::vector<CharacteristicRow>& rows);

}  // namespace kinetic_layer
