#pragma once

#include <functional>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "kinetic_layer/force.hpp"
#include "kinetic_layer/grids.hpp"
#include "kinetic_layer/iteration.hpp"

namespace kinetic_layer {

using AngularFunction = std::function<double(double phi)>;
using SourceFunction = std::function<double(double eta, double phi)>;

/// λf + sinφ ∂η f − F(η) cosφ ∂φ f + f − f̄ = S on 0 < η < L,
/// f(0, φ) = h(φ) for sinφ > 0, f(L, φ) = f(L, −φ).
struct MilneProblem {
  MilneProblem(ForceProfile profile, SlabGrid slab, AngularGrid angles);

  /// Samples h on the angular grid and keeps the function for off-grid lookups.
  void set_inflow(AngularFunction h);
  /// Samples only; entries with sinφ ≤ 0 are ignored.
  void set_inflow(std::vector<double> samples);
  double inflow_at(double phi) const;

  ForceProfile profile;
  SlabGrid slab;
  AngularGrid angles;
  std::vector<double> inflow;
  AngularFunction inflow_function;
  SourceFunction source;  // empty means S ≡ 0
  double penalty = 0.0;
  double bound_data = 0.0;  // M with |h| ≤ M and |S| ≤ M e^{−Kη}
  double decay_rate = 0.0;  // K
  IterationControl control;
};

struct DecayFit {
  double rate = 0.0;
  double r_squared = 0.0;
  bool underflow = false;
};

struct MilneSolution {
  Field2D f;                      // node values over (η_i, φ_j)
  std::vector<double> q;          // angular mean of f at each node
  Field2D r;                      // f − q
  Field2D cells;                  // finite-volume cell values
  std::vector<double> cell_mean;  // f̄ per cell
  double f_inf = 0.0;
  DecayFit decay;
  int iterations = 0;
  double residual = 0.0;
  std::vector<double> residual_history;
};

/// Upwind finite-volume transport solver for one problem. Keeps a reference to the problem.
///
/// Cells are [η_k, η_{k+1}] × [φ_{j−1/2}, φ_{j+1/2}]. The balance is taken on the e^V-weighted
/// conservative form ∂η(e^V sinφ f) + ∂φ(−e^V F cosφ f) + e^V((1+λ)f − f̄ − S) = 0, which
/// keeps constants exact and the scheme monotone.
class MilneSweeper {
 public:
  explicit MilneSweeper(const MilneProblem& problem);

  int cells() const { return cells_; }
  int angles() const { return angles_; }

  /// Cell values for a given cell-averaged total source (f̄ + S), inflow and reflection.
  Field2D sweep_cells(const Field2D& total_source) const;
  /// Node values reconstructed from the upwind face values.
  Field2D node_field(const Field2D& cell_values) const;
  /// e^V-weighted cell averages of S at each angle (zero when S is absent).
  const Field2D& source_cells() const { return source_; }
  std::vector<double> cell_means(const Field2D& cell_values) const;
  Field2D empty_cells() const;

  /// Shared geometric data, also used by the dense oracle.
  const std::vector<double>& node_weight() const { return exp_v_; }  // e^{V(η_i)}
  const std::vector<double>& cell_weight() const { return cell_weight_; }  // ∫ e^V over cell

 private:
  void run(const Field2D& total_source, const std::vector<double>& inflow,
           const std::vector<double>* reflected, Field2D& out) const;
  void update_cell(int k, int j, const Field2D& total_source, const std::vector<double>& inflow,
                   const std::vector<double>* reflected, Field2D& out) const;
  std::vector<double> top_row_upper(const Field2D& cell_values) const;

  const MilneProblem& problem_;
  int cells_;
  int angles_;
  bool convex_;
  std::vector<double> exp_v_;
  std::vector<double> exp_v_jump_;
  std::vector<double> cell_weight_;
  std::vector<double> sin_;
  std::vector<double> face_cos_;
  std::vector<int> order_lower_;  // sinφ < 0 cells in dependency order
  std::vector<int> order_upper_;  // sinφ > 0 cells in dependency order
  Field2D source_;
  // Reflection closure on the concave side: top-row upper values b solve (I − A) b = c.
  std::vector<int> upper_angles_;
  Eigen::PartialPivLU<Eigen::MatrixXd> closure_;
};

/// One transport solve with the given node-wise total source (f̄ + S), interpreted as
/// piecewise linear in η. Returns node values.
Field2D sweep(const MilneProblem& problem, const Field2D& total_source);

/// Source iteration on the cell means.
MilneSolution solve(const MilneProblem& problem);

/// Assembles the same discrete equations, mean coupling and reflection included, as one
/// dense system and solves it by LU. Returns node values.
Field2D dense_oracle_milne(const MilneProblem& problem);

/// q(η) = angular mean of f(η, ·) and r = f − q.
std::pair<std::vector<double>, Field2D> decompose(const Field2D& f);

/// Average of q over the tail window [0.8 L, L].
double extract_limit(const SlabGrid& slab, const std::vector<double>& q);

/// Least-squares fit of log sup_φ |f(η, ·) − f_∞| on [L/4, 3L/4].
DecayFit fit_decay(const Field2D& f, double f_inf);

struct SecondOrderLayer {
  Field2D field;                  // a(η) sinφ
  std::vector<double> amplitude;  // a(η_i)
  double tail_bound = 0.0;        // contribution estimated beyond the slab end
};

/// f² = a(η) sinφ with a(η) = −e^{−V(η)} ∫_η^∞ e^{V(y)} 2 S_Q(y) dy and a(∞) = 0.
/// The integral beyond L uses S_Q(L) e^{−K(y−L)}.
SecondOrderLayer build_f2(const ForceProfile& profile, const SlabGrid& slab,
                          const AngularGrid& angles, const std::function<double(double)>& sq,
                          double decay_rate);
/// Same with S_Q sampled at the slab nodes (linear in between).
SecondOrderLayer build_f2(const ForceProfile& profile, const SlabGrid& slab,
                          const AngularGrid& angles, const std::vector<double>& sq,
                          double decay_rate);

struct OrthogonalityReport {
  double max_residual = 0.0;
  double worst_eta = 0.0;
  std::vector<double> flux;      // (1/2π)∫ sinφ r dφ at each node
  std::vector<double> expected;  // −∫_η^L e^{V(y)−V(η)} S̄(y) dy
};

/// Compares the first angular moment of r with the identity implied by the equation.
OrthogonalityReport check_orthogonality(const MilneProblem& problem,
                                        const MilneSolution& solution);

struct MaxPrincipleReport {
  double lower_bound = 0.0;
  double upper_bound = 0.0;
  double min_value = 0.0;
  double max_value = 0.0;
};

/// Throws PropertyFailure with a witness if f leaves [min h − tol, max h + tol].
MaxPrincipleReport check_max_principle(const MilneProblem& problem,
                                       const MilneSolution& solution);

/// f(η, φ) by integrating backward along the exact characteristic with the solved mean,
/// the inflow and the source; reflections at η = L are followed.
double evaluate(const MilneProblem& problem, const MilneSolution& solution, double eta,
                double phi);

}  // namespace kinetic_layer
