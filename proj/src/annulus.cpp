#include "kinetic_layer/annulus.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>
#include <boost/math/quadrature/gauss.hpp>

#include "kinetic_layer/errors.hpp"

namespace kinetic_layer {

namespace {

constexpr double kHorizon = 40.0;
using Panel = boost::math::quadrature::gauss<double, 4>;

double lookup_half(const AngularGrid& angles, const std::vector<double>& samples, bool upper,
                   double phi) {
  const int m = angles.count();
  const int b = upper ? m / 2 : 0;
  const auto n = static_cast<std::size_t>(m / 2);
  std::span<const double> nodes(angles.nodes().data() + b, n);
  std::span<const double> values(samples.data() + b, n);
  return interpolate_linear(nodes, values, phi);
}

// Adds `weight` times the linear interpolant of ū at radius r to `row`.
void spread(const std::vector<double>& radii, double r, double weight, double* row) {
  const std::size_t n = radii.size();
  if (r <= radii.front()) {
    row[0] += weight;
    return;
  }
  if (r >= radii.back()) {
    row[n - 1] += weight;
    return;
  }
  const auto it = std::upper_bound(radii.begin(), radii.end(), r);
  const auto i = static_cast<std::size_t>(std::distance(radii.begin(), it)) - 1;
  const double t = (r - radii[i]) / (radii[i + 1] - radii[i]);
  row[i] += weight * (1.0 - t);
  row[i + 1] += weight * t;
}

// Boundary term and response row of the Duhamel formula at (r, φ).
double duhamel_row(const AnnulusProblem& problem, double r, double phi, double* row) {
  const ExitPoint exit = exit_time(problem, r, phi);
  const double g = exit.circle == Circle::inner ? problem.inflow_inner_at(exit.arrival_angle)
                                                : problem.inflow_outer_at(exit.arrival_angle);
  const double boundary = g * std::exp(-exit.time);
  const double end = std::min(exit.time, kHorizon);
  if (end <= 0.0) return boundary;
  const auto& radii = problem.radial.nodes();
  const double eps = problem.epsilon;
  const double s = std::sin(phi);
  auto radius_at = [&](double t) {
    const double d = eps * t;
    const double r2 = r * r + 2.0 * d * r * s + d * d;
    return std::clamp(std::sqrt(std::max(r2, 0.0)), radii.front(), radii.back());
  };
  const double width = std::min(0.1, exit.time / 50.0);
  // end/width is often an integer up to roundoff; keep the count stable.
  const int panels = std::max(1, static_cast<int>(std::ceil(end / width - 1e-9)));
  const double dt = end / panels;
  const auto& abscissa = Panel::abscissa();
  const auto& weights = Panel::weights();
  for (int k = 0; k < panels; ++k) {
    const double a = k * dt;
    const double b = a + dt;
    const double mid = 0.5 * (a + b);
    const double half = 0.5 * dt;
    // Gauss nodes with the exact exponential mass on the panel.
    double nodes[8];
    double w[8];
    int count = 0;
    double mass = 0.0;
    for (std::size_t m = 0; m < abscissa.size(); ++m) {
      const double x = abscissa[m];
      for (double sign : {1.0, -1.0}) {
        if (x == 0.0 && sign < 0.0) continue;
        const double t = mid + sign * half * x;
        nodes[count] = t;
        w[count] = half * weights[m] * std::exp(-t);
        mass += w[count];
        ++count;
      }
    }
    const double exact = std::exp(-a) * -std::expm1(-dt);
    for (int m = 0; m < count; ++m) spread(radii, radius_at(nodes[m]), w[m] * exact / mass, row);
  }
  if (exit.time > kHorizon) spread(radii, radius_at(kHorizon), std::exp(-kHorizon), row);
  return boundary;
}

}  // namespace

AnnulusProblem::AnnulusProblem(double epsilon_in, RadialGrid radial_in, AngularGrid angles_in)
    : epsilon(epsilon_in),
      radial(std::move(radial_in)),
      angles(std::move(angles_in)),
      inflow_inner(static_cast<std::size_t>(angles.count()), 0.0),
      inflow_outer(static_cast<std::size_t>(angles.count()), 0.0) {
  if (!(epsilon > 0.0) || epsilon > 1.0) throw DomainError("AnnulusProblem: epsilon must lie in (0, 1]");
  if (angles.count() % 2 != 0) throw DomainError("AnnulusProblem: the angular grid needs an even count");
}

void AnnulusProblem::set_inflow_inner(AngularFunction g) {
  for (int j = 0; j < angles.count(); ++j) {
    inflow_inner[static_cast<std::size_t>(j)] = std::sin(angles.node(j)) < 0.0 ? g(angles.node(j)) : 0.0;
  }
  inner_function = std::move(g);
}

void AnnulusProblem::set_inflow_outer(AngularFunction g) {
  for (int j = 0; j < angles.count(); ++j) {
    inflow_outer[static_cast<std::size_t>(j)] = std::sin(angles.node(j)) > 0.0 ? g(angles.node(j)) : 0.0;
  }
  outer_function = std::move(g);
}

void AnnulusProblem::set_inflow_inner(std::vector<double> samples) {
  if (static_cast<int>(samples.size()) != angles.count()) {
    throw DimensionError("set_inflow_inner: one sample per angle expected");
  }
  inflow_inner = std::move(samples);
  inner_function = nullptr;
}

void AnnulusProblem::set_inflow_outer(std::vector<double> samples) {
  if (static_cast<int>(samples.size()) != angles.count()) {
    throw DimensionError("set_inflow_outer: one sample per angle expected");
  }
  inflow_outer = std::move(samples);
  outer_function = nullptr;
}

double AnnulusProblem::inflow_inner_at(double phi) const {
  return inner_function ? inner_function(phi) : lookup_half(angles, inflow_inner, false, phi);
}

double AnnulusProblem::inflow_outer_at(double phi) const {
  return outer_function ? outer_function(phi) : lookup_half(angles, inflow_outer, true, phi);
}

ExitPoint exit_time(const AnnulusProblem& problem, double r, double phi) {
  const double r_in = problem.r_minus();
  const double r_out = problem.r_plus();
  const double slack = 1e-12 * r_out;
  if (r < r_in - slack || r > r_out + slack) throw DomainError("exit_time: r outside the annulus");
  r = std::clamp(r, r_in, r_out);
  const double s = std::sin(phi);
  const double p = r * std::cos(phi);  // conserved along the straight ray
  ExitPoint out;
  double distance;
  if (s < 0.0 && std::abs(p) <= r_in) {
    distance = std::max(-r * s - std::sqrt(std::max(r_in * r_in - p * p, 0.0)), 0.0);
    out.circle = Circle::inner;
  } else {
    distance = std::max(-r * s + std::sqrt(std::max(r_out * r_out - p * p, 0.0)), 0.0);
    out.circle = Circle::outer;
  }
  out.time = distance / problem.epsilon;
  // At the boundary point the radial component is r sinφ + τ and the tangential one p.
  out.arrival_angle = std::atan2(r * s + distance, p);
  return out;
}

double ray_integrate(const AnnulusProblem& problem, const std::vector<double>& u_bar, double r,
                     double phi) {
  if (static_cast<int>(u_bar.size()) != problem.radial.count()) {
    throw DimensionError("ray_integrate: one mean per radial node expected");
  }
  std::vector<double> row(u_bar.size(), 0.0);
  double value = duhamel_row(problem, r, phi, row.data());
  for (std::size_t i = 0; i < row.size(); ++i) value += row[i] * u_bar[i];
  return value;
}

DuhamelMap::DuhamelMap(const AnnulusProblem& problem)
    : problem_(problem), radii_(problem.radial.count()) {
  const int m = problem.angles.count();
  const int states = radii_ * m;
  boundary_.assign(static_cast<std::size_t>(states), 0.0);
  response_.assign(static_cast<std::size_t>(states) * static_cast<std::size_t>(radii_), 0.0);
  parallel_for(radii_, [&](int i) {
    for (int j = 0; j < m; ++j) {
      const auto state = static_cast<std::size_t>(i * m + j);
      boundary_[state] = duhamel_row(problem, problem.radial.node(i), problem.angles.node(j),
                                     response_.data() + state * static_cast<std::size_t>(radii_));
    }
  });
}

Field2D DuhamelMap::apply(const std::vector<double>& u_bar) const {
  Field2D u(problem_.radial.nodes(), problem_.angles.nodes(), 0.0);
  const int m = problem_.angles.count();
  for (int i = 0; i < radii_; ++i) {
    for (int j = 0; j < m; ++j) {
      const auto state = static_cast<std::size_t>(i * m + j);
      const double* row = response_.data() + state * static_cast<std::size_t>(radii_);
      double v = boundary_[state];
      for (int k = 0; k < radii_; ++k) v += row[k] * u_bar[static_cast<std::size_t>(k)];
      u(i, j) = v;
    }
  }
  return u;
}

TransportSolution solve(const AnnulusProblem& problem) {
  const DuhamelMap map(problem);
  const int n = map.radii();
  const int m = problem.angles.count();
  // Reduce to ū ← c + K ū with K = mean ∘ response.
  Eigen::MatrixXd k = Eigen::MatrixXd::Zero(n, n);
  Eigen::VectorXd c = Eigen::VectorXd::Zero(n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < m; ++j) {
      const auto state = static_cast<std::size_t>(i * m + j);
      c(i) += map.boundary()[state] / m;
      for (int r = 0; r < n; ++r) {
        k(i, r) += map.response()[state * static_cast<std::size_t>(n) + static_cast<std::size_t>(r)] / m;
      }
    }
  }
  auto step = [&](const std::vector<double>& u_bar) {
    const Eigen::VectorXd next =
        c + k * Eigen::Map<const Eigen::VectorXd>(u_bar.data(), static_cast<Eigen::Index>(n));
    return std::vector<double>(next.data(), next.data() + n);
  };
  double guess = 0.0;
  for (int j = 0; j < m; ++j) {
    guess += std::sin(problem.angles.node(j)) < 0.0 ? problem.inflow_inner[static_cast<std::size_t>(j)]
                                                    : problem.inflow_outer[static_cast<std::size_t>(j)];
  }
  guess /= m;
  FixedPointResult fp = fixed_point(step, std::vector<double>(static_cast<std::size_t>(n), guess),
                                    problem.control);
  TransportSolution solution;
  solution.u = map.apply(fp.iterate);
  solution.u_bar.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    double sum = 0.0;
    for (double v : solution.u.row(i)) sum += v;
    solution.u_bar[static_cast<std::size_t>(i)] = sum / m;
  }
  solution.iterations = fp.iterations;
  solution.residual = fp.residual;
  solution.residual_history = std::move(fp.history);
  return solution;
}

Field2D dense_oracle_transport(const AnnulusProblem& problem) {
  const int n = problem.radial.count();
  const int m = problem.angles.count();
  const int states = n * m;
  if (states > 20000) throw DomainError("dense_oracle_transport: more than 20000 unknowns");
  const DuhamelMap map(problem);
  Eigen::MatrixXd a = Eigen::MatrixXd::Identity(states, states);
  Eigen::VectorXd b(states);
  for (int s = 0; s < states; ++s) {
    b(s) = map.boundary()[static_cast<std::size_t>(s)];
    const double* row = map.response().data() + static_cast<std::size_t>(s) * static_cast<std::size_t>(n);
    for (int r = 0; r < n; ++r) {
      // ū at radius r couples to every angle at that radius.
      for (int j = 0; j < m; ++j) a(s, r * m + j) -= row[r] / m;
    }
  }
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(a);
  if (!(lu.rcond() > 1e-14)) throw NumericalError("dense_oracle_transport: singular system");
  const Eigen::VectorXd u = lu.solve(b);
  Field2D out(problem.radial.nodes(), problem.angles.nodes(), 0.0);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < m; ++j) out(i, j) = u(i * m + j);
  }
  return out;
}

}  // namespace kinetic_layer
