#include "kinetic_layer/expansion.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>

#include "kinetic_layer/characteristics.hpp"
#include "kinetic_layer/errors.hpp"

namespace kinetic_layer {

const char* to_string(Variant variant) {
  return variant == Variant::classical ? "classical" : "geometric";
}

Variant parse_variant(const std::string& name) {
  if (name == "classical" || name == "flat") return Variant::classical;
  if (name == "geometric") return Variant::geometric;
  throw DomainError("unknown variant '" + name + "' (expected classical or geometric)");
}

double InteriorProfile::value(double r) const { return c1 + c2 * std::log(r); }

double InteriorProfile::slope(double r) const { return c2 / r; }

InteriorProfile interior_order0(double a_minus, double a_plus, double r_minus, double r_plus) {
  if (!(r_minus > 0.0) || !(r_plus > r_minus)) {
    throw DomainError("interior_order0: need 0 < r_minus < r_plus");
  }
  InteriorProfile out;
  out.c2 = (a_plus - a_minus) / std::log(r_plus / r_minus);
  out.c1 = a_minus - out.c2 * std::log(r_minus);
  return out;
}

namespace {

// Stretched coordinate and layer angle of an annulus state.
std::pair<double, double> layer_coordinates(const BoundaryLayer& layer, double r, double phi) {
  if (layer.circle == Circle::inner) return {(r - layer.r_minus) / layer.epsilon, -phi};
  return {(layer.r_plus - r) / layer.epsilon, phi};
}

BoundaryLayer solve_layer(Variant variant, Circle circle, const AngularFunction& g_layer,
                          double epsilon, double r_minus, double r_plus,
                          const LayerSettings& settings) {
  const double width = r_plus - r_minus;
  ForceProfile profile = ForceProfile::flat();
  if (variant == Variant::geometric) {
    profile = circle == Circle::inner ? ForceProfile::inner(r_minus, epsilon, width)
                                      : ForceProfile::outer(r_plus, epsilon, width);
  }
  // The slab covers the whole cut-off support and then slab_length more.
  const double spacing = settings.slab_length / (settings.n_eta - 1);
  const double length = settings.slab_length + 0.375 * width / epsilon;
  const int count = static_cast<int>(std::ceil(length / spacing)) + 1;
  MilneProblem problem(profile, SlabGrid::uniform(length, count), AngularGrid(settings.n_phi));
  problem.set_inflow(g_layer);
  problem.control = settings.control;
  MilneSolution solution = solve(problem);
  return BoundaryLayer{circle, variant, epsilon, r_minus, r_plus, std::move(problem),
                       std::move(solution)};
}

}  // namespace

double BoundaryLayer::solution_at(double r, double phi) const {
  auto [eta, angle] = layer_coordinates(*this, r, phi);
  eta = std::clamp(eta, 0.0, problem.slab.length());
  return evaluate(problem, solution, eta, angle);
}

double BoundaryLayer::at(double r, double phi) const {
  const double distance = circle == Circle::inner ? r - r_minus : r_plus - r;
  const double cut = cutoff_psi0(std::max(distance, 0.0), r_plus - r_minus);
  if (cut == 0.0) return 0.0;
  return cut * (solution_at(r, phi) - f_inf());
}

BoundaryLayer boundary_layer_order0(Variant variant, Circle circle, const AngularFunction& g,
                                    double epsilon, double r_minus, double r_plus,
                                    const LayerSettings& settings) {
  if (!(epsilon > 0.0)) throw DomainError("boundary_layer_order0: epsilon must be positive");
  AngularFunction g_layer = circle == Circle::inner
                                ? AngularFunction([g](double phi) { return g(-phi); })
                                : g;
  return solve_layer(variant, circle, g_layer, epsilon, r_minus, r_plus, settings);
}

ExpansionBundle build_bundle(Variant variant, double epsilon, double r_minus, double r_plus,
                             const AngularFunction& g_minus, const AngularFunction& g_plus,
                             const LayerSettings& settings) {
  ExpansionBundle bundle;
  bundle.variant = variant;
  bundle.epsilon = epsilon;
  bundle.r_minus = r_minus;
  bundle.r_plus = r_plus;
  bundle.inner = boundary_layer_order0(variant, Circle::inner, g_minus, epsilon, r_minus, r_plus, settings);
  bundle.outer = boundary_layer_order0(variant, Circle::outer, g_plus, epsilon, r_minus, r_plus, settings);
  bundle.interior = interior_order0(bundle.inner->f_inf(), bundle.outer->f_inf(), r_minus, r_plus);
  return bundle;
}

void add_order1(ExpansionBundle& bundle, const LayerSettings& settings) {
  if (!bundle.inner || !bundle.outer) throw DomainError("add_order1: order-zero layers missing");
  const double slope_in = bundle.interior.slope(bundle.r_minus);
  const double slope_out = bundle.interior.slope(bundle.r_plus);
  // w·∇ū₀ = −sinφ ū₀′(r) in annulus angles.
  bundle.inner1 = boundary_layer_order0(
      bundle.variant, Circle::inner, [slope_in](double phi) { return -std::sin(phi) * slope_in; },
      bundle.epsilon, bundle.r_minus, bundle.r_plus, settings);
  bundle.outer1 = boundary_layer_order0(
      bundle.variant, Circle::outer, [slope_out](double phi) { return -std::sin(phi) * slope_out; },
      bundle.epsilon, bundle.r_minus, bundle.r_plus, settings);
  bundle.interior1 =
      interior_order0(bundle.inner1->f_inf(), bundle.outer1->f_inf(), bundle.r_minus, bundle.r_plus);
}

double composite(const ExpansionBundle& bundle, double r, double phi, bool with_order1) {
  if (r < bundle.r_minus - 1e-12 || r > bundle.r_plus + 1e-12) {
    throw DomainError("composite: r outside the annulus");
  }
  double value = bundle.interior.value(r);
  if (bundle.outer) value += bundle.outer->at(r, phi);
  if (bundle.inner) value += bundle.inner->at(r, phi);
  if (with_order1 && bundle.interior1) {
    double first = bundle.interior1->value(r) + std::sin(phi) * bundle.interior.slope(r);
    if (bundle.outer1) first += bundle.outer1->at(r, phi);
    if (bundle.inner1) first += bundle.inner1->at(r, phi);
    value += bundle.epsilon * first;
  }
  return value;
}

double composite_error(const ExpansionBundle& bundle, const TransportSolution& solution,
                       bool with_order1) {
  const auto& radii = solution.u.row_coords();
  const auto& angles = solution.u.col_coords();
  std::vector<double> row_max(radii.size(), 0.0);
  parallel_for(static_cast<int>(radii.size()), [&](int i) {
    double m = 0.0;
    for (std::size_t j = 0; j < angles.size(); ++j) {
      const double approx = composite(bundle, radii[static_cast<std::size_t>(i)], angles[j], with_order1);
      m = std::max(m, std::abs(solution.u(i, static_cast<int>(j)) - approx));
    }
    row_max[static_cast<std::size_t>(i)] = m;
  });
  return *std::max_element(row_max.begin(), row_max.end());
}

void ExperimentConfig::validate() const {
  if (!(r_minus > 0.0) || !(r_plus > r_minus)) throw DomainError("config: need 0 < r_minus < r_plus");
  if (epsilons.empty()) throw DomainError("config: epsilon_list is empty");
  for (std::size_t i = 0; i < epsilons.size(); ++i) {
    if (!(epsilons[i] > 0.0) || epsilons[i] > 1.0) throw DomainError("config: epsilon must lie in (0, 1]");
    if (i > 0 && !(epsilons[i] < epsilons[i - 1])) {
      throw DomainError("config: epsilon_list must be strictly decreasing");
    }
  }
  if (!(n_grazing > 0.0) || n_grazing > 0.5) throw DomainError("config: n_grazing must lie in (0, 1/2]");
  if (n_eta < 3 || n_phi < 4 || n_phi % 2 != 0 || n_r < 3) {
    throw DomainError("config: need n_eta >= 3, even n_phi >= 4, n_r >= 3");
  }
  if (!(slab_length > 0.0) || !(tolerance > 0.0)) {
    throw DomainError("config: slab_length and tolerance must be positive");
  }
}

LayerSettings ExperimentConfig::layer_settings() const {
  LayerSettings s;
  s.slab_length = slab_length;
  s.n_eta = n_eta;
  s.n_phi = n_phi;
  s.control.tolerance = tolerance;
  return s;
}

ExperimentConfig parse_config(std::istream& in) {
  ExperimentConfig config;
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const auto eq = line.find('=');
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      const auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    if (trim(line).empty()) continue;
    if (eq == std::string::npos) {
      throw DomainError("config line " + std::to_string(number) + ": expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    auto number_of = [&](const std::string& text) {
      std::size_t used = 0;
      double v = 0.0;
      try {
        v = std::stod(text, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used != text.size() || text.empty()) {
        throw DomainError("config line " + std::to_string(number) + ": '" + text + "' is not a number");
      }
      return v;
    };
    auto integer_of = [&](const std::string& text) {
      const double v = number_of(text);
      if (v != std::floor(v)) {
        throw DomainError("config line " + std::to_string(number) + ": '" + text + "' is not an integer");
      }
      return static_cast<int>(v);
    };
    if (key == "r_minus") {
      config.r_minus = number_of(value);
    } else if (key == "r_plus") {
      config.r_plus = number_of(value);
    } else if (key == "epsilon_list") {
      config.epsilons.clear();
      std::string item;
      std::istringstream items(value);
      while (std::getline(items, item, ',')) {
        item = trim(item);
        if (!item.empty()) config.epsilons.push_back(number_of(item));
      }
    } else if (key == "n_grazing") {
      config.n_grazing = number_of(value);
    } else if (key == "n_eta") {
      config.n_eta = integer_of(value);
    } else if (key == "n_phi") {
      config.n_phi = integer_of(value);
    } else if (key == "n_r") {
      config.n_r = integer_of(value);
    } else if (key == "slab_length") {
      config.slab_length = number_of(value);
    } else if (key == "tolerance") {
      config.tolerance = number_of(value);
    } else if (key == "variant") {
      config.variant = parse_variant(value);
    } else if (key == "output") {
      config.output = value;
    } else {
      throw DomainError("config line " + std::to_string(number) + ": unknown key '" + key + "'");
    }
  }
  config.validate();
  return config;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DomainError("cannot open config file " + path);
  return parse_config(in);
}

std::vector<ConvergenceRow> convergence_study(const ExperimentConfig& config) {
  config.validate();
  const double shift = config.shifted ? 2.0 : 0.0;
  AngularFunction g_minus = [shift](double phi) { return std::cos(phi) + shift; };
  AngularFunction g_plus = [](double) { return 0.0; };
  const LayerSettings settings = config.layer_settings();

  std::vector<ConvergenceRow> rows(config.epsilons.size());
  parallel_for(static_cast<int>(rows.size()), [&](int k) {
    const double eps = config.epsilons[static_cast<std::size_t>(k)];
    AnnulusProblem problem(eps, RadialGrid(config.r_minus, config.r_plus, config.n_r, config.radial_clustering),
                           AngularGrid(config.n_phi));
    problem.set_inflow_inner(g_minus);
    problem.set_inflow_outer(g_plus);
    problem.control.tolerance = config.tolerance;
    const TransportSolution solution = solve(problem);
    const ExpansionBundle bundle =
        build_bundle(config.variant, eps, config.r_minus, config.r_plus, g_minus, g_plus, settings);
    rows[static_cast<std::size_t>(k)] = {eps, composite_error(bundle, solution), 0.0};
  });

  if (rows.size() >= 2) {
    double mx = 0.0;
    double my = 0.0;
    for (const auto& row : rows) {
      mx += std::log(row.epsilon);
      my += std::log(std::max(row.sup_error, 1e-300));
    }
    mx /= static_cast<double>(rows.size());
    my /= static_cast<double>(rows.size());
    double sxx = 0.0;
    double sxy = 0.0;
    for (const auto& row : rows) {
      const double dx = std::log(row.epsilon) - mx;
      sxx += dx * dx;
      sxy += dx * (std::log(std::max(row.sup_error, 1e-300)) - my);
    }
    for (auto& row : rows) row.fitted_order = sxy / sxx;
  }
  return rows;
}

std::vector<CounterexampleRow> counterexample_experiment(const ExperimentConfig& config) {
  config.validate();
  const double n = config.n_grazing;
  const double radius = config.r_minus;
  if (2.0 * n > radius) throw DomainError("counterexample: need 2n <= r_minus");
  const AngularFunction datum = [](double phi) { return std::cos(phi) + 2.0; };
  const LayerSettings settings = config.layer_settings();

  std::vector<CounterexampleRow> rows(config.epsilons.size());
  parallel_for(static_cast<int>(rows.size()), [&](int k) {
    const double eps = config.epsilons[static_cast<std::size_t>(k)];
    const BoundaryLayer flat = boundary_layer_order0(Variant::classical, Circle::inner, datum, eps,
                                                     config.r_minus, config.r_plus, settings);
    const BoundaryLayer curved = boundary_layer_order0(Variant::geometric, Circle::inner, datum, eps,
                                                       config.r_minus, config.r_plus, settings);
    // Layer coordinates (η, φ) = (nε, ε).
    const double eta = n * eps;
    const double phi = eps;
    CounterexampleRow row;
    row.epsilon = eps;
    row.u_num = evaluate(flat.problem, flat.solution, eta, phi);
    row.U_num = evaluate(curved.problem, curved.solution, eta, phi);
    const double u0 = flat.solution.q.front();
    const double U0 = curved.solution.q.front();
    const double g_layer = std::cos(eps) + 2.0;
    row.u_pred = (1.0 - std::exp(-n)) * u0 + std::exp(-n) * g_layer;
    const double root = std::sqrt(1.0 - 2.0 * n / radius);
    const double weight = std::exp(-radius * (1.0 - root));
    row.U_pred = (1.0 - weight) * U0 + weight * (std::cos(root * eps) + 2.0);
    row.discrepancy = std::abs(row.U_num - row.u_num);
    rows[static_cast<std::size_t>(k)] = row;
  });
  return rows;
}

std::vector<CharacteristicRow> emit_characteristics(const ExperimentConfig& config) {
  config.validate();
  const double eps = config.epsilons.front();
  const double width = config.r_plus - config.r_minus;
  const double reach = width / eps;  // beyond the force support of both walls
  const int curves = 12;
  const int samples = 201;

  struct Family {
    const char* name;
    ForceProfile profile;
    double start_eta;
  };
  const std::vector<Family> families{
      {"flat", ForceProfile::flat(), 0.0},
      {"concave", ForceProfile::inner(config.r_minus, eps, width), 0.25 * width / eps},
      {"convex", ForceProfile::outer(config.r_plus, eps, width), 0.0},
  };
  std::vector<CharacteristicRow> rows;
  for (const auto& family : families) {
    for (int c = 0; c < curves; ++c) {
      const double phi = kPi * (c + 1) / (curves + 1);
      const auto curve = trace_curve(family.profile, {family.start_eta, phi}, reach, samples);
      for (const auto& point : curve) {
        rows.push_back({family.name, c, point.eta, point.phi, family.profile.energy(point.eta, point.phi)});
      }
    }
  }
  return rows;
}

void write_csv(std::ostream& out, const std::vector<ConvergenceRow>& rows) {
  out << "epsilon,sup_error,fitted_order\n" << std::setprecision(12);
  for (const auto& r : rows) out << r.epsilon << ',' << r.sup_error << ',' << r.fitted_order << '\n';
}

void write_csv(std::ostream& out, const std::vector<CounterexampleRow>& rows) {
  out << "epsilon,u_num,U_num,u_pred,U_pred,discrepancy\n" << std::setprecision(12);
  for (const auto& r : rows) {
    out << r.epsilon << ',' << r.u_num << ',' << r.U_num << ',' << r.u_pred << ',' << r.U_pred << ','
        << r.discrepancy << '\n';
  }
}

void write_csv(std::ostream& out, const std::vector<CharacteristicRow>& rows) {
  out << "family,curve,eta,phi,energy\n" << std::setprecision(15);
  for (const auto& r : rows) {
    out << r.family << ',' << r.curve << ',' << r.eta << ',' << r.phi << ',' << r.energy << '\n';
  }
}

}  // namespace kinetic_layer
