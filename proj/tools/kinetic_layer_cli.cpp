#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <memory>
#include <string>

#include <CLI11.hpp>

#include "kinetic_layer/annulus.hpp"
#include "kinetic_layer/errors.hpp"
#include "kinetic_layer/expansion.hpp"
#include "kinetic_layer/milne.hpp"

namespace kl = kinetic_layer;

namespace {

struct Inflow {
  double mean = 2.0;
  double amplitude = 1.0;
  kl::AngularFunction function() const {
    return [m = mean, a = amplitude](double phi) { return m + a * std::cos(phi); };
  }
};

// Writes to the configured file, or stdout when none is set.
class Sink {
 public:
  explicit Sink(const std::string& path) {
    if (!path.empty()) {
      file_ = std::make_unique<std::ofstream>(path);
      if (!*file_) throw kl::DomainError("cannot open output file " + path);
    }
  }
  std::ostream& stream() { return file_ ? *file_ : std::cout; }

 private:
  std::unique_ptr<std::ofstream> file_;
};

void write_milne(std::ostream& out, const kl::MilneSolution& solution) {
  out << "eta,phi,f,q,r\n" << std::setprecision(12);
  const kl::Field2D& f = solution.f;
  for (int i = 0; i < f.rows(); ++i) {
    for (int j = 0; j < f.cols(); ++j) {
      out << f.row_coords()[static_cast<std::size_t>(i)] << ',' << f.col_coords()[static_cast<std::size_t>(j)]
          << ',' << f(i, j) << ',' << solution.q[static_cast<std::size_t>(i)] << ',' << solution.r(i, j) << '\n';
    }
  }
}

void write_transport(std::ostream& out, const kl::TransportSolution& solution) {
  out << "r,phi,u,u_bar\n" << std::setprecision(12);
  const kl::Field2D& u = solution.u;
  for (int i = 0; i < u.rows(); ++i) {
    for (int j = 0; j < u.cols(); ++j) {
      out << u.row_coords()[static_cast<std::size_t>(i)] << ',' << u.col_coords()[static_cast<std::size_t>(j)]
          << ',' << u(i, j) << ',' << solution.u_bar[static_cast<std::size_t>(i)] << '\n';
    }
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Steady one-speed transport in an annulus and its Milne boundary layers"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path;
  std::string output;
  std::string variant_name;
  app.add_option("-c,--config", config_path, "key = value experiment file");
  app.add_option("-o,--output", output, "CSV destination (default: stdout, or 'output' from the config)");
  app.add_option("--variant", variant_name, "classical or geometric")
      ->check(CLI::IsMember({"classical", "geometric"}));

  Inflow inflow;
  auto add_inflow = [&inflow](CLI::App* sub) {
    sub->add_option("--mean", inflow.mean, "inflow is mean + amplitude·cosφ")->capture_default_str();
    sub->add_option("--amplitude", inflow.amplitude)->capture_default_str();
  };

  auto* milne = app.add_subcommand("milne", "Solve one Milne problem on the inner wall");
  double epsilon = 0.1;
  bool check = false;
  milne->add_option("-e,--epsilon", epsilon, "used by the geometric variant")->capture_default_str();
  milne->add_flag("--check", check, "verify the maximum principle and orthogonality");
  add_inflow(milne);

  auto* transport = app.add_subcommand("transport", "Solve the annulus problem with inflow on the inner circle");
  transport->add_option("-e,--epsilon", epsilon)->capture_default_str();
  add_inflow(transport);

  auto* expand = app.add_subcommand("expand", "Convergence of the composite expansion over epsilon_list");
  bool shifted = false;
  expand->add_flag("--shifted", shifted, "use g₋ = cosφ + 2 instead of cosφ");

  auto* counterexample = app.add_subcommand("counterexample", "Flat against curved layers near grazing");
  auto* characteristics = app.add_subcommand("characteristics", "Constant-energy curves as CSV");

  CLI11_PARSE(app, argc, argv);

  try {
    kl::ExperimentConfig config = config_path.empty() ? kl::ExperimentConfig{} : kl::load_config(config_path);
    if (!variant_name.empty()) config.variant = kl::parse_variant(variant_name);
    if (!output.empty()) config.output = output;
    config.shifted = shifted;
    config.validate();
    Sink sink(config.output);
    std::ostream& out = sink.stream();

    if (*milne) {
      const kl::LayerSettings settings = config.layer_settings();
      const kl::BoundaryLayer layer =
          kl::boundary_layer_order0(config.variant, kl::Circle::inner, inflow.function(), epsilon,
                                    config.r_minus, config.r_plus, settings);
      write_milne(out, layer.solution);
      std::cerr << "f_inf=" << std::setprecision(12) << layer.f_inf()
                << " decay_rate=" << layer.solution.decay.rate
                << " r_squared=" << layer.solution.decay.r_squared
                << " iterations=" << layer.solution.iterations << '\n';
      if (check) {
        kl::check_max_principle(layer.problem, layer.solution);
        const auto report = kl::check_orthogonality(layer.problem, layer.solution);
        if (report.max_residual > 1e-7) {
          throw kl::PropertyFailure("orthogonality residual " + std::to_string(report.max_residual) +
                                    " at eta=" + std::to_string(report.worst_eta));
        }
      }
    } else if (*transport) {
      kl::AnnulusProblem problem(epsilon,
                                 kl::RadialGrid(config.r_minus, config.r_plus, config.n_r, config.radial_clustering),
                                 kl::AngularGrid(config.n_phi));
      problem.set_inflow_inner(inflow.function());
      problem.set_inflow_outer([](double) { return 0.0; });
      problem.control.tolerance = config.tolerance;
      const kl::TransportSolution solution = kl::solve(problem);
      write_transport(out, solution);
      std::cerr << "iterations=" << solution.iterations << '\n';
    } else if (*expand) {
      kl::write_csv(out, kl::convergence_study(config));
    } else if (*counterexample) {
      kl::write_csv(out, kl::counterexample_experiment(config));
    } else if (*characteristics) {
      kl::write_csv(out, kl::emit_characteristics(config));
    }
  } catch (const kl::PropertyFailure& e) {
    std::cerr << "property failure: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
