#include "kinetic_layer/milne.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <sstream>
#include <string>
#include <tuple>

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "kinetic_layer/errors.hpp"

namespace kinetic_layer {

namespace {

using Gauss = boost::math::quadrature::gauss<double, 10>;

template <class F>
double kronrod(F f, double a, double b) {
  if (!(b > a)) return 0.0;
  return boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, a, b, 12, 1e-13);
}

// Interval from the slab nodes split where the force changes form.
template <class F>
double integrate_smooth(const ForceProfile& profile, F f, double a, double b) {
  if (!(b > a)) return 0.0;
  if (profile.is_flat()) return kronrod(f, a, b);
  double total = 0.0;
  double lo = a;
  for (double cut : {0.5 * profile.width() / profile.epsilon(), profile.support_end()}) {
    if (cut > lo && cut < b) {
      total += kronrod(f, lo, cut);
      lo = cut;
    }
  }
  return total + kronrod(f, lo, b);
}

int upper_begin(int count) { return count / 2; }

// ∫_0^1 t^n e^{−xt} dt for n = 0, 1, 2.
std::array<double, 3> exp_moments(double x) {
  std::array<double, 3> j{};
  if (x < 0.5) {
    for (int n = 0; n < 3; ++n) {
      double term = 1.0;  // (−x)^k / k!
      double sum = 0.0;
      for (int k = 0; k < 30; ++k) {
        sum += term / (n + k + 1);
        term *= -x / (k + 1);
      }
      j[static_cast<std::size_t>(n)] = sum;
    }
    return j;
  }
  const double e = std::exp(-x);
  j[0] = -std::expm1(-x) / x;
  j[1] = (j[0] - e) / x;
  j[2] = (2.0 * j[1] - e) / x;
  return j;
}

// Root in [0, 1] of the cubic Hermite segment through (0, y0) and (1, y1) hitting `target`.
double hermite_crossing(double y0, double y1, double d0, double d1, double target) {
  auto eval = [&](double t) {
    const double t2 = t * t;
    const double t3 = t2 * t;
    return (2 * t3 - 3 * t2 + 1) * y0 + (t3 - 2 * t2 + t) * d0 + (-2 * t3 + 3 * t2) * y1 +
           (t3 - t2) * d1 - target;
  };
  double lo = 0.0;
  double hi = 1.0;
  const bool rising = eval(hi) > eval(lo);
  for (int it = 0; it < 60; ++it) {
    const double mid = 0.5 * (lo + hi);
    if ((eval(mid) < 0.0) == rising) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace

MilneProblem::MilneProblem(ForceProfile profile_in, SlabGrid slab_in, AngularGrid angles_in)
    : profile(std::move(profile_in)),
      slab(std::move(slab_in)),
      angles(std::move(angles_in)),
      inflow(static_cast<std::size_t>(angles.count()), 0.0) {}

void MilneProblem::set_inflow(AngularFunction h) {
  inflow.assign(static_cast<std::size_t>(angles.count()), 0.0);
  for (int j = 0; j < angles.count(); ++j) {
    if (std::sin(angles.node(j)) > 0.0) inflow[static_cast<std::size_t>(j)] = h(angles.node(j));
  }
  inflow_function = std::move(h);
}

void MilneProblem::set_inflow(std::vector<double> samples) {
  if (static_cast<int>(samples.size()) != angles.count()) {
    throw DimensionError("MilneProblem::set_inflow: one sample per angle expected");
  }
  inflow = std::move(samples);
  inflow_function = nullptr;
}

double MilneProblem::inflow_at(double phi) const {
  if (inflow_function) return inflow_function(phi);
  const int m = angles.count();
  const int b = upper_begin(m);
  std::span<const double> nodes(angles.nodes().data() + b, static_cast<std::size_t>(m - b));
  std::span<const double> values(inflow.data() + b, static_cast<std::size_t>(m - b));
  return interpolate_linear(nodes, values, phi);
}

MilneSweeper::MilneSweeper(const MilneProblem& problem)
    : problem_(problem),
      cells_(problem.slab.cells()),
      angles_(problem.angles.count()),
      convex_(problem.profile.kind() == ForceProfile::Kind::outer) {
  if (angles_ < 2 || angles_ % 2 != 0) {
    throw DomainError("MilneSweeper: the angular grid needs an even count");
  }
  if (static_cast<int>(problem.inflow.size()) != angles_) {
    throw DimensionError("MilneSweeper: inflow must have one entry per angle");
  }
  if (problem.penalty < 0.0) throw DomainError("MilneSweeper: penalty must be nonnegative");
  const auto& eta = problem.slab.nodes();
  const auto& profile = problem.profile;

  exp_v_.resize(eta.size());
  for (std::size_t i = 0; i < eta.size(); ++i) exp_v_[i] = std::exp(profile.potential(eta[i]));
  exp_v_jump_.resize(static_cast<std::size_t>(cells_));
  cell_weight_.resize(static_cast<std::size_t>(cells_));
  for (int k = 0; k < cells_; ++k) {
    const auto ku = static_cast<std::size_t>(k);
    exp_v_jump_[ku] = exp_v_[ku + 1] - exp_v_[ku];
    if (profile.is_flat()) {
      cell_weight_[ku] = eta[ku + 1] - eta[ku];
    } else {
      cell_weight_[ku] = Gauss::integrate(
          [&](double x) { return std::exp(profile.potential(x)); }, eta[ku], eta[ku + 1]);
    }
  }

  const double h = problem.angles.weight();
  const double face_scale = 0.5 * h / std::sin(0.5 * h);
  sin_.resize(static_cast<std::size_t>(angles_));
  face_cos_.resize(static_cast<std::size_t>(angles_ + 1));
  for (int j = 0; j < angles_; ++j) sin_[static_cast<std::size_t>(j)] = std::sin(problem.angles.node(j));
  for (int j = 0; j <= angles_; ++j) {
    face_cos_[static_cast<std::size_t>(j)] = std::cos(problem.angles.face(j)) * face_scale;
  }
  face_cos_[static_cast<std::size_t>(angles_)] = face_cos_[0];

  // Within one half of the circle a cell depends on the neighbour upstream in φ.
  const double direction = convex_ ? -1.0 : 1.0;
  auto order_half = [&](int lo, int hi) {
    const int n = hi - lo;
    std::vector<int> indegree(static_cast<std::size_t>(n), 0);
    std::vector<std::vector<int>> downstream(static_cast<std::size_t>(n));
    for (int j = lo; j < hi; ++j) {
      if (j - 1 >= lo && direction * face_cos_[static_cast<std::size_t>(j)] > 0.0) {
        downstream[static_cast<std::size_t>(j - 1 - lo)].push_back(j);
        ++indegree[static_cast<std::size_t>(j - lo)];
      }
      if (j + 1 < hi && direction * face_cos_[static_cast<std::size_t>(j + 1)] < 0.0) {
        downstream[static_cast<std::size_t>(j + 1 - lo)].push_back(j);
        ++indegree[static_cast<std::size_t>(j - lo)];
      }
    }
    std::vector<int> order;
    for (int j = lo; j < hi; ++j) {
      if (indegree[static_cast<std::size_t>(j - lo)] == 0) order.push_back(j);
    }
    for (std::size_t head = 0; head < order.size(); ++head) {
      for (int next : downstream[static_cast<std::size_t>(order[head] - lo)]) {
        if (--indegree[static_cast<std::size_t>(next - lo)] == 0) order.push_back(next);
      }
    }
    if (static_cast<int>(order.size()) != n) throw NumericalError("MilneSweeper: cyclic angular flow");
    return order;
  };
  order_lower_ = order_half(0, upper_begin(angles_));
  order_upper_ = order_half(upper_begin(angles_), angles_);

  std::vector<double> eta_cells;
  for (int k = 0; k < cells_; ++k) {
    eta_cells.push_back(0.5 * (eta[static_cast<std::size_t>(k)] + eta[static_cast<std::size_t>(k + 1)]));
  }
  source_ = Field2D(eta_cells, problem.angles.nodes(), 0.0);
  if (problem.source) {
    for (int k = 0; k < cells_; ++k) {
      const auto ku = static_cast<std::size_t>(k);
      for (int j = 0; j < angles_; ++j) {
        const double phi = problem.angles.node(j);
        const double weighted = Gauss::integrate(
            [&](double x) { return std::exp(profile.potential(x)) * problem.source(x, phi); },
            eta[ku], eta[ku + 1]);
        source_(k, j) = weighted / cell_weight_[ku];
      }
    }
  }

  if (!convex_) {
    for (int j = upper_begin(angles_); j < angles_; ++j) upper_angles_.push_back(j);
    const auto n = static_cast<Eigen::Index>(upper_angles_.size());
    Eigen::MatrixXd system = Eigen::MatrixXd::Identity(n, n);
    const Field2D zero_source = empty_cells();
    const std::vector<double> zero_inflow(static_cast<std::size_t>(angles_), 0.0);
    std::vector<double> unit(static_cast<std::size_t>(angles_), 0.0);
    Field2D response = empty_cells();
    for (Eigen::Index c = 0; c < n; ++c) {
      std::fill(unit.begin(), unit.end(), 0.0);
      unit[static_cast<std::size_t>(upper_angles_[static_cast<std::size_t>(c)])] = 1.0;
      run(zero_source, zero_inflow, &unit, response);
      const auto top = top_row_upper(response);
      for (Eigen::Index r = 0; r < n; ++r) system(r, c) -= top[static_cast<std::size_t>(r)];
    }
    closure_.compute(system);
  }
}

Field2D MilneSweeper::empty_cells() const {
  return Field2D(source_.row_coords(), source_.col_coords(), 0.0);
}

std::vector<double> MilneSweeper::top_row_upper(const Field2D& cell_values) const {
  std::vector<double> top;
  top.reserve(upper_angles_.size());
  for (int j : upper_angles_) top.push_back(cell_values(cells_ - 1, j));
  return top;
}

void MilneSweeper::update_cell(int k, int j, const Field2D& total_source,
                               const std::vector<double>& inflow,
                               const std::vector<double>* reflected, Field2D& out) const {
  const auto ku = static_cast<std::size_t>(k);
  const auto ju = static_cast<std::size_t>(j);
  const double w = cell_weight_[ku];
  const double s = sin_[ju];
  double diag = w * (1.0 + problem_.penalty);
  double rhs = w * total_source(k, j);
  if (s > 0.0) {
    diag += s * exp_v_[ku + 1];
    rhs += s * exp_v_[ku] * (k == 0 ? inflow[ju] : out(k - 1, j));
  } else {
    diag -= s * exp_v_[ku];
    double above;
    if (k + 1 < cells_) {
      above = out(k + 1, j);
    } else {
      const int mirror = angles_ - 1 - j;
      above = reflected ? (*reflected)[static_cast<std::size_t>(mirror)] : out(cells_ - 1, mirror);
    }
    rhs -= s * exp_v_[ku + 1] * above;
  }
  const double scale = exp_v_jump_[ku] / problem_.angles.weight();
  const double right = scale * face_cos_[ju + 1];
  const double left = scale * face_cos_[ju];
  if (right > 0.0) {
    diag += right;
  } else if (right < 0.0) {
    rhs -= right * out(k, (j + 1) % angles_);
  }
  if (left < 0.0) {
    diag -= left;
  } else if (left > 0.0) {
    rhs += left * out(k, (j + angles_ - 1) % angles_);
  }
  out(k, j) = rhs / diag;
}

void MilneSweeper::run(const Field2D& total_source, const std::vector<double>& inflow,
                       const std::vector<double>* reflected, Field2D& out) const {
  if (convex_) {
    for (int k = 0; k < cells_; ++k) {
      for (int j : order_upper_) update_cell(k, j, total_source, inflow, nullptr, out);
    }
    for (int k = cells_ - 1; k >= 0; --k) {
      for (int j : order_lower_) update_cell(k, j, total_source, inflow, nullptr, out);
    }
    return;
  }
  for (int k = cells_ - 1; k >= 0; --k) {
    for (int j : order_lower_) update_cell(k, j, total_source, inflow, reflected, out);
  }
  for (int k = 0; k < cells_; ++k) {
    for (int j : order_upper_) update_cell(k, j, total_source, inflow, reflected, out);
  }
}

Field2D MilneSweeper::sweep_cells(const Field2D& total_source) const {
  if (total_source.rows() != cells_ || total_source.cols() != angles_) {
    throw DimensionError("sweep_cells: total source must be cells x angles");
  }
  Field2D out = empty_cells();
  if (convex_) {
    run(total_source, problem_.inflow, nullptr, out);
    return out;
  }
  std::vector<double> reflected(static_cast<std::size_t>(angles_), 0.0);
  run(total_source, problem_.inflow, &reflected, out);
  const auto top = top_row_upper(out);
  const Eigen::VectorXd b =
      closure_.solve(Eigen::Map<const Eigen::VectorXd>(top.data(), static_cast<Eigen::Index>(top.size())));
  for (std::size_t c = 0; c < upper_angles_.size(); ++c) {
    reflected[static_cast<std::size_t>(upper_angles_[c])] = b(static_cast<Eigen::Index>(c));
  }
  run(total_source, problem_.inflow, &reflected, out);
  return out;
}

Field2D MilneSweeper::node_field(const Field2D& cell_values) const {
  const auto& eta = problem_.slab.nodes();
  Field2D f(eta, problem_.angles.nodes(), 0.0);
  for (int i = 0; i <= cells_; ++i) {
    for (int j = 0; j < angles_; ++j) {
      if (sin_[static_cast<std::size_t>(j)] > 0.0) {
        f(i, j) = i == 0 ? problem_.inflow[static_cast<std::size_t>(j)] : cell_values(i - 1, j);
      } else {
        f(i, j) = i < cells_ ? cell_values(i, j) : cell_values(cells_ - 1, angles_ - 1 - j);
      }
    }
  }
  return f;
}

std::vector<double> MilneSweeper::cell_means(const Field2D& cell_values) const {
  std::vector<double> means(static_cast<std::size_t>(cells_));
  for (int k = 0; k < cells_; ++k) {
    double sum = 0.0;
    for (double v : cell_values.row(k)) sum += v;
    means[static_cast<std::size_t>(k)] = sum / angles_;
  }
  return means;
}

Field2D sweep(const MilneProblem& problem, const Field2D& total_source) {
  const auto& eta = problem.slab.nodes();
  if (total_source.rows() != problem.slab.count() || total_source.cols() != problem.angles.count()) {
    throw DimensionError("sweep: total source must be given on slab nodes x angles");
  }
  MilneSweeper sweeper(problem);
  Field2D averaged = sweeper.empty_cells();
  const auto& profile = problem.profile;
  for (int k = 0; k < sweeper.cells(); ++k) {
    const double a = eta[static_cast<std::size_t>(k)];
    const double b = eta[static_cast<std::size_t>(k + 1)];
    for (int j = 0; j < sweeper.angles(); ++j) {
      const double lo = total_source(k, j);
      const double hi = total_source(k + 1, j);
      const double weighted = Gauss::integrate(
          [&](double x) { return std::exp(profile.potential(x)) * (lo + (hi - lo) * (x - a) / (b - a)); },
          a, b);
      averaged(k, j) = weighted / sweeper.cell_weight()[static_cast<std::size_t>(k)];
    }
  }
  return sweeper.node_field(sweeper.sweep_cells(averaged));
}

std::pair<std::vector<double>, Field2D> decompose(const Field2D& f) {
  std::vector<double> q(static_cast<std::size_t>(f.rows()));
  Field2D r = f;
  for (int i = 0; i < f.rows(); ++i) {
    double sum = 0.0;
    for (double v : f.row(i)) sum += v;
    q[static_cast<std::size_t>(i)] = sum / f.cols();
    for (int j = 0; j < f.cols(); ++j) r(i, j) -= q[static_cast<std::size_t>(i)];
  }
  return {std::move(q), std::move(r)};
}

double extract_limit(const SlabGrid& slab, const std::vector<double>& q) {
  if (static_cast<int>(q.size()) != slab.count()) {
    throw DimensionError("extract_limit: one mean per slab node expected");
  }
  const double length = slab.length();
  const double start = 0.8 * length;
  const auto& eta = slab.nodes();
  double area = 0.0;
  for (std::size_t i = 0; i + 1 < eta.size(); ++i) {
    const double a = std::max(eta[i], start);
    const double b = eta[i + 1];
    if (b <= a) continue;
    const double qa = interpolate_linear(eta, q, a);
    area += 0.5 * (qa + q[i + 1]) * (b - a);
  }
  return area / (length - start);
}

DecayFit fit_decay(const Field2D& f, double f_inf) {
  const auto& eta = f.row_coords();
  const double length = eta.back();
  std::vector<double> xs;
  std::vector<double> ys;
  DecayFit fit;
  for (int i = 0; i < f.rows(); ++i) {
    const double x = eta[static_cast<std::size_t>(i)];
    if (x < 0.25 * length || x > 0.75 * length) continue;
    double dev = 0.0;
    for (double v : f.row(i)) dev = std::max(dev, std::abs(v - f_inf));
    if (dev < 1e-14) {
      fit.underflow = true;
      return fit;
    }
    xs.push_back(x);
    ys.push_back(std::log(dev));
  }
  if (xs.size() < 2) throw DomainError("fit_decay: fewer than two nodes in the fit window");
  const double n = static_cast<double>(xs.size());
  double mx = 0.0;
  double my = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0;
  double sxy = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
    syy += (ys[i] - my) * (ys[i] - my);
  }
  const double slope = sxy / sxx;
  fit.rate = -slope;
  fit.r_squared = syy > 0.0 ? (sxy * sxy) / (sxx * syy) : 1.0;
  return fit;
}

MilneSolution solve(const MilneProblem& problem) {
  MilneSweeper sweeper(problem);
  const Field2D& source = sweeper.source_cells();
  Field2D total = sweeper.empty_cells();
  auto assemble = [&](const std::vector<double>& mean) {
    for (int k = 0; k < sweeper.cells(); ++k) {
      for (int j = 0; j < sweeper.angles(); ++j) {
        total(k, j) = mean[static_cast<std::size_t>(k)] + source(k, j);
      }
    }
    return sweeper.sweep_cells(total);
  };
  auto map = [&](const std::vector<double>& mean) { return sweeper.cell_means(assemble(mean)); };

  double guess = 0.0;
  int upper = 0;
  for (int j = 0; j < problem.angles.count(); ++j) {
    if (std::sin(problem.angles.node(j)) > 0.0) {
      guess += problem.inflow[static_cast<std::size_t>(j)];
      ++upper;
    }
  }
  guess /= upper;
  std::vector<double> start(static_cast<std::size_t>(sweeper.cells()), guess);
  FixedPointResult fp = fixed_point(map, std::move(start), problem.control);

  MilneSolution solution;
  solution.cells = assemble(fp.iterate);
  solution.cell_mean = sweeper.cell_means(solution.cells);
  solution.f = sweeper.node_field(solution.cells);
  auto [q, r] = decompose(solution.f);
  solution.q = std::move(q);
  solution.r = std::move(r);
  solution.f_inf = extract_limit(problem.slab, solution.q);
  solution.decay = fit_decay(solution.f, solution.f_inf);
  solution.iterations = fp.iterations;
  solution.residual = fp.residual;
  solution.residual_history = std::move(fp.history);
  return solution;
}

Field2D dense_oracle_milne(const MilneProblem& problem) {
  const int n_cells = problem.slab.cells();
  const int m = problem.angles.count();
  const long unknowns = static_cast<long>(n_cells) * m;
  if (unknowns > 20000) throw DomainError("dense_oracle_milne: more than 20000 unknowns");
  if (m % 2 != 0) throw DomainError("dense_oracle_milne: the angular grid needs an even count");
  const auto& eta = problem.slab.nodes();
  const auto& profile = problem.profile;
  const double h = problem.angles.weight();
  const double lambda = problem.penalty;

  std::vector<double> ev(eta.size());
  for (std::size_t i = 0; i < eta.size(); ++i) ev[i] = std::exp(profile.potential(eta[i]));
  auto exp_v = [&](double x) { return std::exp(profile.potential(x)); };

  auto index = [m](int k, int j) { return static_cast<Eigen::Index>(k) * m + j; };
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(unknowns, unknowns);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(unknowns);

  for (int k = 0; k < n_cells; ++k) {
    const double lo = eta[static_cast<std::size_t>(k)];
    const double hi = eta[static_cast<std::size_t>(k + 1)];
    const double w = profile.is_flat() ? hi - lo : Gauss::integrate(exp_v, lo, hi);
    const double jump = ev[static_cast<std::size_t>(k + 1)] - ev[static_cast<std::size_t>(k)];
    for (int j = 0; j < m; ++j) {
      const Eigen::Index row = index(k, j);
      const double phi = problem.angles.node(j);
      const double s = std::sin(phi);
      // Reaction and mean coupling.
      a(row, row) += w * (1.0 + lambda);
      for (int jj = 0; jj < m; ++jj) a(row, index(k, jj)) -= w / m;
      if (problem.source) {
        rhs(row) += Gauss::integrate([&](double x) { return exp_v(x) * problem.source(x, phi); }, lo, hi);
      }
      // Streaming in η: sinφ (e^{V_{k+1}} f(η_{k+1}) − e^{V_k} f(η_k)) with upwind node values.
      if (s > 0.0) {
        a(row, row) += s * ev[static_cast<std::size_t>(k + 1)];
        if (k == 0) {
          rhs(row) += s * ev[0] * problem.inflow[static_cast<std::size_t>(j)];
        } else {
          a(row, index(k - 1, j)) -= s * ev[static_cast<std::size_t>(k)];
        }
      } else {
        a(row, row) -= s * ev[static_cast<std::size_t>(k)];
        const Eigen::Index above = k + 1 < n_cells ? index(k + 1, j) : index(n_cells - 1, m - 1 - j);
        a(row, above) += s * ev[static_cast<std::size_t>(k + 1)];
      }
      // Angular flux (e^{V_{k+1}} − e^{V_k}) cos(face) f(face) / h, upwind by the flux sign.
      const double scale = jump / h * (0.5 * h / std::sin(0.5 * h));
      const double right = scale * std::cos(-kPi + (j + 1) * h);
      const double left = scale * std::cos(-kPi + j * h);
      a(row, right > 0.0 ? row : index(k, (j + 1) % m)) += right;
      a(row, left > 0.0 ? index(k, (j + m - 1) % m) : row) -= left;
    }
  }

  Eigen::PartialPivLU<Eigen::MatrixXd> lu(a);
  if (!(lu.rcond() > 1e-14)) throw NumericalError("dense_oracle_milne: singular system");
  const Eigen::VectorXd x = lu.solve(rhs);

  Field2D f(eta, problem.angles.nodes(), 0.0);
  for (int i = 0; i <= n_cells; ++i) {
    for (int j = 0; j < m; ++j) {
      if (std::sin(problem.angles.node(j)) > 0.0) {
        f(i, j) = i == 0 ? problem.inflow[static_cast<std::size_t>(j)] : x(index(i - 1, j));
      } else {
        f(i, j) = i < n_cells ? x(index(i, j)) : x(index(n_cells - 1, m - 1 - j));
      }
    }
  }
  return f;
}

SecondOrderLayer build_f2(const ForceProfile& profile, const SlabGrid& slab,
                          const AngularGrid& angles, const std::function<double(double)>& sq,
                          double decay_rate) {
  if (!(decay_rate > 0.0)) {
    throw DomainError("build_f2: the source must decay exponentially (K > 0)");
  }
  const auto& eta = slab.nodes();
  const double length = slab.length();
  auto weighted = [&](double y) { return std::exp(profile.potential(y)) * 2.0 * sq(y); };
  const double tail = 2.0 * std::exp(profile.potential(length)) * sq(length) / decay_rate;

  SecondOrderLayer out;
  out.amplitude.assign(eta.size(), 0.0);
  double integral = tail;
  for (int i = slab.count() - 1; i >= 0; --i) {
    const auto iu = static_cast<std::size_t>(i);
    if (i + 1 < slab.count()) integral += integrate_smooth(profile, weighted, eta[iu], eta[iu + 1]);
    out.amplitude[iu] = -std::exp(-profile.potential(eta[iu])) * integral;
  }
  out.tail_bound = std::abs(tail) * std::exp(-profile.potential(length));
  out.field = Field2D(eta, angles.nodes(), 0.0);
  for (int i = 0; i < slab.count(); ++i) {
    for (int j = 0; j < angles.count(); ++j) {
      out.field(i, j) = out.amplitude[static_cast<std::size_t>(i)] * std::sin(angles.node(j));
    }
  }
  return out;
}

SecondOrderLayer build_f2(const ForceProfile& profile, const SlabGrid& slab,
                          const AngularGrid& angles, const std::vector<double>& sq,
                          double decay_rate) {
  if (static_cast<int>(sq.size()) != slab.count()) {
    throw DimensionError("build_f2: one source value per slab node expected");
  }
  const auto& eta = slab.nodes();
  return build_f2(profile, slab, angles,
                  [&](double y) { return interpolate_linear(eta, sq, y); }, decay_rate);
}

OrthogonalityReport check_orthogonality(const MilneProblem& problem,
                                        const MilneSolution& solution) {
  const auto& eta = problem.slab.nodes();
  const auto& profile = problem.profile;
  const int m = problem.angles.count();
  OrthogonalityReport report;
  report.flux.assign(eta.size(), 0.0);
  report.expected.assign(eta.size(), 0.0);
  for (int i = 0; i < solution.r.rows(); ++i) {
    double sum = 0.0;
    for (int j = 0; j < m; ++j) sum += std::sin(problem.angles.node(j)) * solution.r(i, j);
    report.flux[static_cast<std::size_t>(i)] = sum / m;
  }

  auto mean_source = [&](double y) {
    double sum = 0.0;
    for (int j = 0; j < m; ++j) sum += problem.source(y, problem.angles.node(j));
    return sum / m;
  };
  auto weighted = [&](double y) { return std::exp(profile.potential(y)) * mean_source(y); };
  // The penalty term λ f̄ enters the same balance; use the solved cell means for it.
  MilneSweeper sweeper(problem);
  double integral = 0.0;
  for (int i = problem.slab.count() - 1; i >= 0; --i) {
    const auto iu = static_cast<std::size_t>(i);
    if (i + 1 < problem.slab.count()) {
      if (problem.source) integral += integrate_smooth(profile, weighted, eta[iu], eta[iu + 1]);
      integral -= problem.penalty * sweeper.cell_weight()[iu] * solution.cell_mean[iu];
    }
    report.expected[iu] = -std::exp(-profile.potential(eta[iu])) * integral;
  }
  for (std::size_t i = 0; i < eta.size(); ++i) {
    const double dev = std::abs(report.flux[i] - report.expected[i]);
    if (dev > report.max_residual) {
      report.max_residual = dev;
      report.worst_eta = eta[i];
    }
  }
  return report;
}

MaxPrincipleReport check_max_principle(const MilneProblem& problem,
                                       const MilneSolution& solution) {
  if (problem.source) throw DomainError("check_max_principle: requires S = 0");
  MaxPrincipleReport report;
  report.lower_bound = std::numeric_limits<double>::infinity();
  report.upper_bound = -std::numeric_limits<double>::infinity();
  for (int j = 0; j < problem.angles.count(); ++j) {
    if (std::sin(problem.angles.node(j)) <= 0.0) continue;
    const double v = problem.inflow[static_cast<std::size_t>(j)];
    report.lower_bound = std::min(report.lower_bound, v);
    report.upper_bound = std::max(report.upper_bound, v);
  }
  const double tol = 10.0 * problem.control.tolerance;
  report.min_value = std::numeric_limits<double>::infinity();
  report.max_value = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < solution.f.rows(); ++i) {
    for (int j = 0; j < solution.f.cols(); ++j) {
      const double v = solution.f(i, j);
      report.min_value = std::min(report.min_value, v);
      report.max_value = std::max(report.max_value, v);
      if (v < report.lower_bound - tol || v > report.upper_bound + tol) {
        std::ostringstream msg;
        msg << "maximum principle violated at eta=" << solution.f.row_coords()[static_cast<std::size_t>(i)]
            << " phi=" << solution.f.col_coords()[static_cast<std::size_t>(j)] << ": f=" << v
            << " outside [" << report.lower_bound << ", " << report.upper_bound << "]";
        throw PropertyFailure(msg.str());
      }
    }
  }
  return report;
}

double evaluate(const MilneProblem& problem, const MilneSolution& solution, double eta,
                double phi) {
  const double length = problem.slab.length();
  if (!(eta >= 0.0) || eta > length) throw DomainError("evaluate: eta outside the slab");
  const auto& profile = problem.profile;
  if (eta == 0.0 && std::sin(phi) > 0.0) return problem.inflow_at(phi);

  const double rate = 1.0 + problem.penalty;
  const auto& nodes = problem.slab.nodes();
  auto total_source = [&](double x, double p) {
    double v = interpolate_linear(nodes, solution.q, x);
    if (problem.source) v += problem.source(x, p);
    return v;
  };
  // Backward characteristic: dη/dσ = −sinφ, dφ/dσ = F(η) cosφ.
  auto slope = [&](double x, double p) {
    return std::pair{-std::sin(p), profile.force(std::clamp(x, 0.0, length)) * std::cos(p)};
  };
  auto rk4 = [&](double x, double p, double h) {
    const auto [a1, b1] = slope(x, p);
    const auto [a2, b2] = slope(x + 0.5 * h * a1, p + 0.5 * h * b1);
    const auto [a3, b3] = slope(x + 0.5 * h * a2, p + 0.5 * h * b2);
    const auto [a4, b4] = slope(x + h * a3, p + h * b3);
    return std::pair{x + h * (a1 + 2 * a2 + 2 * a3 + a4) / 6.0,
                     p + h * (b1 + 2 * b2 + 2 * b3 + b4) / 6.0};
  };

  const double energy = profile.energy(eta, phi);
  const double horizon = 40.0 / rate;
  const double base_step = 0.02;
  double x = eta;
  double p = phi;
  double sigma = 0.0;
  double value = 0.0;
  for (int guard = 0; guard < 1000000; ++guard) {
    if (sigma >= horizon) {
      value += std::exp(-rate * sigma) * total_source(x, p) / rate;
      return value;
    }
    double h = std::min(base_step, horizon - sigma);
    auto [x1, p1] = rk4(x, p, h);
    const bool at_wall = x1 < 0.0;
    const bool at_top = x1 > length;
    if (at_wall || at_top) {
      const double target = at_wall ? 0.0 : length;
      const double frac = hermite_crossing(x, x1, -std::sin(p) * h, -std::sin(p1) * h, target);
      h *= frac;
      std::tie(x1, p1) = rk4(x, p, h);
      x1 = target;
    }
    // Quadratic-in-σ source with exact exponential weights.
    const auto [dx0, dp0] = slope(x, p);
    const auto [dx1, dp1] = slope(x1, p1);
    const double xm = std::clamp(0.5 * (x + x1) + h * (dx0 - dx1) / 8.0, 0.0, length);
    const double pm = 0.5 * (p + p1) + h * (dp0 - dp1) / 8.0;
    const auto moments = exp_moments(rate * h);
    const double w0 = h * (2 * moments[2] - 3 * moments[1] + moments[0]);
    const double w2 = h * (2 * moments[2] - moments[1]);
    const double w1 = h * moments[0] - w0 - w2;
    value += std::exp(-rate * sigma) *
             (w0 * total_source(x, p) + w1 * total_source(xm, pm) + w2 * total_source(x1, p1));
    sigma += h;
    x = x1;
    p = p1;
    if (at_wall) {
      const double arrival = std::acos(std::clamp(energy, -1.0, 1.0));
      return value + std::exp(-rate * sigma) * problem.inflow_at(arrival);
    }
    if (at_top) {
      p = -p;
    } else if (!profile.is_flat()) {
      const double c = energy * std::exp(-profile.potential(x));
      const double s = std::sin(p);
      if (std::abs(c) < 1.0 - 1e-6 && s != 0.0) p = std::copysign(std::acos(c), s);
    }
  }
  throw NumericalError("evaluate: characteristic trace did not terminate");
}

}  // namespace kinetic_layer
