#include "kinetic_layer/iteration.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <deque>
#include <exception>
#include <mutex>
#include <string>
#include <thread>

#include <Eigen/Dense>

#include "kinetic_layer/errors.hpp"

namespace kinetic_layer {

namespace {

double sup_distance(const std::vector<double>& a, const std::vector<double>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

// Type-II Anderson mixing over the last `depth` residual differences.
class AndersonMixer {
 public:
  explicit AndersonMixer(int depth) : depth_(static_cast<std::size_t>(std::max(depth, 1))) {}

  std::vector<double> next(const std::vector<double>& x, const std::vector<double>& gx) {
    const std::size_t n = x.size();
    Eigen::VectorXd g = Eigen::Map<const Eigen::VectorXd>(gx.data(), static_cast<Eigen::Index>(n));
    Eigen::VectorXd f = g - Eigen::Map<const Eigen::VectorXd>(x.data(), static_cast<Eigen::Index>(n));
    if (have_previous_) {
      df_.push_back(f - f_prev_);
      dg_.push_back(g - g_prev_);
      if (df_.size() > depth_) {
        df_.pop_front();
        dg_.pop_front();
      }
    }
    f_prev_ = f;
    g_prev_ = g;
    have_previous_ = true;
    if (df_.empty()) return gx;

    const auto m = static_cast<Eigen::Index>(df_.size());
    Eigen::MatrixXd dF(static_cast<Eigen::Index>(n), m);
    Eigen::MatrixXd dG(static_cast<Eigen::Index>(n), m);
    for (Eigen::Index k = 0; k < m; ++k) {
      dF.col(k) = df_[static_cast<std::size_t>(k)];
      dG.col(k) = dg_[static_cast<std::size_t>(k)];
    }
    const Eigen::VectorXd gamma = dF.completeOrthogonalDecomposition().solve(f);
    if (!gamma.allFinite()) {
      df_.clear();
      dg_.clear();
      return gx;
    }
    const Eigen::VectorXd out = g - dG * gamma;
    return {out.data(), out.data() + out.size()};
  }

 private:
  std::size_t depth_;
  std::deque<Eigen::VectorXd> df_;
  std::deque<Eigen::VectorXd> dg_;
  Eigen::VectorXd f_prev_;
  Eigen::VectorXd g_prev_;
  bool have_previous_ = false;
};

}  // namespace

FixedPointResult fixed_point(const VectorMap& map, std::vector<double> start,
                             const IterationControl& control) {
  if (!(control.tolerance > 0.0) || control.max_iterations < 1) {
    throw DomainError("fixed_point: tolerance must be positive and the cap at least 1");
  }
  FixedPointResult result;
  AndersonMixer mixer(control.anderson_depth);
  std::vector<double> x = std::move(start);
  for (int it = 1; it <= control.max_iterations; ++it) {
    std::vector<double> gx = map(x);
    const double change = sup_distance(gx, x);
    if (!std::isfinite(change)) throw NumericalError("fixed_point: iterate is not finite");
    result.history.push_back(change);
    if (change < control.tolerance) {
      result.iterations = it;
      result.residual = change;
      result.iterate = std::move(x);
      result.value = std::move(gx);
      return result;
    }
    x = control.acceleration == Acceleration::anderson ? mixer.next(x, gx) : std::move(gx);
  }
  throw IterationError("fixed_point: no convergence within " +
                           std::to_string(control.max_iterations) + " iterations",
                       control.max_iterations, result.history.back());
}

unsigned worker_count() {
  unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("KINETIC_LAYER_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && v > 0) return static_cast<unsigned>(v);
  }
  return hw;
}

void parallel_for(int count, const std::function<void(int)>& body) {
  if (count <= 0) return;
  const unsigned workers = std::min<unsigned>(worker_count(), static_cast<unsigned>(count));
  if (workers <= 1) {
    for (int i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (int i = next++; i < count; i = next++) {
        try {
          body(i);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace kinetic_layer
