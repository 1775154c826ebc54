#pragma once

#include <functional>
#include <vector>

namespace kinetic_layer {

enum class Acceleration { none, anderson };

struct IterationControl {
  double tolerance = 1e-10;
  int max_iterations = 5000;
  Acceleration acceleration = Acceleration::anderson;
  int anderson_depth = 5;
};

struct FixedPointResult {
  std::vector<double> value;  // map output at the accepted iterate
  std::vector<double> iterate;
  int iterations = 0;
  double residual = 0.0;
  std::vector<double> history;  // sup|g(x) − x| per iteration
};

using VectorMap = std::function<std::vector<double>(const std::vector<double>&)>;

/// Iterates x ← g(x) (optionally Anderson-mixed) until sup|g(x) − x| < tolerance.
/// Throws IterationError when the cap is reached.
FixedPointResult fixed_point(const VectorMap& map, std::vector<double> start,
                             const IterationControl& control);

/// Number of worker threads from KINETIC_LAYER_THREADS (0 or unset = hardware concurrency).
unsigned worker_count();

/// Runs body(i) for i in [0, count) on up to worker_count() threads.
void parallel_for(int count, const std::function<void(int)>& body);

}  // namespace kinetic_layer
