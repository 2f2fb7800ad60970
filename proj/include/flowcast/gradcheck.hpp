#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "flowcast/tape.hpp"

namespace flowcast {

// Builds a graph from the given input nodes and returns its output node.
using GraphFn = std::function<NodeId(Tape&, const std::vector<NodeId>&)>;

/// Compares reverse-mode gradients with central finite differences.
///
/// Non-scalar outputs are reduced with a fixed random projection first, so
/// every output element contributes. The error per input element is
/// |analytic - numeric| / max(1, |analytic|); the maximum is returned.
double max_gradient_error(const GraphFn& f, const std::vector<Grid>& inputs, double eps = 1e-6,
                          std::uint64_t projection_seed = 0);

struct GradCheckResult {
  std::string name;
  double max_rel_error = 0.0;
  double tolerance = 0.0;
  bool passed() const { return max_rel_error < tolerance; }
};

struct GradCheckOptions {
  std::uint64_t seed = 2024;
  int size = 8;           // core ops use size x size inputs
  int backend_size = 16;  // composite checks run on a textured scene of this size
};

inline constexpr double kCoreGradTolerance = 1e-4;
inline constexpr double kBackendGradTolerance = 1e-3;

/// Every differentiable operation in the library, one result each.
std::vector<GradCheckResult> run_gradcheck_suite(const GradCheckOptions& opts = {});

}  // namespace flowcast
