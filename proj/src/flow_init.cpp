#include "flowcast/flow_init.hpp"

#include <random>

#include "flowcast/error.hpp"
#include "flowcast/flow_ops.hpp"

namespace flowcast {

InitMode parse_init_mode(const std::string& s) {
  if (s == "flow") return InitMode::Flow;
  if (s == "zero") return InitMode::Zero;
  if (s == "noise") return InitMode::Noise;
  throw ConfigError("unknown init mode '" + s + "' (expected flow, zero or noise)");
}

std::string to_string(InitMode m) {
  switch (m) {
    case InitMode::Flow: return "flow";
    case InitMode::Zero: return "zero";
    case InitMode::Noise: return "noise";
  }
  return "?";
}

Grid estimate_flow(const Grid& a, const Grid& b, const BackendConfig& cfg) {
  require_same_shape(a.shape(), b.shape(), "estimate_flow");
  Tape t;
  const NodeId na = t.constant(a);
  const NodeId nb = t.constant(b);
  return t.value(estimate_flow_node(t, na, nb, cfg));
}

Grid init_prediction_flow(const Grid& x_prev, const Grid& x_curr, const BackendConfig& cfg,
                          InitMode mode, std::uint64_t seed) {
  require_same_shape(x_prev.shape(), x_curr.shape(), "init_prediction_flow");
  const int h = x_curr.height(), w = x_curr.width();
  switch (mode) {
    case InitMode::Zero:
      return Grid(h, w, 2);
    case InitMode::Noise: {
      std::mt19937_64 rng(seed);
      std::normal_distribution<double> n(0.0, kNoiseInitSigma);
      Grid g(h, w, 2);
      for (double& v : g.values()) v = n(rng);
      return g;
    }
    case InitMode::Flow:
      break;
  }
  // x_curr(p) ~ x_prev(p + back(p))
  Grid back = estimate_flow(x_curr, x_prev, cfg);
  for (double& v : back.values()) v = -v;
  ReversedFlow r = reverse_flow(back);
  return inpaint_flow(r.flow, r.holes);
}

}  // namespace flowcast
