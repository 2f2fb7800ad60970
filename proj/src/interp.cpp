#include "flowcast/interp.hpp"

#include <algorithm>
#include <map>
#include <mutex>

#include "flowcast/error.hpp"
#include "flowcast/ops.hpp"
#include "flowcast/warp.hpp"

namespace flowcast {

void BackendConfig::validate() const {
  if (pyramid_levels < 1) throw ConfigError("pyramid_levels must be >= 1");
  if (hs_iterations < 1) throw ConfigError("hs_iterations must be >= 1");
  if (!(hs_lambda > 0.0)) throw ConfigError("hs_lambda must be > 0");
}

int effective_levels(int height, int width, int requested) {
  constexpr int kMinCoarseSide = 8;
  int levels = 1;
  int h = height, w = width;
  while (levels < requested) {
    const int nh = (h + 1) / 2, nw = (w + 1) / 2;
    if (std::min(nh, nw) < kMinCoarseSide) break;
    h = nh;
    w = nw;
    ++levels;
  }
  return levels;
}

namespace {

constexpr double kLumaScale = 100.0;

NodeId to_luma(Tape& t, NodeId img) {
  const int c = t.shape(img).channels;
  if (c == 3) return ops::weighted_channel_sum(t, img, {0.299 * kLumaScale, 0.587 * kLumaScale,
                                                        0.114 * kLumaScale});
  if (c == 1) return ops::scale(t, img, kLumaScale);
  throw ShapeError("flow estimation needs 1 or 3 channels, got " + to_string(t.shape(img)));
}

NodeId channel_mean(Tape& t, NodeId a) {
  const int c = t.shape(a).channels;
  if (c == 1) return a;
  return ops::weighted_channel_sum(t, a, std::vector<double>(c, 1.0 / c));
}

// Samples that land outside the frame only repeat the edge and carry no
// information about the motion. Fading the sampled gradient channels out
// there (see in_frame_weight) turns the data term off, so those pixels follow
// the smoothed neighbour flow. The luma channel is left alone: scaling it
// would create a large fake temporal difference instead.
NodeId sample_target(Tape& t, NodeId target, NodeId flow) {
  const NodeId sampled = backward_warp(t, target, flow);
  const NodeId weight = ops::expand_channels(t, in_frame_weight(t, flow), 2);
  const NodeId grad = ops::mul(t, ops::select_channels(t, sampled, 1, 2), weight);
  return ops::concat_channels(t, {ops::select_channels(t, sampled, 0, 1), grad});
}

}  // namespace

NodeId estimate_flow_node(Tape& t, NodeId a, NodeId b, const BackendConfig& cfg) {
  cfg.validate();
  require_same_shape(t.shape(a), t.shape(b), "estimate_flow");
  const Shape full = t.shape(a);
  const int levels = effective_levels(full.height, full.width, cfg.pyramid_levels);

  std::vector<NodeId> pa{to_luma(t, a)};
  std::vector<NodeId> pb{to_luma(t, b)};
  for (int l = 1; l < levels; ++l) {
    pa.push_back(ops::downsample2(t, pa.back()));
    pb.push_back(ops::downsample2(t, pb.back()));
  }

  NodeId flow{};
  for (int l = levels - 1; l >= 0; --l) {
    const Shape s = t.shape(pa[l]);
    if (l == levels - 1) {
      flow = t.constant(Grid(s.height, s.width, 2));
    } else {
      flow = ops::resize_bilinear(t, flow, s.height, s.width, 2.0);
    }
    // The target (luma plus its gradient) is re-warped only every few
    // iterations. In between, the updates are affine in the flow, which keeps
    // their derivative contractive: re-warping on every iteration compounds
    // the sampling nonlinearity, and the loss gradient then spikes by
    // orders of magnitude on some inputs.
    const NodeId target = ops::concat_channels(t, {pb[l], ops::spatial_gradient(t, pb[l])});
    const int per_warp = std::max(1, cfg.hs_iterations / kWarpsPerLevel);
    NodeId anchor = flow;
    NodeId sampled = sample_target(t, target, anchor);
    for (int i = 0; i < cfg.hs_iterations; ++i) {
      if (i > 0 && i % per_warp == 0) {
        anchor = flow;
        sampled = sample_target(t, target, anchor);
      }
      const NodeId avg = ops::neighbor_average(t, flow);
      flow = ops::smoothness_step(t, anchor, avg, sampled, pa[l], cfg.hs_lambda);
    }
  }
  return flow;
}

ClassicalBackend::ClassicalBackend(BackendConfig cfg) : cfg_(cfg) { cfg_.validate(); }

InterpOutput ClassicalBackend::interpolate(Tape& t, NodeId x_prev, NodeId x_next) const {
  require_same_shape(t.shape(x_prev), t.shape(x_next), "interpolate");

  NodeId span;  // x_prev(p) ~ x_next(p + span(p))
  if (cfg_.differentiable_flow) {
    span = estimate_flow_node(t, x_prev, x_next, cfg_);
  } else {
    Tape scratch;
    const NodeId a = scratch.constant(t.value(x_prev));
    const NodeId b = scratch.constant(t.value(x_next));
    span = t.constant(scratch.value(estimate_flow_node(scratch, a, b, cfg_)));
  }

  InterpOutput out{};
  out.f_fwd = ops::scale(t, span, 0.5);
  out.f_back = ops::scale(t, span, -0.5);

  // One-sided photometric errors of the span flow, each measured on its own
  // frame's grid and carried to the midpoint along the matching half flow.
  const NodeId err_prev =
      channel_mean(t, ops::abs(t, ops::sub(t, x_prev, backward_warp(t, x_next, span))));
  const NodeId err_next = channel_mean(
      t, ops::abs(t, ops::sub(t, x_next, backward_warp(t, x_prev, ops::neg(t, span)))));
  const NodeId e_minus = backward_warp(t, err_prev, out.f_back);
  const NodeId e_plus = backward_warp(t, err_next, out.f_fwd);
  out.blend = ops::sigmoid(t, ops::scale(t, ops::sub(t, e_plus, e_minus), kBlendSharpness));
  return out;
}

namespace {

std::mutex& registry_mutex() {
  static std::mutex m;
  return m;
}

std::map<std::string, BackendFactory>& registry() {
  static std::map<std::string, BackendFactory> r{
      {"classical",
       [](const BackendConfig& c) { return std::make_unique<ClassicalBackend>(c); }}};
  return r;
}

}  // namespace

void register_backend(const std::string& name, BackendFactory factory) {
  std::lock_guard lock(registry_mutex());
  registry()[name] = std::move(factory);
}

std::unique_ptr<InterpolationBackend> make_backend(const std::string& name,
                                                   const BackendConfig& cfg) {
  BackendFactory f;
  {
    std::lock_guard lock(registry_mutex());
    auto it = registry().find(name);
    if (it == registry().end()) throw ConfigError("unknown interpolation backend '" + name + "'");
    f = it->second;
  }
  return f(cfg);
}

std::vector<std::string> backend_names() {
  std::lock_guard lock(registry_mutex());
  std::vector<std::string> names;
  for (const auto& [k, v] : registry()) names.push_back(k);
  return names;
}

InterpOutput interpolate(Tape& t, NodeId x_prev, NodeId x_next, const BackendConfig& cfg) {
  return ClassicalBackend(cfg).interpolate(t, x_prev, x_next);
}

Midpoint blend_midpoint(Tape& t, const InterpOutput& out, NodeId x_prev, NodeId x_next) {
  Midpoint m{};
  m.from_prev = backward_warp(t, x_prev, out.f_back);
  m.from_next = backward_warp(t, x_next, out.f_fwd);
  const int c = t.shape(x_prev).channels;
  const NodeId w = c == 1 ? out.blend : ops::expand_channels(t, out.blend, c);
  const NodeId one_minus_w = ops::add(t, ops::neg(t, w), 1.0);
  m.blended = ops::add(t, ops::mul(t, w, m.from_prev), ops::mul(t, one_minus_w, m.from_next));
  return m;
}

}  // namespace flowcast
