#include "flowcast/predictor.hpp"

#include <algorithm>
#include <cmath>

#include "flowcast/error.hpp"
#include "flowcast/flow_ops.hpp"
#include "flowcast/ops.hpp"
#include "flowcast/warp.hpp"

namespace flowcast {

LossVariant parse_loss_variant(const std::string& s) {
  if (s == "img_l1") return LossVariant::ImgL1;
  if (s == "img_mse") return LossVariant::ImgMse;
  if (s == "interp_target") return LossVariant::InterpTarget;
  throw ConfigError("unknown loss variant '" + s + "'");
}

std::string to_string(LossVariant v) {
  switch (v) {
    case LossVariant::ImgL1: return "img_l1";
    case LossVariant::ImgMse: return "img_mse";
    case LossVariant::InterpTarget: return "interp_target";
  }
  return "?";
}

InpaintCadence parse_inpaint_cadence(const std::string& s) {
  if (s == "per_iteration") return InpaintCadence::PerIteration;
  if (s == "final_only") return InpaintCadence::FinalOnly;
  if (s == "off") return InpaintCadence::Off;
  throw ConfigError("unknown inpaint cadence '" + s + "'");
}

std::string to_string(InpaintCadence c) {
  switch (c) {
    case InpaintCadence::PerIteration: return "per_iteration";
    case InpaintCadence::FinalOnly: return "final_only";
    case InpaintCadence::Off: return "off";
  }
  return "?";
}

void OptimConfig::validate() const {
  if (!(w_img >= 0.0) || !(w_cons >= 0.0)) throw ConfigError("loss weights must be >= 0");
  if (!(lr > 0.0)) throw ConfigError("lr must be > 0");
  if (iterations < 1) throw ConfigError("iterations must be >= 1");
  if (!(alpha > 0.0)) throw ConfigError("alpha must be > 0");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
    throw ConfigError("Adam betas must lie in [0,1)");
  }
  if (!(eps > 0.0)) throw ConfigError("eps must be > 0");
}

void PredictorConfig::validate() const {
  optim.validate();
  backend.validate();
}

LossNodes total_loss(Tape& t, const InterpolationBackend& backend, const Grid& x_prev,
                     const Grid& x_curr, NodeId flow, const OptimConfig& cfg) {
  require_same_shape(x_prev.shape(), x_curr.shape(), "total_loss");
  if (t.shape(flow) != Shape{x_curr.height(), x_curr.width(), 2}) {
    throw ShapeError("total_loss: flow " + to_string(t.shape(flow)) + " does not match frame " +
                     to_string(x_curr.shape()));
  }
  const NodeId prev = t.constant(x_prev);
  const NodeId curr = t.constant(x_curr);
  const NodeId candidate = backward_warp(t, curr, flow);
  const InterpOutput g = backend.interpolate(t, prev, candidate);

  NodeId img{};
  switch (cfg.loss_variant) {
    case LossVariant::ImgL1:
      img = ops::reduce_mean_l1(t, ops::sub(t, backward_warp(t, candidate, g.f_fwd), curr));
      break;
    case LossVariant::ImgMse:
      img = ops::reduce_mean_sq(t, ops::sub(t, backward_warp(t, candidate, g.f_fwd), curr));
      break;
    case LossVariant::InterpTarget: {
      const Midpoint mid = blend_midpoint(t, g, prev, candidate);
      img = ops::reduce_mean_l1(t, ops::sub(t, mid.blended, curr));
      break;
    }
  }
  const NodeId delta = fb_discrepancy(t, flow, g.f_fwd);
  const NodeId cons = ops::reduce_mean_l1(t, delta);
  const NodeId total =
      ops::add(t, ops::scale(t, img, cfg.w_img), ops::scale(t, cons, cfg.w_cons));
  return {total, img, cons, delta};
}

void adam_step(Grid& flow, const Grid& grad, AdamState& state, const OptimConfig& cfg) {
  require_same_shape(flow.shape(), grad.shape(), "adam_step");
  if (!grad.all_finite()) throw DivergenceError("adam_step: non-finite gradient");
  if (state.m.shape() != flow.shape()) {
    state.m = Grid(flow.shape());
    state.v = Grid(flow.shape());
    state.step = 0;
  }
  ++state.step;
  const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < flow.size(); ++i) {
    const double g = grad[i];
    state.m[i] = cfg.beta1 * state.m[i] + (1.0 - cfg.beta1) * g;
    state.v[i] = cfg.beta2 * state.v[i] + (1.0 - cfg.beta2) * g * g;
    const double mhat = state.m[i] / c1;
    const double vhat = state.v[i] / c2;
    flow[i] -= cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps);
  }
}

namespace {

bool any_set(const Grid& mask) {
  return std::any_of(mask.values().begin(), mask.values().end(), [](double v) { return v > 0.5; });
}

bool all_set(const Grid& mask) {
  return std::all_of(mask.values().begin(), mask.values().end(), [](double v) { return v > 0.5; });
}

// Inpaints where the discrepancy exceeds alpha. A fully masked field is left
// untouched: there is nothing valid to propagate from.
void inpaint_occluded(Grid& flow, const Grid& delta, double alpha) {
  const Grid mask = occlusion_mask(delta, alpha);
  if (any_set(mask) && !all_set(mask)) flow = inpaint_flow(flow, mask);
}

bool plateaued(const std::vector<LossRecord>& r) {
  constexpr std::size_t kWindow = 200;
  constexpr double kRelChange = 1e-5;
  if (r.size() <= kWindow) return false;
  const double now = r.back().total;
  const double before = r[r.size() - 1 - kWindow].total;
  return std::abs(now - before) <= kRelChange * std::max(std::abs(before), 1e-300);
}

}  // namespace

Prediction predict_next(const Grid& x_prev, const Grid& x_curr, const PredictorConfig& cfg) {
  cfg.validate();
  require_same_shape(x_prev.shape(), x_curr.shape(), "predict_next");
  const auto backend = make_backend(cfg.backend_name, cfg.backend);
  const OptimConfig& oc = cfg.optim;

  Prediction out;
  out.flow = init_prediction_flow(x_prev, x_curr, cfg.backend, cfg.init, cfg.seed);
  AdamState adam;
  out.trace.records.reserve(oc.iterations);

  for (int it = 0; it < oc.iterations; ++it) {
    Tape t;
    const NodeId flow = t.variable(out.flow);
    const LossNodes loss = total_loss(t, *backend, x_prev, x_curr, flow, oc);
    const LossRecord rec{t.value(loss.total).item(), t.value(loss.img).item(),
                         t.value(loss.cons).item()};
    if (!std::isfinite(rec.total)) {
      throw PredictionDiverged("loss became non-finite at iteration " + std::to_string(it),
                               out.trace);
    }
    out.trace.records.push_back(rec);
    t.backward(loss.total);
    try {
      adam_step(out.flow, t.grad(flow), adam, oc);
    } catch (const DivergenceError& e) {
      throw PredictionDiverged(std::string(e.what()) + " at iteration " + std::to_string(it),
                               out.trace);
    }
    if (oc.inpaint_cadence == InpaintCadence::PerIteration) {
      inpaint_occluded(out.flow, t.value(loss.discrepancy), oc.alpha);
    }
    if (oc.early_stop && plateaued(out.trace.records)) break;
  }

  auto evaluate = [&](const Grid& flow_value) {
    Tape t;
    const LossNodes loss = total_loss(t, *backend, x_prev, x_curr, t.constant(flow_value), oc);
    return std::pair{LossRecord{t.value(loss.total).item(), t.value(loss.img).item(),
                                t.value(loss.cons).item()},
                     t.value(loss.discrepancy)};
  };
  auto [final_loss, delta] = evaluate(out.flow);
  if (oc.inpaint_cadence == InpaintCadence::FinalOnly) {
    inpaint_occluded(out.flow, delta, oc.alpha);
    final_loss = evaluate(out.flow).first;
  }
  out.final_loss = final_loss;

  out.frame = backward_warp(x_curr, out.flow);
  for (double& v : out.frame.values()) v = std::clamp(v, 0.0, 1.0);
  return out;
}

std::vector<Prediction> predict_sequence(const Grid& x_prev, const Grid& x_curr, int horizon,
                                         const PredictorConfig& cfg) {
  if (horizon < 1) throw ConfigError("horizon must be >= 1");
  std::vector<Prediction> out;
  Grid older = x_prev;
  Grid newer = x_curr;
  for (int k = 0; k < horizon; ++k) {
    out.push_back(predict_next(older, newer, cfg));
    older = std::move(newer);
    newer = out.back().frame;
  }
  return out;
}

}  // namespace flowcast
