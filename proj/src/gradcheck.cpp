#include "flowcast/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "flowcast/flow_ops.hpp"
#include "flowcast/interp.hpp"
#include "flowcast/ops.hpp"
#include "flowcast/predictor.hpp"
#include "flowcast/scene.hpp"
#include "flowcast/warp.hpp"

namespace flowcast {
namespace {

NodeId to_scalar(Tape& t, NodeId out, std::uint64_t seed) {
  if (t.value(out).is_scalar()) return out;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Grid w(t.shape(out));
  for (double& v : w.values()) v = u(rng);
  return ops::reduce_dot(t, out, w);
}

double evaluate(const GraphFn& f, const std::vector<Grid>& inputs, std::uint64_t seed) {
  Tape t;
  std::vector<NodeId> ids;
  for (const Grid& g : inputs) ids.push_back(t.constant(g));
  return t.value(to_scalar(t, f(t, ids), seed)).item();
}

}  // namespace

double max_gradient_error(const GraphFn& f, const std::vector<Grid>& inputs, double eps,
                          std::uint64_t projection_seed) {
  Tape t;
  std::vector<NodeId> ids;
  for (const Grid& g : inputs) ids.push_back(t.variable(g));
  t.backward(to_scalar(t, f(t, ids), projection_seed));

  double worst = 0.0;
  std::vector<Grid> probe = inputs;
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    const Grid analytic = t.grad(ids[k]);
    for (std::size_t i = 0; i < inputs[k].size(); ++i) {
      const double x = inputs[k][i];
      probe[k][i] = x + eps;
      const double up = evaluate(f, probe, projection_seed);
      probe[k][i] = x - eps;
      const double down = evaluate(f, probe, projection_seed);
      probe[k][i] = x;
      const double numeric = (up - down) / (2.0 * eps);
      worst = std::max(worst, std::abs(analytic[i] - numeric) / std::max(1.0, std::abs(analytic[i])));
    }
  }
  return worst;
}

namespace {

class Inputs {
 public:
  explicit Inputs(std::uint64_t seed) : rng_(seed) {}

  Grid uniform(int h, int w, int c, double lo, double hi) {
    std::uniform_real_distribution<double> u(lo, hi);
    Grid g(h, w, c);
    for (double& v : g.values()) v = u(rng_);
    return g;
  }

  // Magnitudes in [lo, hi] with random sign; keeps |x| and x away from the
  // kink of abs and the pole of division.
  Grid away_from_zero(int h, int w, int c, double lo, double hi) {
    Grid g = uniform(h, w, c, lo, hi);
    std::bernoulli_distribution coin(0.5);
    for (double& v : g.values()) {
      if (coin(rng_)) v = -v;
    }
    return g;
  }

 private:
  std::mt19937_64 rng_;
};

}  // namespace

std::vector<GradCheckResult> run_gradcheck_suite(const GradCheckOptions& opts) {
  std::vector<GradCheckResult> out;
  Inputs in(opts.seed);
  const int n = opts.size;
  std::uint64_t proj = opts.seed;

  auto core = [&](const std::string& name, const GraphFn& f, const std::vector<Grid>& xs) {
    out.push_back({name, max_gradient_error(f, xs, 1e-6, ++proj), kCoreGradTolerance});
  };
  auto composite = [&](const std::string& name, const GraphFn& f, const std::vector<Grid>& xs) {
    out.push_back({name, max_gradient_error(f, xs, 1e-6, ++proj), kBackendGradTolerance});
  };
  using V = const std::vector<NodeId>&;

  const Grid a = in.away_from_zero(n, n, 3, 0.2, 1.0);
  const Grid b = in.away_from_zero(n, n, 3, 0.2, 1.0);
  core("add", [](Tape& t, V x) { return ops::add(t, x[0], x[1]); }, {a, b});
  core("sub", [](Tape& t, V x) { return ops::sub(t, x[0], x[1]); }, {a, b});
  core("mul", [](Tape& t, V x) { return ops::mul(t, x[0], x[1]); }, {a, b});
  core("div", [](Tape& t, V x) { return ops::div(t, x[0], x[1]); }, {a, b});
  core("add_constant", [](Tape& t, V x) { return ops::add(t, x[0], 0.7); }, {a});
  core("scale", [](Tape& t, V x) { return ops::scale(t, x[0], -1.3); }, {a});
  core("mul_scalar_node", [](Tape& t, V x) { return ops::mul(t, x[0], x[1]); },
       {a, Grid::scalar(0.8)});
  core("abs", [](Tape& t, V x) { return ops::abs(t, x[0]); }, {a});
  core("square", [](Tape& t, V x) { return ops::square(t, x[0]); }, {a});
  core("sigmoid", [](Tape& t, V x) { return ops::sigmoid(t, ops::scale(t, x[0], 3.0)); }, {a});
  core("neg", [](Tape& t, V x) { return ops::neg(t, x[0]); }, {a});

  core("reduce_mean_l1", [](Tape& t, V x) { return ops::reduce_mean_l1(t, x[0]); }, {a});
  core("reduce_mean_sq", [](Tape& t, V x) { return ops::reduce_mean_sq(t, x[0]); }, {a});
  core("reduce_sum", [](Tape& t, V x) { return ops::reduce_sum(t, x[0]); }, {a});

  core("select_channels", [](Tape& t, V x) { return ops::select_channels(t, x[0], 1, 2); }, {a});
  core("concat_channels", [](Tape& t, V x) { return ops::concat_channels(t, {x[0], x[1]}); },
       {a, b});
  core("weighted_channel_sum",
       [](Tape& t, V x) { return ops::weighted_channel_sum(t, x[0], {0.299, 0.587, 0.114}); },
       {a});
  core("expand_channels", [](Tape& t, V x) { return ops::expand_channels(t, x[0], 3); },
       {in.uniform(n, n, 1, 0.0, 1.0)});

  const Grid img = in.uniform(n + 1, n - 1, 2, 0.0, 1.0);  // odd sizes exercise edge rules
  core("spatial_gradient", [](Tape& t, V x) { return ops::spatial_gradient(t, x[0]); }, {img});
  core("neighbor_average", [](Tape& t, V x) { return ops::neighbor_average(t, x[0]); }, {img});
  core("downsample2", [](Tape& t, V x) { return ops::downsample2(t, x[0]); }, {img});
  core("resize_bilinear_up",
       [n](Tape& t, V x) { return ops::resize_bilinear(t, x[0], 2 * n + 1, 2 * n - 3, 2.0); },
       {img});
  core("resize_bilinear_down",
       [n](Tape& t, V x) { return ops::resize_bilinear(t, x[0], n / 2, n / 2 + 1, 0.5); }, {img});

  {
    Grid sample = in.uniform(n, n, 3, -1.0, 1.0);
    core("smoothness_step",
         [](Tape& t, V x) { return ops::smoothness_step(t, x[0], x[1], x[2], x[3], 0.5); },
         {in.uniform(n, n, 2, -1.0, 1.0), in.uniform(n, n, 2, -1.0, 1.0), sample,
          in.uniform(n, n, 1, -1.0, 1.0)});
  }

  // Flows reach past the border so the clamped branch is covered too.
  const Grid src = in.uniform(n, n, 3, 0.0, 1.0);
  const Grid flow = in.uniform(n, n, 2, -2.5, 2.5);
  core("backward_warp_image", [](Tape& t, V x) { return backward_warp(t, x[0], x[1]); },
       {src, flow});
  core("backward_warp_flow", [&src](Tape& t, V x) { return backward_warp(t, t.constant(src), x[0]); },
       {flow});
  // Flows up to 1.5 px past the border cover the ramp and both flat sides.
  core("in_frame_weight", [](Tape& t, V x) { return in_frame_weight(t, x[0]); },
       {in.uniform(n, n, 2, -1.5, 1.5)});
  core("fb_discrepancy", [](Tape& t, V x) { return fb_discrepancy(t, x[0], x[1]); },
       {in.uniform(n, n, 2, -2.0, 2.0), in.uniform(n, n, 2, -2.0, 2.0)});

  // Composites run on a smooth moving texture, where the flow estimator is
  // in its intended regime.
  SceneSpec spec;
  spec.kind = SceneKind::Translate;
  spec.height = spec.width = opts.backend_size;
  spec.velocity = {1.3, 0.6};
  spec.frames = 3;
  spec.seed = opts.seed;
  const Scene scene = generate_scene(spec);
  const Grid& x0 = scene.frames[0];
  const Grid& x1 = scene.frames[1];
  const Grid& x2 = scene.frames[2];
  const BackendConfig bc;

  composite("estimate_flow",
            [bc](Tape& t, V x) { return estimate_flow_node(t, x[0], x[1], bc); }, {x0, x2});
  composite("interpolate_f_fwd",
            [bc](Tape& t, V x) { return interpolate(t, x[0], x[1], bc).f_fwd; }, {x0, x2});
  composite("interpolate_f_back",
            [bc](Tape& t, V x) { return interpolate(t, x[0], x[1], bc).f_back; }, {x0, x2});
  composite("interpolate_blend",
            [bc](Tape& t, V x) { return interpolate(t, x[0], x[1], bc).blend; }, {x0, x2});
  composite("blend_midpoint",
            [bc](Tape& t, V x) {
              return blend_midpoint(t, interpolate(t, x[0], x[1], bc), x[0], x[1]).blended;
            },
            {x0, x2});

  Grid start = scene.backward_flows[1];
  {
    const Grid jitter = in.uniform(start.height(), start.width(), 2, -0.3, 0.3);
    for (std::size_t i = 0; i < start.size(); ++i) start[i] += jitter[i];
  }
  const ClassicalBackend backend(bc);
  for (LossVariant v : {LossVariant::ImgL1, LossVariant::ImgMse, LossVariant::InterpTarget}) {
    OptimConfig oc;
    oc.loss_variant = v;
    composite("total_loss_" + to_string(v),
              [&backend, &x0, &x1, oc](Tape& t, V x) {
                return total_loss(t, backend, x0, x1, x[0], oc).total;
              },
              {start});
  }
  return out;
}

}  // namespace flowcast
