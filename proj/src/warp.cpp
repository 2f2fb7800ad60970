#include "flowcast/warp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "flowcast/error.hpp"

namespace flowcast {
namespace {

// One bilinear sample location after edge clamping.
struct Sample {
  int x0, x1, y0, y1;
  double fx, fy;
  bool clamped_x, clamped_y;
};

Sample locate(double x, double y, int w, int h) {
  Sample s{};
  if (std::isnan(x) || std::isnan(y)) {
    // Read a valid pixel with NaN weights so the NaN reaches the output
    // instead of turning into an out-of-range index.
    s.fx = s.fy = std::numeric_limits<double>::quiet_NaN();
    s.clamped_x = s.clamped_y = true;
    return s;
  }
  const double xmax = w - 1, ymax = h - 1;
  s.clamped_x = x < 0.0 || x > xmax;
  s.clamped_y = y < 0.0 || y > ymax;
  x = std::clamp(x, 0.0, xmax);
  y = std::clamp(y, 0.0, ymax);
  s.x0 = static_cast<int>(std::floor(x));
  s.y0 = static_cast<int>(std::floor(y));
  s.x1 = std::min(s.x0 + 1, w - 1);
  s.y1 = std::min(s.y0 + 1, h - 1);
  s.fx = x - s.x0;
  s.fy = y - s.y0;
  return s;
}

void check_warp_shapes(const Grid& src, const Grid& flow, const char* what) {
  if (flow.channels() != 2) {
    throw ShapeError(std::string(what) + ": flow must have 2 channels, got " +
                     to_string(flow.shape()));
  }
  require_same_plane(src.shape(), flow.shape(), what);
}

Grid warp_values(const Grid& src, const Grid& flow) {
  const int h = src.height(), w = src.width(), c = src.channels();
  Grid out(src.shape());
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const Sample s = locate(x + flow.at(y, x, 0), y + flow.at(y, x, 1), w, h);
      const double w00 = (1 - s.fx) * (1 - s.fy), w01 = s.fx * (1 - s.fy);
      const double w10 = (1 - s.fx) * s.fy, w11 = s.fx * s.fy;
      for (int k = 0; k < c; ++k) {
        out.at(y, x, k) = w00 * src.at(s.y0, s.x0, k) + w01 * src.at(s.y0, s.x1, k) +
                          w10 * src.at(s.y1, s.x0, k) + w11 * src.at(s.y1, s.x1, k);
      }
    }
  }
  return out;
}

}  // namespace

Grid backward_warp(const Grid& src, const Grid& flow) {
  check_warp_shapes(src, flow, "backward_warp");
  return warp_values(src, flow);
}

NodeId backward_warp(Tape& t, NodeId src, NodeId flow) {
  const Grid& vs = t.value(src);
  const Grid& vf = t.value(flow);
  check_warp_shapes(vs, vf, "backward_warp");
  Grid out = warp_values(vs, vf);
  return t.record(std::move(out), {src, flow}, [src, flow](BackwardContext& ctx) {
    const Grid& g = ctx.out_grad();
    const Grid& vs = ctx.value(src);
    const Grid& vf = ctx.value(flow);
    const int h = vs.height(), w = vs.width(), c = vs.channels();
    Grid* gs = ctx.needs_grad(src) ? &ctx.grad(src) : nullptr;
    Grid* gf = ctx.needs_grad(flow) ? &ctx.grad(flow) : nullptr;
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        const Sample s = locate(x + vf.at(y, x, 0), y + vf.at(y, x, 1), w, h);
        double dfx = 0.0, dfy = 0.0;
        for (int k = 0; k < c; ++k) {
          const double go = g.at(y, x, k);
          if (go == 0.0) continue;
          const double v00 = vs.at(s.y0, s.x0, k), v01 = vs.at(s.y0, s.x1, k);
          const double v10 = vs.at(s.y1, s.x0, k), v11 = vs.at(s.y1, s.x1, k);
          if (gs) {
            gs->at(s.y0, s.x0, k) += go * (1 - s.fx) * (1 - s.fy);
            gs->at(s.y0, s.x1, k) += go * s.fx * (1 - s.fy);
            gs->at(s.y1, s.x0, k) += go * (1 - s.fx) * s.fy;
            gs->at(s.y1, s.x1, k) += go * s.fx * s.fy;
          }
          // Slopes of the bilinear surface at the sample point.
          dfx += go * ((v01 - v00) * (1 - s.fy) + (v11 - v10) * s.fy);
          dfy += go * ((v10 - v00) * (1 - s.fx) + (v11 - v01) * s.fx);
        }
        if (gf) {
          if (!s.clamped_x) gf->at(y, x, 0) += dfx;
          if (!s.clamped_y) gf->at(y, x, 1) += dfy;
        }
      }
    }
  });
}

namespace {

// Smoothstep of how far inside the frame a coordinate is, measured in
// pixels past the edge: 1 inside, 0 from one pixel out. dw is d weight / d s.
void edge_fade(double s, int size, double& w, double& dw) {
  const double past = std::max({0.0, -s, s - (size - 1)});
  if (past >= 1.0) {
    w = dw = 0.0;
    return;
  }
  const double u = 1.0 - past;
  w = u * u * (3.0 - 2.0 * u);
  dw = past == 0.0 ? 0.0 : 6.0 * u * (1.0 - u) * (s < 0.0 ? 1.0 : -1.0);
}

}  // namespace

NodeId in_frame_weight(Tape& t, NodeId flow) {
  const Grid& f = t.value(flow);
  if (f.channels() != 2) {
    throw ShapeError("in_frame_weight: flow must have 2 channels, got " + to_string(f.shape()));
  }
  const int h = f.height(), w = f.width();
  Grid out(h, w, 1);
  Grid dflow(h, w, 2);  // partials of the weight w.r.t. each flow channel
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double wx, dx, wy, dy;
      edge_fade(x + f.at(y, x, 0), w, wx, dx);
      edge_fade(y + f.at(y, x, 1), h, wy, dy);
      out.at(y, x) = wx * wy;
      dflow.at(y, x, 0) = dx * wy;
      dflow.at(y, x, 1) = wx * dy;
    }
  }
  return t.record(std::move(out), {flow}, [flow, dflow = std::move(dflow)](BackwardContext& ctx) {
    const Grid& g = ctx.out_grad();
    Grid& gf = ctx.grad(flow);
    for (std::size_t i = 0; i < g.size(); ++i) {
      gf[2 * i] += g[i] * dflow[2 * i];
      gf[2 * i + 1] += g[i] * dflow[2 * i + 1];
    }
  });
}

SplatResult forward_splat(const Grid& values, const Grid& flow) {
  check_warp_shapes(values, flow, "forward_splat");
  const int h = values.height(), w = values.width(), c = values.channels();
  SplatResult r{Grid(values.shape()), Grid(h, w, 1)};
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double tx = x + flow.at(y, x, 0), ty = y + flow.at(y, x, 1);
      if (!(tx > -1.0 && tx < w && ty > -1.0 && ty < h)) continue;
      const double fx0 = std::floor(tx), fy0 = std::floor(ty);
      const double ax = tx - fx0, ay = ty - fy0;
      const int x0 = static_cast<int>(fx0), y0 = static_cast<int>(fy0);
      const int xs[2] = {x0, x0 + 1};
      const int ys[2] = {y0, y0 + 1};
      const double wx[2] = {1 - ax, ax};
      const double wy[2] = {1 - ay, ay};
      for (int j = 0; j < 2; ++j) {
        if (ys[j] < 0 || ys[j] >= h) continue;
        for (int i = 0; i < 2; ++i) {
          if (xs[i] < 0 || xs[i] >= w) continue;
          const double wt = wx[i] * wy[j];
          if (wt == 0.0) continue;
          r.weights.at(ys[j], xs[i]) += wt;
          for (int k = 0; k < c; ++k) r.values.at(ys[j], xs[i], k) += wt * values.at(y, x, k);
        }
      }
    }
  }
  return r;
}

}  // namespace flowcast
