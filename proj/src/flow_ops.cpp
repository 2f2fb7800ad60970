#include "flowcast/flow_ops.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <vector>

#include "flowcast/error.hpp"
#include "flowcast/ops.hpp"
#include "flowcast/warp.hpp"

namespace flowcast {

ReversedFlow reverse_flow(const Grid& forward_flow) {
  if (forward_flow.channels() != 2) {
    throw ShapeError("reverse_flow: expected 2-channel flow, got " +
                     to_string(forward_flow.shape()));
  }
  Grid negated(forward_flow.shape());
  for (std::size_t i = 0; i < negated.size(); ++i) negated[i] = -forward_flow[i];
  SplatResult s = forward_splat(negated, forward_flow);

  const int h = forward_flow.height(), w = forward_flow.width();
  ReversedFlow r{Grid(h, w, 2), Grid(h, w, 1)};
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double wt = s.weights.at(y, x);
      if (wt < kSplatHoleWeight) {
        r.holes.at(y, x) = 1.0;
        continue;
      }
      r.flow.at(y, x, 0) = s.values.at(y, x, 0) / wt;
      r.flow.at(y, x, 1) = s.values.at(y, x, 1) / wt;
    }
  }
  return r;
}

NodeId fb_discrepancy(Tape& t, NodeId f_back, NodeId f_fwd) {
  require_same_shape(t.shape(f_back), t.shape(f_fwd), "fb_discrepancy");
  if (t.shape(f_back).channels != 2) {
    throw ShapeError("fb_discrepancy: flows must have 2 channels, got " +
                     to_string(t.shape(f_back)));
  }
  // p - (p + f_back(p) + f_fwd(p + f_back(p)))
  const NodeId fwd_at_target = backward_warp(t, f_fwd, f_back);
  return ops::neg(t, ops::add(t, f_back, fwd_at_target));
}

Grid occlusion_mask(const Grid& delta, double alpha) {
  if (delta.channels() != 2) {
    throw ShapeError("occlusion_mask: expected 2-channel discrepancy, got " +
                     to_string(delta.shape()));
  }
  Grid mask(delta.height(), delta.width(), 1);
  for (std::size_t p = 0; p < mask.size(); ++p) {
    mask[p] = (std::abs(delta[2 * p]) + std::abs(delta[2 * p + 1]) > alpha) ? 1.0 : 0.0;
  }
  return mask;
}

namespace {

constexpr std::array<std::array<int, 2>, 8> kRays{
    {{1, 0}, {-1, 0}, {0, 1}, {0, -1}, {1, 1}, {1, -1}, {-1, 1}, {-1, -1}}};

}  // namespace

Grid inpaint_flow(const Grid& flow, const Grid& mask) {
  require_same_plane(flow.shape(), mask.shape(), "inpaint_flow");
  if (mask.channels() != 1) {
    throw ShapeError("inpaint_flow: mask must have 1 channel, got " + to_string(mask.shape()));
  }
  const int h = flow.height(), w = flow.width(), c = flow.channels();
  auto valid = [&](int y, int x) { return mask.at(y, x) < 0.5; };

  bool any_valid = false, any_masked = false;
  for (std::size_t p = 0; p < mask.size(); ++p) {
    if (mask[p] < 0.5) {
      any_valid = true;
    } else {
      any_masked = true;
    }
  }
  if (!any_masked) return flow;
  if (!any_valid) throw ShapeError("inpaint_flow: every pixel is masked");

  Grid out = flow;
  std::vector<double> acc(c);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (valid(y, x)) continue;
      std::fill(acc.begin(), acc.end(), 0.0);
      double wsum = 0.0;
      for (const auto& d : kRays) {
        int yy = y + d[1], xx = x + d[0], steps = 1;
        while (yy >= 0 && yy < h && xx >= 0 && xx < w && !valid(yy, xx)) {
          yy += d[1];
          xx += d[0];
          ++steps;
        }
        if (yy < 0 || yy >= h || xx < 0 || xx >= w) continue;
        const double dist = steps * std::sqrt(static_cast<double>(d[0] * d[0] + d[1] * d[1]));
        const double wt = 1.0 / dist;
        wsum += wt;
        for (int k = 0; k < c; ++k) acc[k] += wt * flow.at(yy, xx, k);
      }
      if (wsum > 0.0) {
        for (int k = 0; k < c; ++k) out.at(y, x, k) = acc[k] / wsum;
        continue;
      }
      // No ray hit: nearest valid pixel.
      double best = std::numeric_limits<double>::infinity();
      int by = 0, bx = 0;
      for (int yy = 0; yy < h; ++yy) {
        for (int xx = 0; xx < w; ++xx) {
          if (!valid(yy, xx)) continue;
          const double d2 = static_cast<double>((yy - y) * (yy - y) + (xx - x) * (xx - x));
          if (d2 < best) {
            best = d2;
            by = yy;
            bx = xx;
          }
        }
      }
      for (int k = 0; k < c; ++k) out.at(y, x, k) = flow.at(by, bx, k);
    }
  }
  return out;
}

}  // namespace flowcast
