#include "flowcast/ops.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "flowcast/error.hpp"

namespace flowcast::ops {
namespace {

int clampi(int v, int lo, int hi) { return std::min(std::max(v, lo), hi); }

double sign(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

double logistic(double v) {
  if (v >= 0.0) return 1.0 / (1.0 + std::exp(-v));
  const double e = std::exp(v);
  return e / (1.0 + e);
}

void require_nonempty(const Grid& g, const char* what) {
  if (g.empty()) throw ShapeError(std::string(what) + ": empty grid");
}

}  // namespace

// A 1x1x1 node `b` broadcast against the full grid `a`.
NodeId broadcast_scalar(Tape& t, Binary op, NodeId a, NodeId b, double bv);

NodeId elementwise(Tape& t, Binary op, NodeId a, NodeId b) {
  const Grid& va = t.value(a);
  const Grid& vb = t.value(b);
  if (vb.is_scalar() && !va.is_scalar()) {
    return broadcast_scalar(t, op, a, b, vb[0]);
  }
  require_same_shape(va.shape(), vb.shape(), "elementwise");
  Grid out(va.shape());
  const std::size_t n = va.size();
  switch (op) {
    case Binary::Add:
      for (std::size_t i = 0; i < n; ++i) out[i] = va[i] + vb[i];
      break;
    case Binary::Sub:
      for (std::size_t i = 0; i < n; ++i) out[i] = va[i] - vb[i];
      break;
    case Binary::Mul:
      for (std::size_t i = 0; i < n; ++i) out[i] = va[i] * vb[i];
      break;
    case Binary::Div:
      for (std::size_t i = 0; i < n; ++i) out[i] = va[i] / vb[i];
      break;
  }
  return t.record(std::move(out), {a, b}, [op, a, b](BackwardContext& ctx) {
    const Grid& g = ctx.out_grad();
    const std::size_t n = g.size();
    const Grid& va = ctx.value(a);
    const Grid& vb = ctx.value(b);
    if (ctx.needs_grad(a)) {
      Grid& ga = ctx.grad(a);
      switch (op) {
        case Binary::Add:
        case Binary::Sub:
          for (std::size_t i = 0; i < n; ++i) ga[i] += g[i];
          break;
        case Binary::Mul:
          for (std::size_t i = 0; i < n; ++i) ga[i] += g[i] * vb[i];
          break;
        case Binary::Div:
          for (std::size_t i = 0; i < n; ++i) ga[i] += g[i] / vb[i];
          break;
      }
    }
    if (ctx.needs_grad(b)) {
      Grid& gb = ctx.grad(b);
      switch (op) {
        case Binary::Add:
          for (std::size_t i = 0; i < n; ++i) gb[i] += g[i];
          break;
        case Binary::Sub:
          for (std::size_t i = 0; i < n; ++i) gb[i] -= g[i];
          break;
        case Binary::Mul:
          for (std::size_t i = 0; i < n; ++i) gb[i] += g[i] * va[i];
          break;
        case Binary::Div:
          for (std::size_t i = 0; i < n; ++i) gb[i] -= g[i] * va[i] / (vb[i] * vb[i]);
          break;
      }
    }
  });
}

NodeId elementwise(Tape& t, Binary op, NodeId a, double b) {
  const Grid& va = t.value(a);
  Grid out(va.shape());
  const std::size_t n = va.size();
  for (std::size_t i = 0; i < n; ++i) {
    switch (op) {
      case Binary::Add: out[i] = va[i] + b; break;
      case Binary::Sub: out[i] = va[i] - b; break;
      case Binary::Mul: out[i] = va[i] * b; break;
      case Binary::Div: out[i] = va[i] / b; break;
    }
  }
  return t.record(std::move(out), {a}, [op, a, b](BackwardContext& ctx) {
    const Grid& g = ctx.out_grad();
    Grid& ga = ctx.grad(a);
    double k = 1.0;
    if (op == Binary::Mul) k = b;
    if (op == Binary::Div) k = 1.0 / b;
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += k * g[i];
  });
}

NodeId broadcast_scalar(Tape& t, Binary op, NodeId a, NodeId b, double bv) {
  const Grid& va = t.value(a);
  Grid out(va.shape());
  const std::size_t n = va.size();
  for (std::size_t i = 0; i < n; ++i) {
    switch (op) {
      case Binary::Add: out[i] = va[i] + bv; break;
      case Binary::Sub: out[i] = va[i] - bv; break;
      case Binary::Mul: out[i] = va[i] * bv; break;
      case Binary::Div: out[i] = va[i] / bv; break;
    }
  }
  return t.record(std::move(out), {a, b}, [op, a, b](BackwardContext& ctx) {
    const Grid& g = ctx.out_grad();
    const Grid& va = ctx.value(a);
    const double bv = ctx.value(b)[0];
    const std::size_t n = g.size();
    if (ctx.needs_grad(a)) {
      Grid& ga = ctx.grad(a);
      double k = 1.0;
      if (op == Binary::Mul) k = bv;
      if (op == Binary::Div) k = 1.0 / bv;
      for (std::size_t i = 0; i < n; ++i) ga[i] += k * g[i];
    }
    if (ctx.needs_grad(b)) {
      double acc = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        switch (op) {
          case Binary::Add: acc += g[i]; break;
          case Binary::Sub: acc -= g[i]; break;
          case Binary::Mul: acc += g[i] * va[i]; break;
          case Binary::Div: acc -= g[i] * va[i] / (bv * bv); break;
        }
      }
      ctx.grad(b)[0] += acc;
    }
  });
}

NodeId elementwise(Tape& t, Unary op, NodeId a) {
  const Grid& va = t.value(a);
  Grid out(va.shape());
  const std::size_t n = va.size();
  for (std::size_t i = 0; i < n; ++i) {
    switch (op) {
      case Unary::Abs: out[i] = std::abs(va[i]); break;
      case Unary::Square: out[i] = va[i] * va[i]; break;
      case Unary::Sigmoid: out[i] = logistic(va[i]); break;
      case Unary::Neg: out[i] = -va[i]; break;
    }
  }
  return t.record(std::move(out), {a}, [op, a](BackwardContext& ctx) {
    const Grid& g = ctx.out_grad();
    const Grid& va = ctx.value(a);
    const Grid& vo = ctx.out_value();
    Grid& ga = ctx.grad(a);
    for (std::size_t i = 0; i < g.size(); ++i) {
      switch (op) {
        case Unary::Abs: ga[i] += g[i] * sign(va[i]); break;
        case Unary::Square: ga[i] += g[i] * 2.0 * va[i]; break;
        case Unary::Sigmoid: ga[i] += g[i] * vo[i] * (1.0 - vo[i]); break;
        case Unary::Neg: ga[i] -= g[i]; break;
      }
    }
  });
}

NodeId reduce_mean_l1(Tape& t, NodeId a) {
  const Grid& va = t.value(a);
  require_nonempty(va, "reduce_mean_l1");
  double s = 0.0;
  for (double v : va.values()) s += std::abs(v);
  const double n = static_cast<double>(va.size());
  return t.record(Grid::scalar(s / n), {a}, [a, n](BackwardContext& ctx) {
    const double g = ctx.out_grad()[0] / n;
    const Grid& va = ctx.value(a);
    Grid& ga = ctx.grad(a);
    for (std::size_t i = 0; i < va.size(); ++i) ga[i] += g * sign(va[i]);
  });
}

NodeId reduce_mean_sq(Tape& t, NodeId a) {
  const Grid& va = t.value(a);
  require_nonempty(va, "reduce_mean_sq");
  double s = 0.0;
  for (double v : va.values()) s += v * v;
  const double n = static_cast<double>(va.size());
  return t.record(Grid::scalar(s / n), {a}, [a, n](BackwardContext& ctx) {
    const double g = 2.0 * ctx.out_grad()[0] / n;
    const Grid& va = ctx.value(a);
    Grid& ga = ctx.grad(a);
    for (std::size_t i = 0; i < va.size(); ++i) ga[i] += g * va[i];
  });
}

NodeId reduce_sum(Tape& t, NodeId a) {
  const Grid& va = t.value(a);
  require_nonempty(va, "reduce_sum");
  double s = 0.0;
  for (double v : va.values()) s += v;
  return t.record(Grid::scalar(s), {a}, [a](BackwardContext& ctx) {
    const double g = ctx.out_grad()[0];
    for (double& v : ctx.grad(a).values()) v += g;
  });
}

NodeId reduce_dot(Tape& t, NodeId a, const Grid& weights) {
  const Grid& va = t.value(a);
  require_nonempty(va, "reduce_dot");
  require_same_shape(va.shape(), weights.shape(), "reduce_dot");
  double s = 0.0;
  for (std::size_t i = 0; i < va.size(); ++i) s += va[i] * weights[i];
  return t.record(Grid::scalar(s), {a}, [a, weights](BackwardContext& ctx) {
    const double g = ctx.out_grad()[0];
    Grid& ga = ctx.grad(a);
    for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += g * weights[i];
  });
}

NodeId select_channels(Tape& t, NodeId a, int first, int count) {
  const Grid& va = t.value(a);
  const int c = va.channels();
  if (first < 0 || count <= 0 || first + count > c) {
    throw ShapeError("select_channels: range [" + std::to_string(first) + ", " +
                     std::to_string(first + count) + ") outside " + to_string(va.shape()));
  }
  Grid out(va.height(), va.width(), count);
  const std::size_t px = static_cast<std::size_t>(va.height()) * va.width();
  for (std::size_t p = 0; p < px; ++p) {
    for (int k = 0; k < count; ++k) out[p * count + k] = va[p * c + first + k];
  }
  return t.record(std::move(out), {a}, [a, first, count, c](BackwardContext& ctx) {
    const Grid& g = ctx.out_grad();
    Grid& ga = ctx.grad(a);
    const std::size_t px = g.size() / count;
    for (std::size_t p = 0; p < px; ++p) {
      for (int k = 0; k < count; ++k) ga[p * c + first + k] += g[p * count + k];
    }
  });
}

NodeId concat_channels(Tape& t, const std::vector<NodeId>& parts) {
  if (parts.empty()) throw ShapeError("concat_channels: no inputs");
  const Shape base = t.shape(parts.front());
  int total = 0;
  std::vector<int> widths;
  for (NodeId p : parts) {
    require_same_plane(base, t.shape(p), "concat_channels");
    widths.push_back(t.shape(p).channels);
    total += widths.back();
  }
  Grid out(base.height, base.width, total);
  const std::size_t px = static_cast<std::size_t>(base.height) * base.width;
  int offset = 0;
  for (std::size_t k = 0; k < parts.size(); ++k) {
    const Grid& v = t.value(parts[k]);
    const int w = widths[k];
    for (std::size_t p = 0; p < px; ++p) {
      for (int c = 0; c < w; ++c) out[p * total + offset + c] = v[p * w + c];
    }
    offset += w;
  }
  return t.record(std::move(out), parts, [parts, widths, total](BackwardContext& ctx) {
    const Grid& g = ctx.out_grad();
    const std::size_t px = g.size() / total;
    int offset = 0;
    for (std::size_t k = 0; k < parts.size(); ++k) {
      const int w = widths[k];
      if (ctx.needs_grad(parts[k])) {
        Grid& gp = ctx.grad(parts[k]);
        for (std::size_t p = 0; p < px; ++p) {
          for (int c = 0; c < w; ++c) gp[p * w + c] += g[p * total + offset + c];
        }
      }
      offset += w;
    }
  });
}

NodeId weighted_channel_sum(Tape& t, NodeId a, const std::vector<double>& weights) {
  const Grid& va = t.value(a);
  const int c = va.channels();
  if (static_cast<int>(weights.size()) != c) {
    throw ShapeError("weighted_channel_sum: " + std::to_string(weights.size()) +
                     " weights for " + to_string(va.shape()));
  }
  Grid out(va.height(), va.width(), 1);
  const std::size_t px = out.size();
  for (std::size_t p = 0; p < px; ++p) {
    double s = 0.0;
    for (int k = 0; k < c; ++k) s += weights[k] * va[p * c + k];
    out[p] = s;
  }
  return t.record(std::move(out), {a}, [a, weights, c](BackwardContext& ctx) {
    const Grid& g = ctx.out_grad();
    Grid& ga = ctx.grad(a);
    for (std::size_t p = 0; p < g.size(); ++p) {
      for (int k = 0; k < c; ++k) ga[p * c + k] += weights[k] * g[p];
    }
  });
}

NodeId expand_channels(Tape& t, NodeId a, int channels) {
  const Grid& va = t.value(a);
  if (va.channels() != 1 || channels < 1) {
    throw ShapeError("expand_channels: need 1-channel input, got " + to_string(va.shape()));
  }
  Grid out(va.height(), va.width(), channels);
  for (std::size_t p = 0; p < va.size(); ++p) {
    for (int k = 0; k < channels; ++k) out[p * channels + k] = va[p];
  }
  return t.record(std::move(out), {a}, [a, channels](BackwardContext& ctx) {
    const Grid& g = ctx.out_grad();
    Grid& ga = ctx.grad(a);
    for (std::size_t p = 0; p < ga.size(); ++p) {
      double s = 0.0;
      for (int k = 0; k < channels; ++k) s += g[p * channels + k];
      ga[p] += s;
    }
  });
}

NodeId spatial_gradient(Tape& t, NodeId a) {
  const Grid& va = t.value(a);
  const int h = va.height(), w = va.width(), c = va.channels();
  Grid out(h, w, 2 * c);
  for (int y = 0; y < h; ++y) {
    const int ym = clampi(y - 1, 0, h - 1), yp = clampi(y + 1, 0, h - 1);
    for (int x = 0; x < w; ++x) {
      const int xm = clampi(x - 1, 0, w - 1), xp = clampi(x + 1, 0, w - 1);
      for (int k = 0; k < c; ++k) {
        out.at(y, x, 2 * k) = 0.5 * (va.at(y, xp, k) - va.at(y, xm, k));
        out.at(y, x, 2 * k + 1) = 0.5 * (va.at(yp, x, k) - va.at(ym, x, k));
      }
    }
  }
  return t.record(std::move(out), {a}, [a, h, w, c](BackwardContext& ctx) {
    const Grid& g = ctx.out_grad();
    Grid& ga = ctx.grad(a);
    for (int y = 0; y < h; ++y) {
      const int ym = clampi(y - 1, 0, h - 1), yp = clampi(y + 1, 0, h - 1);
      for (int x = 0; x < w; ++x) {
        const int xm = clampi(x - 1, 0, w - 1), xp = clampi(x + 1, 0, w - 1);
        for (int k = 0; k < c; ++k) {
          const double gx = 0.5 * g.at(y, x, 2 * k);
          const double gy = 0.5 * g.at(y, x, 2 * k + 1);
          ga.at(y, xp, k) += gx;
          ga.at(y, xm, k) -= gx;
          ga.at(yp, x, k) += gy;
          ga.at(ym, x, k) -= gy;
        }
      }
    }
  });
}

namespace {

struct Tap {
  int dy, dx;
  double w;
};
constexpr std::array<Tap, 8> kNeighborTaps{{{-1, -1, 1.0 / 12}, {-1, 0, 1.0 / 6}, {-1, 1, 1.0 / 12},
                                            {0, -1, 1.0 / 6},   {0, 1, 1.0 / 6},   {1, -1, 1.0 / 12},
                                            {1, 0, 1.0 / 6},    {1, 1, 1.0 / 12}}};

}  // namespace

namespace {

// dst[(y, x)] += w * src[(sy, sx)] over every stencil tap when `gather`,
// otherwise the transpose dst[(sy, sx)] += w * src[(y, x)]. Rows are walked
// with precomputed clamped column indices; C is fixed for the common flow
// case so the inner loop vectorises.
template <int C>
void neighbor_pass(const double* src, double* dst, int h, int w, int c_runtime, bool gather) {
  const int c = C > 0 ? C : c_runtime;
  std::vector<int> xs(3 * static_cast<std::size_t>(w));
  for (int x = 0; x < w; ++x) {
    for (int d = -1; d <= 1; ++d) xs[3 * x + d + 1] = clampi(x + d, 0, w - 1);
  }
  const std::size_t row = static_cast<std::size_t>(w) * c;
  for (int y = 0; y < h; ++y) {
    for (const Tap& tap : kNeighborTaps) {
      const std::size_t sy = static_cast<std::size_t>(clampi(y + tap.dy, 0, h - 1));
      const int* cols = xs.data() + tap.dx + 1;
      const double wt = tap.w;
      if (gather) {
        const double* s = src + sy * row;
        double* d = dst + static_cast<std::size_t>(y) * row;
        for (int x = 0; x < w; ++x) {
          const double* sp = s + static_cast<std::size_t>(cols[3 * x]) * c;
          for (int k = 0; k < c; ++k) d[x * c + k] += wt * sp[k];
        }
      } else {
        const double* s = src + static_cast<std::size_t>(y) * row;
        double* d = dst + sy * row;
        for (int x = 0; x < w; ++x) {
          double* dp = d + static_cast<std::size_t>(cols[3 * x]) * c;
          for (int k = 0; k < c; ++k) dp[k] += wt * s[x * c + k];
        }
      }
    }
  }
}

void neighbor_apply(const Grid& src, Grid& dst, bool gather) {
  const int h = src.height(), w = src.width(), c = src.channels();
  if (c == 2) {
    neighbor_pass<2>(src.values().data(), dst.values().data(), h, w, c, gather);
  } else {
    neighbor_pass<0>(src.values().data(), dst.values().data(), h, w, c, gather);
  }
}

}  // namespace

NodeId neighbor_average(Tape& t, NodeId a) {
  const Grid& va = t.value(a);
  Grid out(va.shape());
  neighbor_apply(va, out, true);
  return t.record(std::move(out), {a}, [a](BackwardContext& ctx) {
    neighbor_apply(ctx.out_grad(), ctx.grad(a), false);
  });
}

NodeId downsample2(Tape& t, NodeId a) {
  const Grid& va = t.value(a);
  const int h = va.height(), w = va.width(), c = va.channels();
  if (h < 1 || w < 1) throw ShapeError("downsample2: empty grid");
  const int oh = (h + 1) / 2, ow = (w + 1) / 2;
  Grid out(oh, ow, c);
  for (int y = 0; y < oh; ++y) {
    for (int x = 0; x < ow; ++x) {
      for (int dy = 0; dy < 2; ++dy) {
        for (int dx = 0; dx < 2; ++dx) {
          const int sy = std::min(2 * y + dy, h - 1), sx = std::min(2 * x + dx, w - 1);
          for (int k = 0; k < c; ++k) out.at(y, x, k) += 0.25 * va.at(sy, sx, k);
        }
      }
    }
  }
  return t.record(std::move(out), {a}, [a, h, w, c, oh, ow](BackwardContext& ctx) {
    const Grid& g = ctx.out_grad();
    Grid& ga = ctx.grad(a);
    for (int y = 0; y < oh; ++y) {
      for (int x = 0; x < ow; ++x) {
        for (int dy = 0; dy < 2; ++dy) {
          for (int dx = 0; dx < 2; ++dx) {
            const int sy = std::min(2 * y + dy, h - 1), sx = std::min(2 * x + dx, w - 1);
            for (int k = 0; k < c; ++k) ga.at(sy, sx, k) += 0.25 * g.at(y, x, k);
          }
        }
      }
    }
  });
}

namespace {

// Source coordinate of output index `o` for a half-pixel-centred resize.
struct Lerp {
  int i0, i1;
  double f;
};

std::vector<Lerp> resize_taps(int out_n, int in_n) {
  std::vector<Lerp> taps(out_n);
  const double ratio = static_cast<double>(in_n) / out_n;
  for (int o = 0; o < out_n; ++o) {
    double s = (o + 0.5) * ratio - 0.5;
    s = std::clamp(s, 0.0, static_cast<double>(in_n - 1));
    const int i0 = static_cast<int>(std::floor(s));
    const int i1 = std::min(i0 + 1, in_n - 1);
    taps[o] = {i0, i1, s - i0};
  }
  return taps;
}

}  // namespace

NodeId resize_bilinear(Tape& t, NodeId a, int height, int width, double gain) {
  const Grid& va = t.value(a);
  if (height < 1 || width < 1 || va.empty()) {
    throw ShapeError("resize_bilinear: bad size " + std::to_string(height) + "x" +
                     std::to_string(width) + " from " + to_string(va.shape()));
  }
  const int c = va.channels();
  auto ty = resize_taps(height, va.height());
  auto tx = resize_taps(width, va.width());
  Grid out(height, width, c);
  for (int y = 0; y < height; ++y) {
    const Lerp& ly = ty[y];
    for (int x = 0; x < width; ++x) {
      const Lerp& lx = tx[x];
      for (int k = 0; k < c; ++k) {
        const double top = (1 - lx.f) * va.at(ly.i0, lx.i0, k) + lx.f * va.at(ly.i0, lx.i1, k);
        const double bot = (1 - lx.f) * va.at(ly.i1, lx.i0, k) + lx.f * va.at(ly.i1, lx.i1, k);
        out.at(y, x, k) = gain * ((1 - ly.f) * top + ly.f * bot);
      }
    }
  }
  return t.record(std::move(out), {a},
                  [a, ty = std::move(ty), tx = std::move(tx), c, gain](BackwardContext& ctx) {
                    const Grid& g = ctx.out_grad();
                    Grid& ga = ctx.grad(a);
                    for (int y = 0; y < g.height(); ++y) {
                      const Lerp& ly = ty[y];
                      for (int x = 0; x < g.width(); ++x) {
                        const Lerp& lx = tx[x];
                        for (int k = 0; k < c; ++k) {
                          const double v = gain * g.at(y, x, k);
                          ga.at(ly.i0, lx.i0, k) += v * (1 - ly.f) * (1 - lx.f);
                          ga.at(ly.i0, lx.i1, k) += v * (1 - ly.f) * lx.f;
                          ga.at(ly.i1, lx.i0, k) += v * ly.f * (1 - lx.f);
                          ga.at(ly.i1, lx.i1, k) += v * ly.f * lx.f;
                        }
                      }
                    }
                  });
}

NodeId smoothness_step(Tape& t, NodeId flow, NodeId avg, NodeId sample, NodeId reference,
                       double lambda) {
  const Grid& f = t.value(flow);
  const Grid& fa = t.value(avg);
  const Grid& s = t.value(sample);
  const Grid& r0 = t.value(reference);
  if (f.channels() != 2 || s.channels() != 3 || r0.channels() != 1) {
    throw ShapeError("smoothness_step: expected 2/2/3/1 channels, got " + to_string(f.shape()) +
                     ", " + to_string(fa.shape()) + ", " + to_string(s.shape()) + ", " +
                     to_string(r0.shape()));
  }
  require_same_shape(f.shape(), fa.shape(), "smoothness_step");
  require_same_plane(f.shape(), s.shape(), "smoothness_step");
  require_same_plane(f.shape(), r0.shape(), "smoothness_step");
  if (!(lambda > 0.0)) throw ShapeError("smoothness_step: lambda must be positive");

  const std::size_t px = r0.size();
  Grid out(f.shape());
  for (std::size_t p = 0; p < px; ++p) {
    const double gx = s[3 * p + 1], gy = s[3 * p + 2];
    const double dx = fa[2 * p] - f[2 * p], dy = fa[2 * p + 1] - f[2 * p + 1];
    const double num = (s[3 * p] - r0[p]) + gx * dx + gy * dy;
    const double den = lambda + gx * gx + gy * gy;
    out[2 * p] = fa[2 * p] - gx * num / den;
    out[2 * p + 1] = fa[2 * p + 1] - gy * num / den;
  }
  return t.record(
      std::move(out), {flow, avg, sample, reference},
      [flow, avg, sample, reference, lambda](BackwardContext& ctx) {
        const Grid& u = ctx.out_grad();
        const Grid& f = ctx.value(flow);
        const Grid& fa = ctx.value(avg);
        const Grid& s = ctx.value(sample);
        const Grid& r0 = ctx.value(reference);
        const std::size_t px = r0.size();
        Grid* gf = ctx.needs_grad(flow) ? &ctx.grad(flow) : nullptr;
        Grid* ga = ctx.needs_grad(avg) ? &ctx.grad(avg) : nullptr;
        Grid* gs = ctx.needs_grad(sample) ? &ctx.grad(sample) : nullptr;
        Grid* gr = ctx.needs_grad(reference) ? &ctx.grad(reference) : nullptr;
        for (std::size_t p = 0; p < px; ++p) {
          const double gx = s[3 * p + 1], gy = s[3 * p + 2];
          const double dx = fa[2 * p] - f[2 * p], dy = fa[2 * p + 1] - f[2 * p + 1];
          const double r = s[3 * p] - r0[p];
          const double num = r + gx * dx + gy * dy;
          const double den = lambda + gx * gx + gy * gy;
          const double ux = u[2 * p], uy = u[2 * p + 1];
          const double ug = ux * gx + uy * gy;
          // d out / d num = -g / den
          const double dnum = -ug / den;
          if (ga) {
            (*ga)[2 * p] += ux + dnum * gx;
            (*ga)[2 * p + 1] += uy + dnum * gy;
          }
          if (gf) {
            (*gf)[2 * p] -= dnum * gx;
            (*gf)[2 * p + 1] -= dnum * gy;
          }
          if (gr) (*gr)[p] -= dnum;
          if (gs) {
            const double q = num / den;
            (*gs)[3 * p] += dnum;
            (*gs)[3 * p + 1] += -ux * q + dnum * dx + ug * 2.0 * gx * q / den;
            (*gs)[3 * p + 2] += -uy * q + dnum * dy + ug * 2.0 * gy * q / den;
          }
        }
      });
}

}  // namespace flowcast::ops
