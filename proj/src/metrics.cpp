#include "flowcast/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <cstdio>
#include <ostream>

#include "json.hpp"

#include "flowcast/error.hpp"

namespace flowcast {
namespace {

void require_interior(const Grid& a, int margin, const char* what) {
  if (margin < 0 || 2 * margin >= a.height() || 2 * margin >= a.width()) {
    throw ShapeError(std::string(what) + ": margin " + std::to_string(margin) +
                     " leaves no interior in " + to_string(a.shape()));
  }
}

}  // namespace

double psnr(const Grid& a, const Grid& b, int margin) {
  require_same_shape(a.shape(), b.shape(), "psnr");
  require_interior(a, margin, "psnr");
  double sse = 0.0;
  std::size_t n = 0;
  for (int y = margin; y < a.height() - margin; ++y) {
    for (int x = margin; x < a.width() - margin; ++x) {
      for (int c = 0; c < a.channels(); ++c) {
        const double d = a.at(y, x, c) - b.at(y, x, c);
        sse += d * d;
        ++n;
      }
    }
  }
  if (sse == 0.0) return kPsnrIdentical;
  return 10.0 * std::log10(static_cast<double>(n) / sse);
}

double mean_epe(const Grid& flow, const Grid& truth, int margin) {
  require_same_shape(flow.shape(), truth.shape(), "mean_epe");
  if (flow.channels() != 2) throw ShapeError("mean_epe: flows must have 2 channels");
  require_interior(flow, margin, "mean_epe");
  double s = 0.0;
  std::size_t n = 0;
  for (int y = margin; y < flow.height() - margin; ++y) {
    for (int x = margin; x < flow.width() - margin; ++x) {
      s += std::hypot(flow.at(y, x, 0) - truth.at(y, x, 0), flow.at(y, x, 1) - truth.at(y, x, 1));
      ++n;
    }
  }
  return s / static_cast<double>(n);
}

namespace {

// Plain 2-D array for one channel.
struct Plane {
  int h = 0, w = 0;
  std::vector<double> v;
  Plane(int h_, int w_) : h(h_), w(w_), v(static_cast<std::size_t>(h_) * w_, 0.0) {}
  double& at(int y, int x) { return v[static_cast<std::size_t>(y) * w + x]; }
  double at(int y, int x) const { return v[static_cast<std::size_t>(y) * w + x]; }
};

Plane plane_of(const Grid& g, int c) {
  Plane p(g.height(), g.width());
  for (int y = 0; y < g.height(); ++y) {
    for (int x = 0; x < g.width(); ++x) p.at(y, x) = g.at(y, x, c);
  }
  return p;
}

std::vector<double> gaussian_taps(const SsimParams& p) {
  std::vector<double> k(p.window);
  const double mid = 0.5 * (p.window - 1);
  double s = 0.0;
  for (int i = 0; i < p.window; ++i) {
    k[i] = std::exp(-((i - mid) * (i - mid)) / (2.0 * p.sigma * p.sigma));
    s += k[i];
  }
  for (double& v : k) v /= s;
  return k;
}

// Separable 'valid' filtering.
Plane filter_valid(const Plane& in, const std::vector<double>& k) {
  const int n = static_cast<int>(k.size());
  Plane rows(in.h, in.w - n + 1);
  for (int y = 0; y < in.h; ++y) {
    for (int x = 0; x < rows.w; ++x) {
      double s = 0.0;
      for (int i = 0; i < n; ++i) s += k[i] * in.at(y, x + i);
      rows.at(y, x) = s;
    }
  }
  Plane out(in.h - n + 1, rows.w);
  for (int y = 0; y < out.h; ++y) {
    for (int x = 0; x < out.w; ++x) {
      double s = 0.0;
      for (int i = 0; i < n; ++i) s += k[i] * rows.at(y + i, x);
      out.at(y, x) = s;
    }
  }
  return out;
}

Plane product(const Plane& a, const Plane& b) {
  Plane o(a.h, a.w);
  for (std::size_t i = 0; i < a.v.size(); ++i) o.v[i] = a.v[i] * b.v[i];
  return o;
}

struct SsimTerms {
  double ssim;  // mean of luminance * contrast-structure
  double cs;    // mean of contrast-structure
};

SsimTerms ssim_terms(const Plane& a, const Plane& b, const std::vector<double>& k,
                     const SsimParams& p) {
  const double c1 = (p.k1 * p.peak) * (p.k1 * p.peak);
  const double c2 = (p.k2 * p.peak) * (p.k2 * p.peak);
  const Plane mu_a = filter_valid(a, k);
  const Plane mu_b = filter_valid(b, k);
  const Plane e_aa = filter_valid(product(a, a), k);
  const Plane e_bb = filter_valid(product(b, b), k);
  const Plane e_ab = filter_valid(product(a, b), k);
  double s_ssim = 0.0, s_cs = 0.0;
  for (std::size_t i = 0; i < mu_a.v.size(); ++i) {
    const double ma = mu_a.v[i], mb = mu_b.v[i];
    const double va = e_aa.v[i] - ma * ma;
    const double vb = e_bb.v[i] - mb * mb;
    const double cov = e_ab.v[i] - ma * mb;
    const double cs = (2.0 * cov + c2) / (va + vb + c2);
    const double lum = (2.0 * ma * mb + c1) / (ma * ma + mb * mb + c1);
    s_cs += cs;
    s_ssim += lum * cs;
  }
  const double n = static_cast<double>(mu_a.v.size());
  return {s_ssim / n, s_cs / n};
}

Plane halve(const Plane& in) {
  Plane out(in.h / 2, in.w / 2);
  for (int y = 0; y < out.h; ++y) {
    for (int x = 0; x < out.w; ++x) {
      out.at(y, x) = 0.25 * (in.at(2 * y, 2 * x) + in.at(2 * y, 2 * x + 1) +
                             in.at(2 * y + 1, 2 * x) + in.at(2 * y + 1, 2 * x + 1));
    }
  }
  return out;
}

void check_ssim_inputs(const Grid& a, const Grid& b, const SsimParams& p, const char* what) {
  require_same_shape(a.shape(), b.shape(), what);
  if (p.window < 1 || a.height() < p.window || a.width() < p.window) {
    throw ShapeError(std::string(what) + ": image " + to_string(a.shape()) +
                     " smaller than the " + std::to_string(p.window) + "-pixel window");
  }
}

}  // namespace

double ssim(const Grid& a, const Grid& b, const SsimParams& p) {
  check_ssim_inputs(a, b, p, "ssim");
  const auto k = gaussian_taps(p);
  double s = 0.0;
  for (int c = 0; c < a.channels(); ++c) s += ssim_terms(plane_of(a, c), plane_of(b, c), k, p).ssim;
  return s / a.channels();
}

int ms_ssim_scales(int height, int width, const SsimParams& p) {
  int scales = 0;
  int h = height, w = width;
  while (scales < 5 && h >= p.window && w >= p.window) {
    ++scales;
    h /= 2;
    w /= 2;
  }
  return scales;
}

double ms_ssim(const Grid& a, const Grid& b, const SsimParams& p) {
  check_ssim_inputs(a, b, p, "ms_ssim");
  const int scales = ms_ssim_scales(a.height(), a.width(), p);
  double wsum = 0.0;
  for (int s = 0; s < scales; ++s) wsum += kMsSsimWeights[s];
  const auto k = gaussian_taps(p);

  double total = 0.0;
  for (int c = 0; c < a.channels(); ++c) {
    Plane pa = plane_of(a, c), pb = plane_of(b, c);
    double score = 1.0;
    for (int s = 0; s < scales; ++s) {
      const SsimTerms t = ssim_terms(pa, pb, k, p);
      const double term = s + 1 == scales ? t.ssim : t.cs;
      score *= std::pow(std::max(term, 0.0), kMsSsimWeights[s] / wsum);
      if (s + 1 < scales) {
        pa = halve(pa);
        pb = halve(pb);
      }
    }
    total += score;
  }
  return total / a.channels();
}

Grid flow_to_color(const Grid& flow, double max_magnitude) {
  if (flow.channels() != 2) throw ShapeError("flow_to_color: flow must have 2 channels");
  if (!(max_magnitude > 0.0)) throw ConfigError("flow_to_color: max_magnitude must be > 0");
  Grid out(flow.height(), flow.width(), 3);
  for (int y = 0; y < flow.height(); ++y) {
    for (int x = 0; x < flow.width(); ++x) {
      const double u = flow.at(y, x, 0), v = flow.at(y, x, 1);
      const double sat = std::min(std::hypot(u, v) / max_magnitude, 1.0);
      double hue = std::atan2(-v, u) * 180.0 / std::numbers::pi;
      if (hue < 0.0) hue += 360.0;
      // HSV with V = 1.
      const double h6 = hue / 60.0;
      const int sector = static_cast<int>(std::floor(h6)) % 6;
      const double f = h6 - std::floor(h6);
      const double p = 1.0 - sat, q = 1.0 - sat * f, t = 1.0 - sat * (1.0 - f);
      double r = 1, g = 1, b = 1;
      switch (sector) {
        case 0: r = 1; g = t; b = p; break;
        case 1: r = q; g = 1; b = p; break;
        case 2: r = p; g = 1; b = t; break;
        case 3: r = p; g = q; b = 1; break;
        case 4: r = t; g = p; b = 1; break;
        default: r = 1; g = p; b = q; break;
      }
      out.at(y, x, 0) = r;
      out.at(y, x, 1) = g;
      out.at(y, x, 2) = b;
    }
  }
  return out;
}

FrameMetrics& MetricsReport::add(const Grid& predicted, const Grid& truth, int index,
                                 const Grid* flow, const Grid* truth_flow) {
  FrameMetrics m;
  m.index = index;
  m.psnr = psnr(predicted, truth, margin);
  m.ssim = ssim(predicted, truth);
  m.ms_ssim = ms_ssim(predicted, truth);
  if (flow && truth_flow) m.epe = mean_epe(*flow, *truth_flow, margin);
  frames.push_back(m);
  return frames.back();
}

double MetricsReport::mean_psnr() const {
  if (frames.empty()) return 0.0;
  double s = 0.0;
  for (const auto& f : frames) s += f.psnr;
  return s / static_cast<double>(frames.size());
}

namespace {

std::string number(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

}  // namespace

void MetricsReport::write_text(std::ostream& os) const {
  os << "margin = " << margin << "\n";
  os << "frames = " << frames.size() << "\n";
  for (const auto& f : frames) {
    const std::string k = "t+" + std::to_string(f.index);
    os << k << ".psnr = " << number(f.psnr) << "\n";
    os << k << ".ssim = " << number(f.ssim) << "\n";
    os << k << ".ms_ssim = " << number(f.ms_ssim) << "\n";
    if (f.epe) os << k << ".epe = " << number(*f.epe) << "\n";
  }
  if (!frames.empty()) os << "mean.psnr = " << number(mean_psnr()) << "\n";
}

void MetricsReport::write_jsonl(std::ostream& os) const {
  for (const auto& f : frames) {
    nlohmann::ordered_json j;
    j["frame"] = f.index;
    j["margin"] = margin;
    // JSON has no infinity; identical frames report psnr as null.
    j["psnr"] = std::isfinite(f.psnr) ? nlohmann::ordered_json(f.psnr) : nlohmann::ordered_json();
    j["ssim"] = f.ssim;
    j["ms_ssim"] = f.ms_ssim;
    j["epe"] = f.epe ? nlohmann::ordered_json(*f.epe) : nlohmann::ordered_json();
    os << j.dump() << "\n";
  }
}

}  // namespace flowcast
