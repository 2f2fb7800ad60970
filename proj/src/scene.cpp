#include "flowcast/scene.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "flowcast/error.hpp"

namespace flowcast {

SceneKind parse_scene_kind(const std::string& s) {
  if (s == "static") return SceneKind::Static;
  if (s == "translate") return SceneKind::Translate;
  if (s == "rotate") return SceneKind::Rotate;
  if (s == "parallax") return SceneKind::Parallax;
  throw ConfigError("unknown scene kind '" + s + "'");
}

std::string to_string(SceneKind k) {
  switch (k) {
    case SceneKind::Static: return "static";
    case SceneKind::Translate: return "translate";
    case SceneKind::Rotate: return "rotate";
    case SceneKind::Parallax: return "parallax";
  }
  return "?";
}

void SceneSpec::validate() const {
  if (height < 8 || width < 8) throw ConfigError("scene must be at least 8x8");
  if (channels != 1 && channels != 3) throw ConfigError("scene channels must be 1 or 3");
  if (frames < 3) throw ConfigError("scene needs at least 3 frames");
  for (double v : {velocity[0], velocity[1], fg_velocity[0], fg_velocity[1], angular_rate_deg,
                   fg_radius}) {
    if (!std::isfinite(v)) throw ConfigError("scene motion parameters must be finite");
  }
  if (kind == SceneKind::Parallax && !(fg_radius > 0.0)) {
    throw ConfigError("parallax foreground radius must be positive");
  }
}

double SceneSpec::max_displacement() const {
  switch (kind) {
    case SceneKind::Static: return 0.0;
    case SceneKind::Translate: return std::hypot(velocity[0], velocity[1]);
    case SceneKind::Rotate: {
      const double r = std::hypot(0.5 * (width - 1), 0.5 * (height - 1));
      return 2.0 * r * std::sin(0.5 * std::abs(angular_rate_deg) * std::numbers::pi / 180.0);
    }
    case SceneKind::Parallax:
      return std::max(std::hypot(velocity[0], velocity[1]),
                      std::hypot(fg_velocity[0], fg_velocity[1]));
  }
  return 0.0;
}

namespace {

// Sum of sinusoids per channel; bounded to [0.02, 0.98] by construction.
class Texture {
 public:
  Texture(std::mt19937_64& rng, int channels) : channels_(channels) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    constexpr int kWaves = 12;
    constexpr double kTotalAmplitude = 0.48;
    waves_.resize(channels);
    for (int c = 0; c < channels; ++c) {
      double total = 0.0;
      for (int i = 0; i < kWaves; ++i) {
        const double period = 8.0 + 24.0 * unit(rng);
        const double dir = 2.0 * std::numbers::pi * unit(rng);
        const double k = 2.0 * std::numbers::pi / period;
        Wave w{k * std::cos(dir), k * std::sin(dir), 2.0 * std::numbers::pi * unit(rng),
               0.5 + unit(rng)};
        total += w.amp;
        waves_[c].push_back(w);
      }
      for (Wave& w : waves_[c]) w.amp *= kTotalAmplitude / total;
    }
  }

  double operator()(double x, double y, int c) const {
    double v = 0.5;
    for (const Wave& w : waves_[c]) v += w.amp * std::sin(w.kx * x + w.ky * y + w.phase);
    return v;
  }

  int channels() const { return channels_; }

 private:
  struct Wave {
    double kx, ky, phase, amp;
  };
  int channels_;
  std::vector<std::vector<Wave>> waves_;
};

}  // namespace

Scene generate_scene(const SceneSpec& spec) {
  spec.validate();
  std::mt19937_64 rng(spec.seed);
  const Texture bg(rng, spec.channels);
  const Texture fg(rng, spec.channels);
  const int h = spec.height, w = spec.width, nc = spec.channels;
  const double cx = 0.5 * (w - 1), cy = 0.5 * (h - 1);
  const double theta = spec.angular_rate_deg * std::numbers::pi / 180.0;

  auto in_disk = [&](double x, double y, int k) {
    const double dx = x - (cx + k * spec.fg_velocity[0]);
    const double dy = y - (cy + k * spec.fg_velocity[1]);
    return dx * dx + dy * dy <= spec.fg_radius * spec.fg_radius;
  };

  Scene s;
  for (int k = 0; k < spec.frames; ++k) {
    Grid f(h, w, nc);
    const double ck = std::cos(-k * theta), sk = std::sin(-k * theta);
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        for (int c = 0; c < nc; ++c) {
          double v = 0.0;
          switch (spec.kind) {
            case SceneKind::Static:
              v = bg(x, y, c);
              break;
            case SceneKind::Translate:
              v = bg(x - k * spec.velocity[0], y - k * spec.velocity[1], c);
              break;
            case SceneKind::Rotate: {
              const double dx = x - cx, dy = y - cy;
              v = bg(cx + ck * dx - sk * dy, cy + sk * dx + ck * dy, c);
              break;
            }
            case SceneKind::Parallax:
              v = in_disk(x, y, k) ? fg(x - k * spec.fg_velocity[0], y - k * spec.fg_velocity[1], c)
                                   : bg(x - k * spec.velocity[0], y - k * spec.velocity[1], c);
              break;
          }
          f.at(y, x, c) = v;
        }
      }
    }
    s.frames.push_back(std::move(f));
  }

  const double ct = std::cos(theta), st = std::sin(theta);
  for (int k = 0; k + 1 < spec.frames; ++k) {
    Grid fwd(h, w, 2), bwd(h, w, 2);
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        double fx = 0.0, fy = 0.0, bx = 0.0, by = 0.0;
        switch (spec.kind) {
          case SceneKind::Static:
            break;
          case SceneKind::Translate:
            fx = spec.velocity[0];
            fy = spec.velocity[1];
            bx = -fx;
            by = -fy;
            break;
          case SceneKind::Rotate: {
            const double dx = x - cx, dy = y - cy;
            fx = ct * dx - st * dy - dx;
            fy = st * dx + ct * dy - dy;
            bx = ct * dx + st * dy - dx;
            by = -st * dx + ct * dy - dy;
            break;
          }
          case SceneKind::Parallax: {
            const auto& vf = in_disk(x, y, k) ? spec.fg_velocity : spec.velocity;
            fx = vf[0];
            fy = vf[1];
            const auto& vb = in_disk(x, y, k + 1) ? spec.fg_velocity : spec.velocity;
            bx = -vb[0];
            by = -vb[1];
            break;
          }
        }
        fwd.at(y, x, 0) = fx;
        fwd.at(y, x, 1) = fy;
        bwd.at(y, x, 0) = bx;
        bwd.at(y, x, 1) = by;
      }
    }
    s.forward_flows.push_back(std::move(fwd));
    s.backward_flows.push_back(std::move(bwd));
  }
  return s;
}

}  // namespace flowcast
