#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "flowcast/grid.hpp"

namespace flowcast {

enum class SceneKind { Static, Translate, Rotate, Parallax };

SceneKind parse_scene_kind(const std::string& s);  // static|translate|rotate|parallax
std::string to_string(SceneKind k);

/// Parametric synthetic sequence with analytic ground-truth motion.
struct SceneSpec {
  SceneKind kind = SceneKind::Translate;
  int height = 64;
  int width = 64;
  int channels = 3;
  std::uint64_t seed = 1;
  int frames = 5;
  // Translate: content velocity. Parallax: background velocity.
  std::array<double, 2> velocity{2.0, 1.0};
  // Rotate: degrees per frame about the frame centre (positive turns +x
  // towards +y).
  double angular_rate_deg = 2.0;
  // Parallax foreground disk.
  std::array<double, 2> fg_velocity{-2.0, 0.0};
  double fg_radius = 12.0;

  void validate() const;  // throws ConfigError
  // Largest per-frame displacement anywhere in the frame, in pixels.
  double max_displacement() const;
};

struct Scene {
  std::vector<Grid> frames;
  // forward[k] lives on frame k: frame_k(p) == frame_{k+1}(p + forward[k](p)).
  std::vector<Grid> forward_flows;
  // backward[k] lives on frame k+1: frame_{k+1}(p) == frame_k(p + backward[k](p)).
  std::vector<Grid> backward_flows;
};

/// Renders a band-limited random texture (a sum of random sinusoids with
/// periods between 8 and 32 px, so it can be evaluated exactly at any
/// sub-pixel position) under the requested motion. Deterministic per seed.
Scene generate_scene(const SceneSpec& spec);

}  // namespace flowcast
