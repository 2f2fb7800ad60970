#include "doctest.h"
#include "flowcast/error.hpp"
#include "flowcast/flow_init.hpp"
#include "flowcast/metrics.hpp"
#include "flowcast/scene.hpp"
#include "flowcast/warp.hpp"
#include "helpers.hpp"

using namespace flowcast;

namespace {

Scene scene(SceneKind kind, double vx = 2, double vy = 1) {
  SceneSpec s;
  s.kind = kind;
  s.velocity = {vx, vy};
  s.frames = 3;
  return generate_scene(s);
}

}  // namespace

TEST_CASE("identical frames give zero flow") {
  const Scene s = scene(SceneKind::Translate);
  const Grid f = estimate_flow(s.frames[0], s.frames[0]);
  for (double v : f.values()) CHECK(std::abs(v) < 1e-6);
}

TEST_CASE("estimated flow warps b back onto a") {
  // b is a with content moved right by 3 px.
  const Scene s = scene(SceneKind::Translate, 3, 0);
  const Grid& a = s.frames[0];
  const Grid& b = s.frames[1];
  const Grid f = estimate_flow(a, b);
  CHECK(psnr(backward_warp(b, f), a, 5) >= 28.0);
  // the convention: a(p) ~ b(p + f) means f ~ (+3, 0)
  CHECK(mean_epe(f, test::constant_flow(64, 64, 3, 0), 5) < 0.5);
}

TEST_CASE("rotation flow matches the analytic field") {
  const Scene s = scene(SceneKind::Rotate);
  // backward_flows[0] lives on frame 1 and points into frame 0
  const Grid f = estimate_flow(s.frames[1], s.frames[0]);
  CHECK(mean_epe(f, s.backward_flows[0], 6) < 0.5);
}

TEST_CASE("static pair initialises to zero") {
  const Scene s = scene(SceneKind::Static);
  const Grid f = init_prediction_flow(s.frames[0], s.frames[1]);
  for (double v : f.values()) CHECK(std::abs(v) < 1e-6);
}

TEST_CASE("constant translation initialises to the continued backward motion") {
  const Scene s = scene(SceneKind::Translate);
  const Grid f = init_prediction_flow(s.frames[0], s.frames[1]);
  CHECK(f.all_finite());
  CHECK(mean_epe(f, test::constant_flow(64, 64, -2, -1), 5) < 0.5);
  CHECK(psnr(backward_warp(s.frames[1], f), s.frames[2], 5) >= 25.0);
}

TEST_CASE("zero and noise modes ignore the frame content") {
  const Scene s = scene(SceneKind::Translate);
  const Grid z = init_prediction_flow(s.frames[0], s.frames[1], {}, InitMode::Zero);
  CHECK(z == Grid(64, 64, 2));
  const Grid n1 = init_prediction_flow(s.frames[0], s.frames[1], {}, InitMode::Noise, 7);
  const Grid n2 = init_prediction_flow(Grid(64, 64, 3), Grid(64, 64, 3), {}, InitMode::Noise, 7);
  CHECK(n1 == n2);
  double sq = 0.0;
  for (double v : n1.values()) sq += v * v;
  CHECK(std::sqrt(sq / n1.size()) == doctest::Approx(kNoiseInitSigma).epsilon(0.05));
  CHECK(init_prediction_flow(s.frames[0], s.frames[1], {}, InitMode::Noise, 8) != n1);
}

TEST_CASE("init mode names") {
  CHECK(parse_init_mode("flow") == InitMode::Flow);
  CHECK(parse_init_mode("zero") == InitMode::Zero);
  CHECK(parse_init_mode("noise") == InitMode::Noise);
  CHECK(to_string(InitMode::Noise) == "noise");
  CHECK_THROWS_AS(parse_init_mode("raft"), ConfigError);
}

TEST_CASE("mismatched frames are rejected") {
  CHECK_THROWS_AS(estimate_flow(Grid(8, 8, 3), Grid(8, 10, 3)), ShapeError);
}
