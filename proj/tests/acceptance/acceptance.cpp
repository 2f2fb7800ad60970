// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails. Takes an optional scratch directory for run artefacts.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "flowcast/flow_ops.hpp"
#include "flowcast/gradcheck.hpp"
#include "flowcast/metrics.hpp"
#include "flowcast/predictor.hpp"
#include "flowcast/run.hpp"
#include "flowcast/scene.hpp"
#include "ms_ssim_reference.hpp"

namespace fs = std::filesystem;
using namespace flowcast;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

int failures = 0;

void report(int id, bool ok, const std::string& detail) {
  std::printf("%s criterion %d: %s\n", ok ? "PASS" : "FAIL", id, detail.c_str());
  std::fflush(stdout);
  if (!ok) ++failures;
}

std::string format(const char* fmt, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, fmt, args...);
  return buf;
}

Grid constant_flow(int h, int w, double vx, double vy) {
  Grid f(h, w, 2);
  for (std::size_t i = 0; i < f.size(); i += 2) {
    f[i] = vx;
    f[i + 1] = vy;
  }
  return f;
}

Grid uniform(int h, int w, int c, std::mt19937_64& rng, double lo, double hi) {
  std::uniform_real_distribution<double> u(lo, hi);
  Grid g(h, w, c);
  for (double& v : g.values()) v = u(rng);
  return g;
}

// Scene margin rule used throughout: ceil(displacement * frames ahead) + 2.
int margin_for(const SceneSpec& s, int ahead) {
  return static_cast<int>(std::ceil(s.max_displacement() * ahead)) + 2;
}

void criterion1() {
  const auto t0 = Clock::now();
  const auto results = run_gradcheck_suite();
  const double secs = seconds_since(t0);
  bool ok = secs < 30.0 && !results.empty();
  double worst_core = 0.0, worst_backend = 0.0;
  std::string failed;
  for (const auto& r : results) {
    (r.tolerance == kCoreGradTolerance ? worst_core : worst_backend) =
        std::max(r.tolerance == kCoreGradTolerance ? worst_core : worst_backend, r.max_rel_error);
    if (!r.passed()) {
      ok = false;
      failed += " " + r.name;
    }
  }
  report(1, ok,
         format("%zu gradient checks, worst core %.2e (tol 1e-4), worst backend %.2e (tol 1e-3), "
                "%.1f s (limit 30)%s%s",
                results.size(), worst_core, worst_backend, secs, failed.empty() ? "" : ", failed:",
                failed.c_str()));
}

void criterion2() {
  bool ok = true;
  std::string detail;
  const int n = 64;
  for (auto [vx, vy] : {std::pair{3.0, 0.0}, {0.0, -2.0}, {1.5, 0.5}}) {
    const ReversedFlow r = reverse_flow(constant_flow(n, n, vx, vy));
    int covered = 0, wrong = 0;
    for (int y = 0; y < n; ++y) {
      for (int x = 0; x < n; ++x) {
        if (r.holes.at(y, x) != 0.0) continue;
        ++covered;
        if (r.flow.at(y, x, 0) != -vx || r.flow.at(y, x, 1) != -vy) ++wrong;
      }
    }
    ok = ok && wrong == 0 && covered > 0;
    detail += format("v=(%g,%g): %d/%d covered pixels exact; ", vx, vy, covered - wrong, covered);
  }
  SceneSpec spec;
  spec.kind = SceneKind::Rotate;
  const Scene s = generate_scene(spec);
  // forward flow of frame 0 reversed onto frame 1 vs the analytic inverse rotation
  const ReversedFlow r = reverse_flow(s.forward_flows[0]);
  const Grid filled = inpaint_flow(r.flow, r.holes);
  const double epe = mean_epe(filled, s.backward_flows[0], margin_for(spec, 1));
  ok = ok && epe < 0.1;
  detail += format("rotation %.1f deg/frame: mean EPE %.4f px (limit 0.1)", spec.angular_rate_deg, epe);
  report(2, ok, detail);
}

void criterion3() {
  std::mt19937_64 rng(3);
  const int n = 64;
  const Grid flat = constant_flow(n, n, 1.25, -0.75);
  Grid mask(n, n, 1);
  std::bernoulli_distribution tenth(0.1);
  for (double& m : mask.values()) m = tenth(rng) ? 1.0 : 0.0;
  const double err = max_abs_diff(inpaint_flow(flat, mask), flat);

  int convex_violations = 0, changed_valid = 0, not_idempotent = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const Grid f = uniform(32, 32, 2, rng, -5.0, 5.0);
    Grid m(32, 32, 1);
    std::bernoulli_distribution holes(0.05 + 0.5 * trial / 100.0);
    for (double& v : m.values()) v = holes(rng) ? 1.0 : 0.0;
    m[0] = 0.0;  // keep at least one valid pixel
    const Grid out = inpaint_flow(f, m);
    for (int c = 0; c < 2; ++c) {
      double lo = INFINITY, hi = -INFINITY;
      for (int y = 0; y < 32; ++y)
        for (int x = 0; x < 32; ++x)
          if (m.at(y, x) == 0.0) lo = std::min(lo, f.at(y, x, c)), hi = std::max(hi, f.at(y, x, c));
      for (int y = 0; y < 32; ++y) {
        for (int x = 0; x < 32; ++x) {
          const double v = out.at(y, x, c);
          if (m.at(y, x) == 0.0 && v != f.at(y, x, c)) ++changed_valid;
          if (v < lo - 1e-12 || v > hi + 1e-12) ++convex_violations;
        }
      }
    }
    if (inpaint_flow(out, Grid(32, 32, 1)) != out) ++not_idempotent;
  }
  const bool ok = err < 1e-12 && convex_violations == 0 && changed_valid == 0 && not_idempotent == 0;
  report(3, ok,
         format("constant field, %d masked: max error %.1e (limit 1e-12); 100 random fields: %d "
                "envelope violations, %d valid pixels changed, %d non-idempotent",
                static_cast<int>(std::count(mask.values().begin(), mask.values().end(), 1.0)), err,
                convex_violations, changed_valid, not_idempotent));
}

void criterion4() {
  SceneSpec spec;
  spec.kind = SceneKind::Static;
  const Scene s = generate_scene(spec);
  const auto t0 = Clock::now();
  const Prediction p = predict_next(s.frames[0], s.frames[1], PredictorConfig{});
  const double secs = seconds_since(t0);
  const double db = psnr(p.frame, s.frames[1], margin_for(spec, 1));
  const bool ok = db >= 40.0 && p.final_loss.total < 1e-3 && secs < 120.0;
  report(4, ok,
         format("static 64x64, 3000 iterations: PSNR %s dB (min 40), final loss %.2e (max 1e-3), "
                "%.1f s (limit 120)",
                std::isinf(db) ? "inf" : format("%.2f", db).c_str(), p.final_loss.total, secs));
}

// Criteria 5 and 6 share the translation run.
Prediction criterion5_and_6() {
  SceneSpec spec;  // translate, 64x64, velocity (2,1), seed 1
  spec.frames = 5;
  const Scene s = generate_scene(spec);
  const auto t0 = Clock::now();
  const auto seq = predict_sequence(s.frames[0], s.frames[1], 3, PredictorConfig{});
  const double secs = seconds_since(t0);
  const double p1 = psnr(seq[0].frame, s.frames[2], margin_for(spec, 1));
  const double epe = mean_epe(seq[0].flow, s.backward_flows[1], margin_for(spec, 1));
  const double p3 = psnr(seq[2].frame, s.frames[4], margin_for(spec, 3));
  report(5, p1 >= 30.0 && epe <= 0.25 && p3 >= 26.0 && secs < 600.0,
         format("translate (2,1) 64x64: t+1 PSNR %.2f dB (min 30), flow EPE %.3f px (max 0.25), "
                "t+3 PSNR %.2f dB (min 26), %.0f s (limit 600)",
                p1, epe, p3, secs));

  const auto& r = seq[0].trace.records;
  const double l0 = r.at(0).total, l400 = r.at(400).total, l3000 = seq[0].final_loss.total;
  report(6, l400 <= 0.2 * l0 && l3000 <= l400,
         format("translate t+1 loss: iter 0 %.5f, iter 400 %.5f (ratio %.3f, max 0.2), "
                "after 3000 %.5f (must be <= iter 400)",
                l0, l400, l400 / l0, l3000));
  return seq[0];
}

void criterion7(const Prediction& translate_seed1) {
  struct Variant {
    const char* name;
    std::function<void(PredictorConfig&)> apply;
  };
  const std::vector<Variant> variants = {
      {"full", [](PredictorConfig&) {}},
      {"zero-init", [](PredictorConfig& c) { c.init = InitMode::Zero; }},
      {"noise-init", [](PredictorConfig& c) { c.init = InitMode::Noise; }},
      {"no-L_cons", [](PredictorConfig& c) { c.optim.w_cons = 0.0; }},
      {"no-inpainting", [](PredictorConfig& c) { c.optim.inpaint_cadence = InpaintCadence::Off; }},
  };
  std::vector<double> mean(variants.size(), 0.0);
  std::string per_scene;
  const auto t0 = Clock::now();
  for (int k = 0; k < 5; ++k) {
    SceneSpec spec;
    spec.kind = k % 2 == 0 ? SceneKind::Translate : SceneKind::Rotate;
    spec.seed = static_cast<std::uint64_t>(k + 1);
    spec.frames = 3;
    const Scene s = generate_scene(spec);
    per_scene += format("\n    %s seed %d:", to_string(spec.kind).c_str(), k + 1);
    for (std::size_t v = 0; v < variants.size(); ++v) {
      PredictorConfig cfg;
      cfg.seed = 1;
      variants[v].apply(cfg);
      // the full model on translate seed 1 is the criterion 5 run
      const Grid frame = (k == 0 && v == 0) ? translate_seed1.frame
                                             : predict_next(s.frames[0], s.frames[1], cfg).frame;
      const double db = psnr(frame, s.frames[2], margin_for(spec, 1));
      mean[v] += db / 5.0;
      per_scene += format(" %s %.2f", variants[v].name, db);
    }
  }
  bool ok = true;
  std::string gaps;
  for (std::size_t v = 1; v < variants.size(); ++v) {
    const double gap = mean[0] - mean[v];
    ok = ok && gap >= 0.0;
    if (v == 1) ok = ok && gap >= 1.0;
    gaps += format("%s%s %+.2f dB", v == 1 ? "" : ", ", variants[v].name, gap);
  }
  report(7, ok,
         format("mean PSNR full %.2f dB over 5 scenes; gap to %s (all >= 0, zero-init >= 1 dB); "
                "%.0f s",
                mean[0], gaps.c_str(), seconds_since(t0)) +
             per_scene);
}

void criterion8() {
  std::mt19937_64 rng(8);
  double worst = 0.0;
  for (int k = 0; k < 20; ++k) {
    const Grid a = uniform(256, 256, 3, rng, 0.0, 1.0);
    Grid b = k < 2 ? uniform(256, 256, 3, rng, 0.0, 1.0) : a;
    if (k >= 2) {
      const double amp = 0.02 * k;
      const Grid noise = uniform(256, 256, 3, rng, -amp, amp);
      for (std::size_t i = 0; i < b.size(); ++i) b[i] = std::clamp(b[i] + noise[i], 0.0, 1.0);
    }
    worst = std::max(worst, std::abs(ms_ssim(a, b) - test::reference_ms_ssim(a, b)));
  }
  const Grid a = uniform(256, 256, 3, rng, 0.0, 0.9);
  const double self = ms_ssim(a, a);
  Grid shifted = a;
  for (double& v : shifted.values()) v += 0.1;
  const double p = psnr(a, shifted);
  report(8, worst < 1e-6 && self == 1.0 && std::abs(p - 20.0) < 1e-9,
         format("20 random 256x256 pairs: max |ms_ssim - reference| %.2e (limit 1e-6); "
                "ms_ssim(a,a) = %.17g; uniform 0.1 offset PSNR %.12f dB",
                worst, self, p));
}

std::map<std::string, std::string> snapshot(const fs::path& dir) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::directory_iterator(dir)) {
    std::ifstream in(e.path(), std::ios::binary);
    files[e.path().filename().string()] = {std::istreambuf_iterator<char>(in), {}};
  }
  return files;
}

void criterion9(const fs::path& scratch) {
  RunConfig cfg;
  cfg.set("scene", "parallax");
  cfg.horizon = 2;
  cfg.predictor.optim.iterations = 300;
  cfg.set("init", "noise");
  cfg.predictor.seed = 11;
  cfg.emit_flow = cfg.emit_trace = true;
  cfg.output_dir = (scratch / "determinism").string();
  fs::remove_all(cfg.output_dir);
  execute(cfg);
  const auto first = snapshot(cfg.output_dir);
  fs::remove_all(cfg.output_dir);
  execute(cfg);
  const auto second = snapshot(cfg.output_dir);
  std::size_t bytes = 0;
  for (const auto& [name, data] : first) bytes += data.size();
  report(9, first == second && first.size() == 9,
         format("two runs, same config: %zu files, %zu bytes, %s", first.size(), bytes,
                first == second ? "byte-identical" : "DIFFERENT"));
}

}  // namespace

int main(int argc, char** argv) {
  const fs::path scratch = argc > 1 ? fs::path(argv[1]) : fs::temp_directory_path() / "flowcast_acceptance";
  fs::create_directories(scratch);
  try {
    criterion1();
    criterion2();
    criterion3();
    criterion4();
    const Prediction translate = criterion5_and_6();
    criterion7(translate);
    criterion8();
    criterion9(scratch);
  } catch (const std::exception& e) {
    std::printf("FAIL acceptance aborted: %s\n", e.what());
    return 1;
  }
  std::printf("%d criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
