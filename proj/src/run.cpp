#include "flowcast/run.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>

#include "flowcast/error.hpp"
#include "flowcast/image_io.hpp"

namespace flowcast {
namespace {

namespace fs = std::filesystem;

std::string numbered(const char* stem, int index, const char* ext) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%s_%04d.%s", stem, index, ext);
  return buf;
}

struct Inputs {
  Grid prev, curr;
  std::vector<Grid> truth;       // ground-truth frames for t+1.., may be empty
  std::vector<Grid> truth_flow;  // matching backward flows, scenes only
  double motion = 0.0;           // known per-frame displacement bound, scenes only
};

Inputs from_scene(const RunConfig& cfg) {
  SceneSpec spec = *cfg.scene;
  spec.frames = std::max(spec.frames, cfg.horizon + 2);
  Scene s = generate_scene(spec);
  Inputs in;
  in.prev = std::move(s.frames[0]);
  in.curr = std::move(s.frames[1]);
  for (int k = 1; k <= cfg.horizon; ++k) {
    in.truth.push_back(std::move(s.frames[1 + k]));
    in.truth_flow.push_back(std::move(s.backward_flows[k]));
  }
  in.motion = spec.max_displacement();
  return in;
}

Inputs from_files(const RunConfig& cfg) {
  std::vector<Grid> frames = load_frames(cfg.frames);
  const int n = static_cast<int>(frames.size());
  const bool hold = cfg.holdout && n >= cfg.horizon + 2;
  const int last_input = hold ? n - cfg.horizon - 1 : n - 1;
  Inputs in;
  in.prev = std::move(frames[last_input - 1]);
  in.curr = std::move(frames[last_input]);
  if (hold) {
    for (int k = last_input + 1; k < n; ++k) in.truth.push_back(std::move(frames[k]));
  }
  return in;
}

double max_magnitude(const Grid& flow) {
  double m = 0.0;
  for (int y = 0; y < flow.height(); ++y) {
    for (int x = 0; x < flow.width(); ++x) m = std::max(m, std::hypot(flow.at(y, x, 0), flow.at(y, x, 1)));
  }
  return m;
}

// Interior margin: ceil(displacement * horizon) + 2, capped so at least one
// pixel survives. Real footage has no known bound, so the largest predicted
// displacement stands in for it.
int derive_margin(const RunConfig& cfg, const Inputs& in, const std::vector<Prediction>& preds) {
  if (cfg.margin) return *cfg.margin;
  double motion = in.motion;
  if (!cfg.scene) {
    for (const auto& p : preds) motion = std::max(motion, max_magnitude(p.flow));
  }
  const int m = static_cast<int>(std::ceil(motion * cfg.horizon)) + 2;
  const int cap = (std::min(in.curr.height(), in.curr.width()) - 1) / 2;
  return std::min(m, cap);
}

void write_text_file(const fs::path& path, const std::string& text, RunResult& r) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  out.flush();
  if (!out) throw IoError(path.string() + ": write failed");
  r.written.push_back(path.string());
}

std::string trace_csv(const PredictionTrace& trace) {
  std::string s = "iter,total,img,cons\n";
  char buf[128];
  for (std::size_t i = 0; i < trace.records.size(); ++i) {
    const LossRecord& r = trace.records[i];
    std::snprintf(buf, sizeof buf, "%zu,%.10g,%.10g,%.10g\n", i, r.total, r.img, r.cons);
    s += buf;
  }
  return s;
}

}  // namespace

RunResult execute(const RunConfig& cfg, std::ostream* log) {
  cfg.validate();
  const Inputs in = cfg.scene ? from_scene(cfg) : from_files(cfg);

  std::error_code ec;
  const fs::path dir(cfg.output_dir);
  fs::create_directories(dir, ec);
  if (ec) throw IoError(cfg.output_dir + ": cannot create output directory (" + ec.message() + ")");

  RunResult r;
  // Predict frame by frame so a divergence still leaves the finished frames
  // and the failing frame's trace on disk.
  Grid older = in.prev, newer = in.curr;
  for (int k = 1; k <= cfg.horizon; ++k) {
    if (log) *log << "predicting t+" << k << " (" << cfg.predictor.optim.iterations << " iterations)\n";
    try {
      r.predictions.push_back(predict_next(older, newer, cfg.predictor));
    } catch (const PredictionDiverged& e) {
      if (cfg.emit_trace) write_text_file(dir / numbered("trace", k, "csv"), trace_csv(e.trace()), r);
      throw;
    }
    const Prediction& p = r.predictions.back();
    save_png((dir / numbered("pred", k, "png")).string(), p.frame);
    r.written.push_back((dir / numbered("pred", k, "png")).string());
    if (cfg.emit_trace) write_text_file(dir / numbered("trace", k, "csv"), trace_csv(p.trace), r);
    older = std::move(newer);
    newer = p.frame;
  }

  if (cfg.emit_flow) {
    double vis = 0.0;
    if (cfg.flow_vis_max) {
      vis = *cfg.flow_vis_max;
    } else {
      for (const auto& p : r.predictions) vis = std::max(vis, max_magnitude(p.flow));
      if (!(vis > 0.0)) vis = 1.0;
    }
    for (std::size_t k = 0; k < r.predictions.size(); ++k) {
      const std::string path = (dir / numbered("flow", static_cast<int>(k + 1), "png")).string();
      save_png(path, flow_to_color(r.predictions[k].flow, vis));
      r.written.push_back(path);
    }
  }

  if (!in.truth.empty()) {
    r.scored = true;
    r.metrics.margin = derive_margin(cfg, in, r.predictions);
    for (std::size_t k = 0; k < in.truth.size(); ++k) {
      const Grid* tf = k < in.truth_flow.size() ? &in.truth_flow[k] : nullptr;
      r.metrics.add(r.predictions[k].frame, in.truth[k], static_cast<int>(k + 1),
                    tf ? &r.predictions[k].flow : nullptr, tf);
    }
    std::ostringstream text, jsonl;
    r.metrics.write_text(text);
    r.metrics.write_jsonl(jsonl);
    write_text_file(dir / "metrics.txt", text.str(), r);
    write_text_file(dir / "metrics.jsonl", jsonl.str(), r);
  }
  write_text_file(dir / "run.cfg", to_config_text(cfg), r);
  return r;
}

int exit_code_for_current_exception(std::ostream& err) {
  try {
    throw;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const ShapeError& e) {
    err << "invalid input: " << e.what() << "\n";
    return kExitConfig;
  } catch (const IoError& e) {
    err << "io error: " << e.what() << "\n";
    return kExitIo;
  } catch (const PredictionDiverged& e) {
    err << "diverged: " << e.what() << "\n";
    return kExitDivergence;
  } catch (const DivergenceError& e) {
    err << "diverged: " << e.what() << "\n";
    return kExitDivergence;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
}

int run(const RunConfig& cfg, std::ostream& err, std::ostream* log) {
  try {
    execute(cfg, log);
    return kExitOk;
  } catch (...) {
    return exit_code_for_current_exception(err);
  }
}

}  // namespace flowcast
