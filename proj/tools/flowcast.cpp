// Command-line front end: predict, synth, gradcheck, metrics.

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <optional>
#include <sstream>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "flowcast/config.hpp"
#include "flowcast/error.hpp"
#include "flowcast/gradcheck.hpp"
#include "flowcast/image_io.hpp"
#include "flowcast/metrics.hpp"
#include "flowcast/run.hpp"

namespace fc = flowcast;

namespace {

// Options shared by predict and synth. Unset optionals leave the config
// file's value alone.
struct RunFlags {
  std::string config;
  std::vector<std::string> sets;
  std::string batch;
  std::optional<std::string> out;
  std::optional<int> horizon;
  std::optional<int> iterations;
  std::optional<std::string> init;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> scene;
  std::vector<std::string> frames;
  bool emit_flow = false;
  bool emit_trace = false;
  bool quiet = false;
};

void add_run_flags(CLI::App* app, RunFlags& f, bool frames) {
  app->add_option("-c,--config", f.config, "key = value config file");
  app->add_option("--set", f.sets, "override one config key, key=value (repeatable)");
  app->add_option("-o,--out", f.out, "output directory");
  app->add_option("--horizon", f.horizon, "number of future frames");
  app->add_option("--iterations", f.iterations, "optimisation steps per frame");
  app->add_option("--init", f.init, "flow | zero | noise");
  app->add_option("--seed", f.seed, "seed for noise initialisation");
  app->add_flag("--emit-flow", f.emit_flow, "write flow_NNNN.png colour-wheel images");
  app->add_flag("--emit-trace", f.emit_trace, "write trace_NNNN.csv loss traces");
  app->add_flag("-q,--quiet", f.quiet, "no progress messages");
  app->add_option("--batch", f.batch,
                  "file listing one config file per line; runs them in parallel");
  if (frames) {
    app->add_option("frames", f.frames, "input frames, oldest first (PNG or PPM)");
  } else {
    app->add_option("--scene", f.scene, "translate | rotate | parallax | static");
  }
}

// Config file first, then --set, then the named flags.
fc::RunConfig resolve(const std::string& config_path, const RunFlags& f) {
  fc::RunConfig cfg = config_path.empty() ? fc::RunConfig{} : fc::load_run_config(config_path);
  for (const auto& s : f.sets) {
    const auto [k, v] = fc::split_assignment(s);
    cfg.set(k, v);
  }
  if (!f.frames.empty()) cfg.frames = f.frames;
  if (f.scene) cfg.set("scene", *f.scene);
  if (f.out) cfg.output_dir = *f.out;
  if (f.horizon) cfg.horizon = *f.horizon;
  if (f.iterations) cfg.predictor.optim.iterations = *f.iterations;
  if (f.init) cfg.set("init", *f.init);
  if (f.seed) cfg.predictor.seed = *f.seed;
  if (f.emit_flow) cfg.emit_flow = true;
  if (f.emit_trace) cfg.emit_trace = true;
  return cfg;
}

int worker_count() {
  if (const char* env = std::getenv("FLOWCAST_THREADS")) {
    const int n = std::atoi(env);
    if (n >= 1) return n;
    std::cerr << "ignoring FLOWCAST_THREADS=" << env << " (need a positive integer)\n";
  }
  return static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
}

int run_one(const std::string& config_path, const RunFlags& f, bool synth, std::ostream& err) {
  try {
    fc::RunConfig cfg = resolve(config_path, f);
    if (synth && !cfg.scene) cfg.set("scene", "translate");
    if (synth && !cfg.frames.empty()) throw fc::ConfigError("synth takes a scene, not input frames");
    if (!synth && cfg.scene) throw fc::ConfigError("predict takes input frames; use synth for scenes");
    const fc::RunResult r = fc::execute(cfg, f.quiet ? nullptr : &std::cerr);
    if (r.scored && !f.quiet) r.metrics.write_text(std::cout);
    return fc::kExitOk;
  } catch (...) {
    return fc::exit_code_for_current_exception(err);
  }
}

int run_batch(const RunFlags& f, bool synth) {
  std::ifstream list(f.batch);
  if (!list) {
    std::cerr << "io error: " << f.batch << ": cannot open batch list\n";
    return fc::kExitIo;
  }
  std::vector<std::string> configs;
  for (std::string line; std::getline(list, line);) {
    line.erase(0, line.find_first_not_of(" \t"));
    line.erase(line.find_last_not_of(" \t\r") + 1);
    if (!line.empty() && line[0] != '#') configs.push_back(line);
  }
  std::vector<int> codes(configs.size(), fc::kExitOk);
  std::vector<std::string> errors(configs.size());
  std::atomic<std::size_t> next{0};
  RunFlags quiet = f;
  quiet.quiet = true;
  const int workers = std::min<int>(worker_count(), static_cast<int>(configs.size()));
  {
    std::vector<std::jthread> pool;
    for (int w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i; (i = next++) < configs.size();) {
          std::ostringstream err;
          codes[i] = run_one(configs[i], quiet, synth, err);
          errors[i] = err.str();
        }
      });
    }
  }
  int status = fc::kExitOk;
  for (std::size_t i = 0; i < configs.size(); ++i) {
    std::cout << configs[i] << ": exit " << codes[i] << "\n";
    if (!errors[i].empty()) std::cerr << configs[i] << ": " << errors[i];
    if (status == fc::kExitOk) status = codes[i];
  }
  return status;
}

int gradcheck(std::uint64_t seed, int size) {
  fc::GradCheckOptions opts;
  opts.seed = seed;
  opts.size = size;
  bool ok = true;
  for (const auto& r : fc::run_gradcheck_suite(opts)) {
    std::printf("%-28s max_rel_err %.3e  tol %.0e  %s\n", r.name.c_str(), r.max_rel_error,
                r.tolerance, r.passed() ? "ok" : "FAIL");
    ok = ok && r.passed();
  }
  return ok ? fc::kExitOk : fc::kExitFailure;
}

int metrics(const std::vector<std::string>& pred, const std::vector<std::string>& truth,
            int margin, const std::string& out) {
  try {
    if (pred.empty() || pred.size() != truth.size()) {
      throw fc::ConfigError("--pred and --truth need the same, non-zero number of images");
    }
    fc::MetricsReport report;
    report.margin = margin;
    for (std::size_t i = 0; i < pred.size(); ++i) {
      const fc::Grid a = fc::load_image(pred[i]);
      const fc::Grid b = fc::load_image(truth[i]);
      if (!a.shape().same_plane(b.shape())) {
        throw fc::IoError("dimension mismatch: " + pred[i] + " vs " + truth[i]);
      }
      report.add(a, b, static_cast<int>(i + 1));
    }
    report.write_text(std::cout);
    if (!out.empty()) {
      std::filesystem::create_directories(out);
      std::ofstream text(out + "/metrics.txt"), jsonl(out + "/metrics.jsonl");
      report.write_text(text);
      report.write_jsonl(jsonl);
      if (!text || !jsonl) throw fc::IoError(out + ": cannot write metrics");
    }
    return fc::kExitOk;
  } catch (...) {
    return fc::exit_code_for_current_exception(std::cerr);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Future-frame prediction by test-time flow optimisation"};
  app.require_subcommand(1);

  RunFlags predict_flags, synth_flags;
  auto* predict = app.add_subcommand("predict", "predict future frames from input images");
  add_run_flags(predict, predict_flags, true);
  auto* synth = app.add_subcommand("synth", "run on a synthetic scene and score against its oracle");
  add_run_flags(synth, synth_flags, false);

  std::uint64_t gc_seed = 2024;
  int gc_size = 8;
  auto* gc = app.add_subcommand("gradcheck", "compare every gradient with finite differences");
  gc->add_option("--seed", gc_seed, "input seed");
  gc->add_option("--size", gc_size, "side length of the core-op inputs")->check(CLI::Range(4, 32));

  std::vector<std::string> pred, truth;
  int margin = 0;
  std::string metrics_out;
  auto* mt = app.add_subcommand("metrics", "score predicted images against ground truth");
  mt->add_option("--pred", pred, "predicted images")->required();
  mt->add_option("--truth", truth, "ground-truth images, same order")->required();
  mt->add_option("--margin", margin, "ignore this many border pixels")->check(CLI::NonNegativeNumber);
  mt->add_option("-o,--out", metrics_out, "also write metrics.txt and metrics.jsonl here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return fc::kExitConfig;
  }

  if (*predict) {
    const RunFlags& f = predict_flags;
    return f.batch.empty() ? run_one(f.config, f, false, std::cerr) : run_batch(f, false);
  }
  if (*synth) {
    const RunFlags& f = synth_flags;
    return f.batch.empty() ? run_one(f.config, f, true, std::cerr) : run_batch(f, true);
  }
  if (*gc) return gradcheck(gc_seed, gc_size);
  return metrics(pred, truth, margin, metrics_out);
}
