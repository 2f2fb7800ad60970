#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "flowcast/config.hpp"
#include "flowcast/metrics.hpp"

namespace flowcast {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;  // anything not covered below
inline constexpr int kExitConfig = 2;
inline constexpr int kExitIo = 3;
inline constexpr int kExitDivergence = 4;

struct RunResult {
  std::vector<Prediction> predictions;
  bool scored = false;  // ground truth was available
  MetricsReport metrics;
  std::vector<std::string> written;  // output files, in write order
};

/// Loads or generates the frames, predicts `horizon` frames and writes the
/// artefacts into cfg.output_dir:
///   pred_0001.png ...              predicted frames
///   flow_0001.png ...              colour-wheel flow (emit_flow)
///   trace_0001.csv ...             iter,total,img,cons per iteration (emit_trace)
///   metrics.txt, metrics.jsonl     when ground truth exists
///   run.cfg                        the resolved configuration
/// Throws ConfigError, IoError or PredictionDiverged.
RunResult execute(const RunConfig& cfg, std::ostream* log = nullptr);

// execute() with errors mapped to exit codes and reported on `err`.
int run(const RunConfig& cfg, std::ostream& err, std::ostream* log = nullptr);

// Exit code for the exception currently being handled.
int exit_code_for_current_exception(std::ostream& err);

}  // namespace flowcast
