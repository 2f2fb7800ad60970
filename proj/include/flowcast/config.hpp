#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "flowcast/predictor.hpp"
#include "flowcast/scene.hpp"

namespace flowcast {

/// Everything one run needs. Built from a flat `key = value` file, then
/// individual keys are overridden from the command line.
struct RunConfig {
  std::vector<std::string> frames;  // input image paths, oldest first
  std::optional<SceneSpec> scene;   // synthetic input instead of frames
  int horizon = 1;
  PredictorConfig predictor;
  std::string output_dir = "out";
  bool emit_flow = false;
  bool emit_trace = false;
  std::optional<int> margin;           // metric interior margin; derived when unset
  std::optional<double> flow_vis_max;  // colour-wheel saturation radius; derived when unset
  // With enough input frames, the trailing `horizon` frames are held out as
  // ground truth and the two frames before them are the inputs. Off: the
  // last two frames are the inputs and nothing is scored.
  bool holdout = true;

  /// Sets one key from its textual value. Unknown keys and malformed values
  /// throw ConfigError.
  void set(const std::string& key, const std::string& value);
  void validate() const;  // throws ConfigError
};

// All keys accepted by RunConfig::set, in the order to_config_text writes them.
const std::vector<std::string>& config_keys();

/// Applies `key = value` lines. Blank lines and lines starting with '#' are
/// skipped. `source` names the input in error messages.
void apply_config_text(RunConfig& cfg, std::istream& in, const std::string& source);

// Reads a config file onto a default RunConfig. Throws IoError if unreadable.
RunConfig load_run_config(const std::string& path);

// Canonical text of every key; parsing it back gives an equal configuration.
std::string to_config_text(const RunConfig& cfg);

// Splits "key=value" (as given to --set).
std::pair<std::string, std::string> split_assignment(const std::string& text);

}  // namespace flowcast
