#include "flowcast/config.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "flowcast/error.hpp"

namespace flowcast {
namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return "";
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value, const char* want) {
  throw ConfigError("invalid value '" + value + "' for " + key + " (expected " + want + ")");
}

template <typename T>
T parse_number(const std::string& key, const std::string& value, const char* want) {
  T out{};
  const char* end = value.data() + value.size();
  const auto [ptr, ec] = std::from_chars(value.data(), end, out);
  if (ec != std::errc() || ptr != end) bad_value(key, value, want);
  return out;
}

int parse_int(const std::string& key, const std::string& v) {
  return parse_number<int>(key, v, "an integer");
}

double parse_double(const std::string& key, const std::string& v) {
  return parse_number<double>(key, v, "a number");
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  bad_value(key, v, "true or false");
}

std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::array<double, 2> parse_pair(const std::string& key, const std::string& v) {
  const auto parts = split_list(v);
  if (parts.size() != 2) bad_value(key, v, "two comma-separated numbers");
  return {parse_double(key, parts[0]), parse_double(key, parts[1])};
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string fmt(bool v) { return v ? "true" : "false"; }

SceneSpec& scene_of(RunConfig& cfg) {
  if (!cfg.scene) cfg.scene = SceneSpec{};
  return *cfg.scene;
}

}  // namespace

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = {
      "frames",        "scene",          "scene_height", "scene_width",    "scene_channels",
      "scene_seed",    "scene_frames",   "velocity",     "angular_rate",   "fg_velocity",
      "fg_radius",     "horizon",        "w_img",        "w_cons",         "alpha",
      "lr",            "iterations",     "beta1",        "beta2",          "eps",
      "loss_variant",  "inpaint",        "early_stop",   "backend",        "pyramid_levels",
      "hs_iterations", "hs_lambda",      "differentiable_flow",            "init",
      "seed",          "output_dir",     "emit_flow",    "emit_trace",     "margin",
      "flow_vis_max",  "holdout"};
  return keys;
}

void RunConfig::set(const std::string& key_in, const std::string& value_in) {
  const std::string key = trim(key_in);
  const std::string v = trim(value_in);
  OptimConfig& o = predictor.optim;
  BackendConfig& b = predictor.backend;

  if (key == "frames") {
    frames = split_list(v);
  } else if (key == "scene") {
    if (v == "none") {
      scene.reset();
    } else {
      scene_of(*this).kind = parse_scene_kind(v);
    }
  } else if (key == "scene_height") {
    scene_of(*this).height = parse_int(key, v);
  } else if (key == "scene_width") {
    scene_of(*this).width = parse_int(key, v);
  } else if (key == "scene_channels") {
    scene_of(*this).channels = parse_int(key, v);
  } else if (key == "scene_seed") {
    scene_of(*this).seed = parse_number<std::uint64_t>(key, v, "a non-negative integer");
  } else if (key == "scene_frames") {
    scene_of(*this).frames = parse_int(key, v);
  } else if (key == "velocity") {
    scene_of(*this).velocity = parse_pair(key, v);
  } else if (key == "angular_rate") {
    scene_of(*this).angular_rate_deg = parse_double(key, v);
  } else if (key == "fg_velocity") {
    scene_of(*this).fg_velocity = parse_pair(key, v);
  } else if (key == "fg_radius") {
    scene_of(*this).fg_radius = parse_double(key, v);
  } else if (key == "horizon") {
    horizon = parse_int(key, v);
  } else if (key == "w_img") {
    o.w_img = parse_double(key, v);
  } else if (key == "w_cons") {
    o.w_cons = parse_double(key, v);
  } else if (key == "alpha") {
    o.alpha = parse_double(key, v);
  } else if (key == "lr") {
    o.lr = parse_double(key, v);
  } else if (key == "iterations") {
    o.iterations = parse_int(key, v);
  } else if (key == "beta1") {
    o.beta1 = parse_double(key, v);
  } else if (key == "beta2") {
    o.beta2 = parse_double(key, v);
  } else if (key == "eps") {
    o.eps = parse_double(key, v);
  } else if (key == "loss_variant") {
    o.loss_variant = parse_loss_variant(v);
  } else if (key == "inpaint") {
    o.inpaint_cadence = parse_inpaint_cadence(v);
  } else if (key == "early_stop") {
    o.early_stop = parse_bool(key, v);
  } else if (key == "backend") {
    if (v.empty()) bad_value(key, v, "a backend name");
    predictor.backend_name = v;
  } else if (key == "pyramid_levels") {
    b.pyramid_levels = parse_int(key, v);
  } else if (key == "hs_iterations") {
    b.hs_iterations = parse_int(key, v);
  } else if (key == "hs_lambda") {
    b.hs_lambda = parse_double(key, v);
  } else if (key == "differentiable_flow") {
    b.differentiable_flow = parse_bool(key, v);
  } else if (key == "init") {
    predictor.init = parse_init_mode(v);
  } else if (key == "seed") {
    predictor.seed = parse_number<std::uint64_t>(key, v, "a non-negative integer");
  } else if (key == "output_dir") {
    if (v.empty()) bad_value(key, v, "a directory");
    output_dir = v;
  } else if (key == "emit_flow") {
    emit_flow = parse_bool(key, v);
  } else if (key == "emit_trace") {
    emit_trace = parse_bool(key, v);
  } else if (key == "margin") {
    if (v == "auto") {
      margin.reset();
    } else {
      margin = parse_int(key, v);
    }
  } else if (key == "flow_vis_max") {
    if (v == "auto") {
      flow_vis_max.reset();
    } else {
      flow_vis_max = parse_double(key, v);
    }
  } else if (key == "holdout") {
    if (v == "auto") {
      holdout = true;
    } else if (v == "off") {
      holdout = false;
    } else {
      bad_value(key, v, "auto or off");
    }
  } else {
    throw ConfigError("unknown config key '" + key + "'");
  }
}

void RunConfig::validate() const {
  if (frames.empty() == !scene.has_value()) {
    throw ConfigError("give exactly one of: input frames, or a synthetic scene");
  }
  if (!frames.empty() && frames.size() < 2) throw ConfigError("need at least two input frames");
  if (horizon < 1) throw ConfigError("horizon must be >= 1");
  if (scene) scene->validate();
  predictor.validate();
  if (margin && *margin < 0) throw ConfigError("margin must be >= 0");
  if (flow_vis_max && !(*flow_vis_max > 0.0)) throw ConfigError("flow_vis_max must be > 0");
}

void apply_config_text(RunConfig& cfg, std::istream& in, const std::string& source) {
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string s = trim(line);
    if (s.empty() || s[0] == '#') continue;
    const auto eq = s.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(source + ":" + std::to_string(lineno) + ": expected key = value");
    }
    try {
      cfg.set(s.substr(0, eq), s.substr(eq + 1));
    } catch (const ConfigError& e) {
      throw ConfigError(source + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError(path + ": cannot open config file");
  RunConfig cfg;
  apply_config_text(cfg, in, path);
  return cfg;
}

std::string to_config_text(const RunConfig& c) {
  const OptimConfig& o = c.predictor.optim;
  const BackendConfig& b = c.predictor.backend;
  std::ostringstream os;
  auto kv = [&os](const std::string& k, const std::string& v) { os << k << " = " << v << "\n"; };

  std::string frames;
  for (std::size_t i = 0; i < c.frames.size(); ++i) frames += (i ? "," : "") + c.frames[i];
  if (!c.frames.empty()) kv("frames", frames);
  if (c.scene) {
    const SceneSpec& s = *c.scene;
    kv("scene", to_string(s.kind));
    kv("scene_height", std::to_string(s.height));
    kv("scene_width", std::to_string(s.width));
    kv("scene_channels", std::to_string(s.channels));
    kv("scene_seed", std::to_string(s.seed));
    kv("scene_frames", std::to_string(s.frames));
    kv("velocity", fmt(s.velocity[0]) + "," + fmt(s.velocity[1]));
    kv("angular_rate", fmt(s.angular_rate_deg));
    kv("fg_velocity", fmt(s.fg_velocity[0]) + "," + fmt(s.fg_velocity[1]));
    kv("fg_radius", fmt(s.fg_radius));
  }
  kv("horizon", std::to_string(c.horizon));
  kv("w_img", fmt(o.w_img));
  kv("w_cons", fmt(o.w_cons));
  kv("alpha", fmt(o.alpha));
  kv("lr", fmt(o.lr));
  kv("iterations", std::to_string(o.iterations));
  kv("beta1", fmt(o.beta1));
  kv("beta2", fmt(o.beta2));
  kv("eps", fmt(o.eps));
  kv("loss_variant", to_string(o.loss_variant));
  kv("inpaint", to_string(o.inpaint_cadence));
  kv("early_stop", fmt(o.early_stop));
  kv("backend", c.predictor.backend_name);
  kv("pyramid_levels", std::to_string(b.pyramid_levels));
  kv("hs_iterations", std::to_string(b.hs_iterations));
  kv("hs_lambda", fmt(b.hs_lambda));
  kv("differentiable_flow", fmt(b.differentiable_flow));
  kv("init", to_string(c.predictor.init));
  kv("seed", std::to_string(c.predictor.seed));
  kv("output_dir", c.output_dir);
  kv("emit_flow", fmt(c.emit_flow));
  kv("emit_trace", fmt(c.emit_trace));
  kv("margin", c.margin ? std::to_string(*c.margin) : "auto");
  kv("flow_vis_max", c.flow_vis_max ? fmt(*c.flow_vis_max) : "auto");
  kv("holdout", c.holdout ? "auto" : "off");
  return os.str();
}

std::pair<std::string, std::string> split_assignment(const std::string& text) {
  const auto eq = text.find('=');
  if (eq == std::string::npos || trim(text.substr(0, eq)).empty()) {
    throw ConfigError("expected key=value, got '" + text + "'");
  }
  return {trim(text.substr(0, eq)), trim(text.substr(eq + 1))};
}

}  // namespace flowcast
