#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "flowcast/tape.hpp"

namespace flowcast {

// Target re-warps per pyramid level in the flow estimator.
inline constexpr int kWarpsPerLevel = 4;

struct BackendConfig {
  int pyramid_levels = 4;
  int hs_iterations = 20;  // per pyramid level, split over kWarpsPerLevel warps
  // Smoothness weight of the flow estimator. The data term works on luma in
  // percent of full scale, so this is in percent^2.
  double hs_lambda = 15.0;
  // When false the flow estimate is a constant on the tape and gradients only
  // reach the frames through the warps.
  bool differentiable_flow = true;

  void validate() const;  // throws ConfigError
};

/// Outputs of an interpolation module for the midpoint between two frames.
/// All three are nodes on the caller's tape and share the frames' H x W.
struct InterpOutput {
  NodeId f_back;  // midpoint -> previous frame, 2 channels
  NodeId f_fwd;   // midpoint -> next frame, 2 channels
  NodeId blend;   // weight of the previous-frame warp, 1 channel in [0,1]
};

struct Midpoint {
  NodeId from_prev;  // x_prev warped by f_back
  NodeId from_next;  // x_next warped by f_fwd
  NodeId blended;    // blend * from_prev + (1 - blend) * from_next
};

// Frozen frame-interpolation module. Implementations must not change state
// in interpolate(); the optimizer calls it thousands of times.
class InterpolationBackend {
 public:
  virtual ~InterpolationBackend() = default;
  virtual std::string name() const = 0;
  virtual InterpOutput interpolate(Tape& t, NodeId x_prev, NodeId x_next) const = 0;
};

/// Built-in backend: coarse-to-fine smoothness-regularised flow between the
/// two frames, split linearly into the two midpoint flows, plus a sigmoid
/// blend of the two one-sided warp errors.
class ClassicalBackend final : public InterpolationBackend {
 public:
  explicit ClassicalBackend(BackendConfig cfg);
  std::string name() const override { return "classical"; }
  InterpOutput interpolate(Tape& t, NodeId x_prev, NodeId x_next) const override;
  const BackendConfig& config() const { return cfg_; }

  static constexpr double kBlendSharpness = 10.0;

 private:
  BackendConfig cfg_;
};

using BackendFactory =
    std::function<std::unique_ptr<InterpolationBackend>(const BackendConfig&)>;

// Name -> factory registry; "classical" is always present.
void register_backend(const std::string& name, BackendFactory factory);
std::unique_ptr<InterpolationBackend> make_backend(const std::string& name,
                                                   const BackendConfig& cfg);
std::vector<std::string> backend_names();

// Shorthand for ClassicalBackend(cfg).interpolate(...).
InterpOutput interpolate(Tape& t, NodeId x_prev, NodeId x_next, const BackendConfig& cfg);

Midpoint blend_midpoint(Tape& t, const InterpOutput& out, NodeId x_prev, NodeId x_next);

/// Coarse-to-fine flow from `a` to `b` with backward-sampling semantics:
/// a(p) ~ b(p + flow(p)). Recorded on the tape, differentiable w.r.t. both
/// frames. Frames are H x W x C with C = 1 or 3 (RGB is reduced to luma).
NodeId estimate_flow_node(Tape& t, NodeId a, NodeId b, const BackendConfig& cfg);

// Number of pyramid levels actually used for an H x W frame.
int effective_levels(int height, int width, int requested);

}  // namespace flowcast
