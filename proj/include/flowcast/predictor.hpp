#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "flowcast/flow_init.hpp"
#include "flowcast/interp.hpp"
#include "flowcast/tape.hpp"

namespace flowcast {

enum class LossVariant {
  ImgL1,        // mean |I_next - x_curr|
  ImgMse,       // mean (I_next - x_curr)^2
  InterpTarget  // mean |I_mid - x_curr|, I_mid the blended midpoint
};

enum class InpaintCadence { PerIteration, FinalOnly, Off };

LossVariant parse_loss_variant(const std::string& s);  // img_l1|img_mse|interp_target
std::string to_string(LossVariant v);
InpaintCadence parse_inpaint_cadence(const std::string& s);  // per_iteration|final_only|off
std::string to_string(InpaintCadence c);

struct OptimConfig {
  double w_img = 1.0;
  double w_cons = 3.0;
  double alpha = 1.5;  // occlusion threshold on |delta|_1, pixels
  double lr = 0.1;
  int iterations = 3000;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  LossVariant loss_variant = LossVariant::ImgL1;
  InpaintCadence inpaint_cadence = InpaintCadence::PerIteration;
  // Stop once the total loss changed by less than 1e-5 (relative) over the
  // last 200 iterations.
  bool early_stop = false;

  void validate() const;  // throws ConfigError
};

struct PredictorConfig {
  OptimConfig optim;
  BackendConfig backend;
  std::string backend_name = "classical";
  InitMode init = InitMode::Flow;
  std::uint64_t seed = 0;  // noise initialisation only

  void validate() const;
};

struct AdamState {
  Grid m;
  Grid v;
  long step = 0;
};

struct LossRecord {
  double total = 0.0;
  double img = 0.0;
  double cons = 0.0;
};

struct PredictionTrace {
  std::vector<LossRecord> records;  // one per iteration, loss before that step
};

struct LossNodes {
  NodeId total;
  NodeId img;
  NodeId cons;
  NodeId discrepancy;  // delta of the consistency term, 2 channels
};

/// Builds the full objective on `t` for the candidate backward flow `flow`
/// (a node on the same tape): the candidate frame is x_curr warped by
/// `flow`, the backend interpolates between x_prev and it, and
///   total = w_img * L_img + w_cons * L_cons
/// with L_img comparing the backend's warp towards x_curr and L_cons the
/// mean absolute forward-backward discrepancy.
LossNodes total_loss(Tape& t, const InterpolationBackend& backend, const Grid& x_prev,
                     const Grid& x_curr, NodeId flow, const OptimConfig& cfg);

// Bias-corrected Adam update, in place. Throws DivergenceError on a
// non-finite gradient.
void adam_step(Grid& flow, const Grid& grad, AdamState& state, const OptimConfig& cfg);

struct Prediction {
  Grid frame;  // clamped to [0,1]
  Grid flow;   // optimised backward flow next -> current
  PredictionTrace trace;
  LossRecord final_loss;  // objective at the returned flow, after the last step
};

// Thrown when the loss becomes non-finite; carries the iterations done so far.
class PredictionDiverged : public std::runtime_error {
 public:
  PredictionDiverged(const std::string& what, PredictionTrace trace)
      : std::runtime_error(what), trace_(std::move(trace)) {}
  const PredictionTrace& trace() const { return trace_; }

 private:
  PredictionTrace trace_;
};

Prediction predict_next(const Grid& x_prev, const Grid& x_curr, const PredictorConfig& cfg);

// Recurrent rollout: each prediction becomes the newest input frame.
std::vector<Prediction> predict_sequence(const Grid& x_prev, const Grid& x_curr, int horizon,
                                         const PredictorConfig& cfg);

}  // namespace flowcast
