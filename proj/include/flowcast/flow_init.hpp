#pragma once

#include <cstdint>
#include <string>

#include "flowcast/grid.hpp"
#include "flowcast/interp.hpp"

namespace flowcast {

enum class InitMode { Flow, Zero, Noise };

InitMode parse_init_mode(const std::string& s);  // "flow" | "zero" | "noise"
std::string to_string(InitMode m);

// Standard deviation, in pixels, of the Gaussian noise initialisation.
inline constexpr double kNoiseInitSigma = 1.0;

/// Flow from `a` to `b` (a(p) ~ b(p + flow(p))) estimated without a tape.
Grid estimate_flow(const Grid& a, const Grid& b, const BackendConfig& cfg = {});

/// Initial backward flow for the frame after `x_curr`: the observed motion
/// x_curr -> x_prev is negated to approximate the next step, reversed onto
/// the next frame's grid, and its splat holes are inpainted.
/// Zero and Noise modes ignore the frames (apart from their size).
Grid init_prediction_flow(const Grid& x_prev, const Grid& x_curr, const BackendConfig& cfg = {},
                          InitMode mode = InitMode::Flow, std::uint64_t seed = 0);

}  // namespace flowcast
