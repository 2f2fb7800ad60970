#pragma once

#include "flowcast/tape.hpp"

namespace flowcast {

/// Bilinear backward warp: out(p) = src sampled at p + flow(p).
///
/// `flow` is H x W x 2 (dx, dy in pixels, +x right, +y down); `src` is
/// H x W x C with any C. Sample coordinates outside the frame are clamped to
/// the edge, and the flow gradient is zero along an axis that was clamped.
/// Differentiable w.r.t. both inputs.
NodeId backward_warp(Tape& t, NodeId src, NodeId flow);

/// Confidence that backward_warp's sample at p + flow(p) is real data: 1
/// inside the frame, fading smoothly to 0 at one pixel beyond the edge, per
/// axis and multiplied. H x W x 1 and continuously differentiable in the
/// flow, unlike a hard inside/outside mask.
NodeId in_frame_weight(Tape& t, NodeId flow);

// Tape-free convenience for callers that only need the value.
Grid backward_warp(const Grid& src, const Grid& flow);

struct SplatResult {
  Grid values;   // H x W x C accumulated weight * value
  Grid weights;  // H x W x 1 accumulated bilinear weight
};

// Scatters values(p) to the four bilinear neighbours of p + flow(p).
// Contributions that land outside the frame are dropped. Not differentiable.
SplatResult forward_splat(const Grid& values, const Grid& flow);

}  // namespace flowcast
