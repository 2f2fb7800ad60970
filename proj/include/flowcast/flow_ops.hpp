#pragma once

#include "flowcast/tape.hpp"

namespace flowcast {

struct ReversedFlow {
  Grid flow;   // H x W x 2
  Grid holes;  // H x W x 1, 1 where no source pixel landed
};

/// Converts a forward flow (pixel p moves to p + f(p)) into the backward
/// flow defined on the destination grid: each p splats -f(p) to p + f(p) and
/// the result is normalised by the splat weight. Pixels with accumulated
/// weight below 1e-6 are left at zero and flagged in `holes`.
ReversedFlow reverse_flow(const Grid& forward_flow);

inline constexpr double kSplatHoleWeight = 1e-6;

/// Forward-backward discrepancy
///   delta(p) = p - (p' + f_fwd(p')),   p' = p + f_back(p)
/// with f_fwd(p') bilinearly sampled. Differentiable in both flows.
NodeId fb_discrepancy(Tape& t, NodeId f_back, NodeId f_fwd);

// 1 where |dx| + |dy| > alpha, else 0. `delta` is a plain 2-channel grid.
Grid occlusion_mask(const Grid& delta, double alpha);

/// Fills masked pixels with an inverse-distance blend of the first valid
/// pixel found along each of the 8 compass rays. Pixels whose rays all miss
/// take the nearest valid pixel. Throws ShapeError when every pixel is
/// masked.
Grid inpaint_flow(const Grid& flow, const Grid& mask);

}  // namespace flowcast
