#pragma once

#include <array>
#include <vector>

#include "flowcast/tape.hpp"

// Differentiable grid operations. Every function records one node on the
// tape and returns its id. Shape mismatches throw ShapeError.
namespace flowcast::ops {

enum class Binary { Add, Sub, Mul, Div };
enum class Unary { Abs, Square, Sigmoid, Neg };

NodeId elementwise(Tape& t, Binary op, NodeId a, NodeId b);
NodeId elementwise(Tape& t, Binary op, NodeId a, double b);
NodeId elementwise(Tape& t, Unary op, NodeId a);

inline NodeId add(Tape& t, NodeId a, NodeId b) { return elementwise(t, Binary::Add, a, b); }
inline NodeId sub(Tape& t, NodeId a, NodeId b) { return elementwise(t, Binary::Sub, a, b); }
inline NodeId mul(Tape& t, NodeId a, NodeId b) { return elementwise(t, Binary::Mul, a, b); }
inline NodeId div(Tape& t, NodeId a, NodeId b) { return elementwise(t, Binary::Div, a, b); }
inline NodeId add(Tape& t, NodeId a, double b) { return elementwise(t, Binary::Add, a, b); }
inline NodeId scale(Tape& t, NodeId a, double b) { return elementwise(t, Binary::Mul, a, b); }
inline NodeId abs(Tape& t, NodeId a) { return elementwise(t, Unary::Abs, a); }
inline NodeId square(Tape& t, NodeId a) { return elementwise(t, Unary::Square, a); }
inline NodeId sigmoid(Tape& t, NodeId a) { return elementwise(t, Unary::Sigmoid, a); }
inline NodeId neg(Tape& t, NodeId a) { return elementwise(t, Unary::Neg, a); }

// Reductions to a 1x1x1 node. All reject empty inputs.
NodeId reduce_mean_l1(Tape& t, NodeId a);   // mean |a_i|
NodeId reduce_mean_sq(Tape& t, NodeId a);   // mean a_i^2
NodeId reduce_sum(Tape& t, NodeId a);
// sum_i a_i * w_i with a fixed weight grid; handy for projecting a grid
// output onto a scalar in gradient checks.
NodeId reduce_dot(Tape& t, NodeId a, const Grid& weights);

// Channel plumbing.
NodeId select_channels(Tape& t, NodeId a, int first, int count);
NodeId concat_channels(Tape& t, const std::vector<NodeId>& parts);
// sum_c w_c * a[..., c] -> 1 channel
NodeId weighted_channel_sum(Tape& t, NodeId a, const std::vector<double>& weights);
// 1-channel a repeated to `channels` channels.
NodeId expand_channels(Tape& t, NodeId a, int channels);

// Spatial stencils; all clamp reads at the frame edge.
// Central differences per channel: output has 2*C channels laid out as
// (dx_0, dy_0, dx_1, dy_1, ...).
NodeId spatial_gradient(Tape& t, NodeId a);
// Weighted 8-neighbour average (1/6 edge neighbours, 1/12 diagonals),
// centre excluded.
NodeId neighbor_average(Tape& t, NodeId a);
// 2x2 box average; odd sizes round up and replicate the last row/column.
NodeId downsample2(Tape& t, NodeId a);
// Bilinear resize to (height, width) with every value multiplied by `gain`
// (2 when upsampling a flow field one pyramid level).
NodeId resize_bilinear(Tape& t, NodeId a, int height, int width, double gain);

// One Jacobi step of the linearised brightness-constancy / smoothness
// system, evaluated pointwise:
//   r   = sample[0] - reference
//   g   = (sample[1], sample[2])
//   num = r + g . (avg - flow)
//   out = avg - g * num / (lambda + |g|^2)
// `sample` is the target image and its gradient warped by `flow`.
NodeId smoothness_step(Tape& t, NodeId flow, NodeId avg, NodeId sample, NodeId reference,
                       double lambda);

}  // namespace flowcast::ops
