#pragma once

#include <cstdint>
#include <functional>
#include <initializer_list>
#include <vector>

#include "flowcast/grid.hpp"

namespace flowcast {

struct NodeId {
  std::uint32_t index = 0;
  friend bool operator==(NodeId, NodeId) = default;
};

class Tape;

// Handed to each node's backward rule. Parents' accumulators are created on
// first access, so rules only pay for the parents they actually touch.
class BackwardContext {
 public:
  const Grid& out_grad() const { return *out_grad_; }
  const Grid& out_value() const;
  const Grid& value(NodeId id) const;
  bool needs_grad(NodeId id) const;
  Grid& grad(NodeId id);

 private:
  friend class Tape;
  BackwardContext(Tape& tape, NodeId self, const Grid& g) : tape_(&tape), self_(self), out_grad_(&g) {}
  Tape* tape_;
  NodeId self_;
  const Grid* out_grad_;
};

/// Reverse-mode record of grid operations.
///
/// Nodes are appended in evaluation order, so the vector order is a valid
/// topological order and backward() is a single reverse sweep. Forward values
/// are owned by the tape. A tape is meant to be built, differentiated once and
/// dropped; the optimizer builds a fresh one per iteration.
class Tape {
 public:
  using BackwardFn = std::function<void(BackwardContext&)>;

  Tape() { nodes_.reserve(256); }

  // Leaf that does not receive gradients.
  NodeId constant(Grid value);
  // Leaf whose gradient is tracked.
  NodeId variable(Grid value);

  // Appends an op node. `fn` is dropped when no parent needs a gradient.
  NodeId record(Grid value, std::initializer_list<NodeId> parents, BackwardFn fn);
  NodeId record(Grid value, const std::vector<NodeId>& parents, BackwardFn fn);

  const Grid& value(NodeId id) const { return node(id).value; }
  const Shape& shape(NodeId id) const { return node(id).value.shape(); }
  bool requires_grad(NodeId id) const { return node(id).requires_grad; }
  std::size_t size() const { return nodes_.size(); }

  // Seeds d(root)/d(root) = 1 and sweeps in reverse. Root must be 1x1x1.
  void backward(NodeId root);

  // Gradient of the last backward() root w.r.t. `id`; zeros when `id` was not
  // reached.
  const Grid& grad(NodeId id);

 private:
  friend class BackwardContext;

  struct Node {
    Grid value;
    std::vector<NodeId> parents;
    BackwardFn backward;
    bool requires_grad = false;
    bool has_grad = false;
    Grid grad;
  };

  const Node& node(NodeId id) const;
  Node& node(NodeId id);
  Grid& accumulator(NodeId id);

  std::vector<Node> nodes_;
};

}  // namespace flowcast
