#include "flowcast/tape.hpp"

#include <string>

#include "flowcast/error.hpp"

namespace flowcast {

const Grid& BackwardContext::out_value() const { return tape_->value(self_); }
const Grid& BackwardContext::value(NodeId id) const { return tape_->value(id); }
bool BackwardContext::needs_grad(NodeId id) const { return tape_->requires_grad(id); }
Grid& BackwardContext::grad(NodeId id) { return tape_->accumulator(id); }

const Tape::Node& Tape::node(NodeId id) const {
  if (id.index >= nodes_.size()) {
    throw std::out_of_range("node id " + std::to_string(id.index) + " not on this tape");
  }
  return nodes_[id.index];
}

Tape::Node& Tape::node(NodeId id) {
  if (id.index >= nodes_.size()) {
    throw std::out_of_range("node id " + std::to_string(id.index) + " not on this tape");
  }
  return nodes_[id.index];
}

NodeId Tape::constant(Grid value) {
  Node n;
  n.value = std::move(value);
  nodes_.push_back(std::move(n));
  return NodeId{static_cast<std::uint32_t>(nodes_.size() - 1)};
}

NodeId Tape::variable(Grid value) {
  Node n;
  n.value = std::move(value);
  n.requires_grad = true;
  nodes_.push_back(std::move(n));
  return NodeId{static_cast<std::uint32_t>(nodes_.size() - 1)};
}

NodeId Tape::record(Grid value, std::initializer_list<NodeId> parents, BackwardFn fn) {
  return record(std::move(value), std::vector<NodeId>(parents), std::move(fn));
}

NodeId Tape::record(Grid value, const std::vector<NodeId>& parents, BackwardFn fn) {
  Node n;
  n.value = std::move(value);
  for (NodeId p : parents) {
    if (node(p).requires_grad) n.requires_grad = true;
  }
  if (n.requires_grad) {
    n.parents = parents;
    n.backward = std::move(fn);
  }
  nodes_.push_back(std::move(n));
  return NodeId{static_cast<std::uint32_t>(nodes_.size() - 1)};
}

Grid& Tape::accumulator(NodeId id) {
  Node& n = node(id);
  if (!n.has_grad) {
    n.grad = Grid(n.value.shape(), 0.0);
    n.has_grad = true;
  }
  return n.grad;
}

void Tape::backward(NodeId root) {
  if (!node(root).value.is_scalar()) {
    throw ShapeError("backward root must be scalar, got " + to_string(node(root).value.shape()));
  }
  for (Node& n : nodes_) {
    n.has_grad = false;
    n.grad = Grid();
  }
  accumulator(root)[0] = 1.0;
  for (std::size_t i = root.index + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (!n.has_grad || !n.backward) continue;
    // nodes_ is not resized during the sweep, so n.grad stays valid.
    BackwardContext ctx(*this, NodeId{static_cast<std::uint32_t>(i)}, n.grad);
    n.backward(ctx);
  }
}

const Grid& Tape::grad(NodeId id) { return accumulator(id); }

}  // namespace flowcast
