#include "doctest.h"
#include "flowcast/error.hpp"
#include "flowcast/gradcheck.hpp"
#include "flowcast/ops.hpp"
#include "flowcast/warp.hpp"
#include "helpers.hpp"

using namespace flowcast;

TEST_CASE("gradient of a constant root is zero for every leaf") {
  Tape t;
  const NodeId x = t.variable(test::random_grid(3, 3, 1, 1));
  const NodeId c = t.constant(Grid::scalar(4.0));
  t.backward(c);
  for (double g : t.grad(x).values()) CHECK(g == 0.0);
}

TEST_CASE("a leaf used twice accumulates both paths") {
  Tape t;
  const Grid xv(2, 2, 1, 1.5);
  const NodeId x = t.variable(xv);
  // sum(x * x + x) -> 2x + 1
  const NodeId root = ops::reduce_sum(t, ops::add(t, ops::mul(t, x, x), x));
  t.backward(root);
  for (double g : t.grad(x).values()) CHECK(g == doctest::Approx(4.0).epsilon(1e-15));
}

TEST_CASE("backward rejects a non-scalar root") {
  Tape t;
  const NodeId x = t.variable(Grid(2, 2, 1, 1.0));
  CHECK_THROWS_AS(t.backward(x), ShapeError);
}

TEST_CASE("nodes not reached by the root get zero gradient") {
  Tape t;
  const NodeId x = t.variable(Grid(2, 2, 1, 1.0));
  const NodeId y = t.variable(Grid(2, 2, 1, 2.0));
  t.backward(ops::reduce_sum(t, x));
  for (double g : t.grad(y).values()) CHECK(g == 0.0);
  CHECK(t.grad(y).shape() == Shape{2, 2, 1});
}

TEST_CASE("constants do not require gradients and nor do ops on them") {
  Tape t;
  const NodeId c = t.constant(Grid(2, 2, 1, 1.0));
  const NodeId d = ops::square(t, c);
  CHECK_FALSE(t.requires_grad(d));
  const NodeId v = t.variable(Grid(2, 2, 1, 1.0));
  CHECK(t.requires_grad(ops::add(t, d, v)));
}

TEST_CASE("mean-L1 of warp residual matches finite differences w.r.t. the flow") {
  const Grid x = test::random_grid(8, 8, 1, 11);
  const Grid y = test::random_grid(8, 8, 1, 12);
  Grid f = test::random_grid(8, 8, 2, 13, -1.5, 1.5);
  const double err = max_gradient_error(
      [&](Tape& t, const std::vector<NodeId>& in) {
        const NodeId w = backward_warp(t, t.constant(x), in[0]);
        return ops::reduce_mean_l1(t, ops::sub(t, w, t.constant(y)));
      },
      {f}, 1e-5);
  CHECK(err < 1e-4);
}

TEST_CASE("replaying the same graph gives bit-identical values and gradients") {
  const Grid a = test::random_grid(8, 8, 3, 3);
  const Grid f = test::random_grid(8, 8, 2, 4, -2, 2);
  auto build = [&](Tape& t, NodeId& fv) {
    fv = t.variable(f);
    const NodeId w = backward_warp(t, t.constant(a), fv);
    return ops::reduce_mean_sq(t, ops::sub(t, w, t.constant(a)));
  };
  Tape t1, t2;
  NodeId f1, f2;
  const NodeId r1 = build(t1, f1), r2 = build(t2, f2);
  CHECK(t1.value(r1) == t2.value(r2));
  t1.backward(r1);
  t2.backward(r2);
  CHECK(t1.grad(f1) == t2.grad(f2));
}
