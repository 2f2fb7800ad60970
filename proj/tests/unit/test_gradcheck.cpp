#include <chrono>

#include "doctest.h"
#include "flowcast/gradcheck.hpp"
#include "flowcast/ops.hpp"

using namespace flowcast;

TEST_CASE("a deliberately wrong backward rule is caught") {
  const double err = max_gradient_error(
      [](Tape& t, const std::vector<NodeId>& in) {
        const Grid& v = t.value(in[0]);
        Grid out = v;
        for (double& x : out.values()) x = x * x;
        const NodeId a = in[0];
        // claims d(x^2)/dx = x instead of 2x
        return t.record(std::move(out), {a}, [a](BackwardContext& ctx) {
          Grid& g = ctx.grad(a);
          for (std::size_t i = 0; i < g.size(); ++i) g[i] += ctx.out_grad()[i] * ctx.value(a)[i];
        });
      },
      {Grid(3, 3, 1, 1.5)});
  CHECK(err > 0.1);
}

TEST_CASE("a correct rule passes") {
  const double err = max_gradient_error(
      [](Tape& t, const std::vector<NodeId>& in) { return ops::square(t, in[0]); }, {Grid(3, 3, 1, 1.5)});
  CHECK(err < 1e-8);
}

TEST_CASE("the full suite passes within its tolerances") {
  const auto start = std::chrono::steady_clock::now();
  const auto results = run_gradcheck_suite();
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  CHECK(results.size() >= 30);
  bool saw_backend = false, saw_loss = false;
  for (const auto& r : results) {
    CAPTURE(r.name);
    CHECK(r.passed());
    CHECK((r.tolerance == kCoreGradTolerance || r.tolerance == kBackendGradTolerance));
    saw_backend = saw_backend || r.name.find("interpolate") != std::string::npos;
    saw_loss = saw_loss || r.name.find("total_loss") != std::string::npos;
  }
  CHECK(saw_backend);
  CHECK(saw_loss);
  CHECK(secs < 30.0);
}
