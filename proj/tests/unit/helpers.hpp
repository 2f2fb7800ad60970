#pragma once

#include <cmath>
#include <random>

#include "flowcast/grid.hpp"

namespace test {

inline flowcast::Grid random_grid(int h, int w, int c, std::uint64_t seed, double lo = 0.0,
                                  double hi = 1.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(lo, hi);
  flowcast::Grid g(h, w, c);
  for (double& v : g.values()) v = u(rng);
  return g;
}

inline flowcast::Grid constant_flow(int h, int w, double dx, double dy) {
  flowcast::Grid f(h, w, 2);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      f.at(y, x, 0) = dx;
      f.at(y, x, 1) = dy;
    }
  }
  return f;
}

// Largest |a - b| over pixels at least `m` from every edge.
inline double interior_max_diff(const flowcast::Grid& a, const flowcast::Grid& b, int m) {
  double d = 0.0;
  for (int y = m; y < a.height() - m; ++y) {
    for (int x = m; x < a.width() - m; ++x) {
      for (int c = 0; c < a.channels(); ++c) d = std::max(d, std::abs(a.at(y, x, c) - b.at(y, x, c)));
    }
  }
  return d;
}

}  // namespace test
