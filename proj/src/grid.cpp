#include "flowcast/grid.hpp"

#include <algorithm>
#include <cmath>

#include "flowcast/error.hpp"

namespace flowcast {

std::string to_string(const Shape& s) {
  return std::to_string(s.height) + "x" + std::to_string(s.width) + "x" +
         std::to_string(s.channels);
}

Grid::Grid(int height, int width, int channels, double fill)
    : shape_{height, width, channels} {
  if (height < 0 || width < 0 || channels < 0) {
    throw ShapeError("negative grid dimension: " + to_string(shape_));
  }
  data_.assign(shape_.size(), fill);
}

Grid::Grid(int height, int width, int channels, std::vector<double> data)
    : shape_{height, width, channels}, data_(std::move(data)) {
  if (height < 0 || width < 0 || channels < 0) {
    throw ShapeError("negative grid dimension: " + to_string(shape_));
  }
  if (data_.size() != shape_.size()) {
    throw ShapeError("grid data length " + std::to_string(data_.size()) +
                     " does not match shape " + to_string(shape_));
  }
}

double Grid::item() const {
  if (data_.size() != 1) {
    throw ShapeError("item() on non-scalar grid " + to_string(shape_));
  }
  return data_[0];
}

bool Grid::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

void Grid::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

Grid Grid::channel(int c) const {
  if (c < 0 || c >= shape_.channels) {
    throw ShapeError("channel " + std::to_string(c) + " out of range for " + to_string(shape_));
  }
  Grid out(shape_.height, shape_.width, 1);
  const std::size_t n = static_cast<std::size_t>(shape_.height) * shape_.width;
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = data_[i * shape_.channels + c];
  }
  return out;
}

void require_same_shape(const Shape& a, const Shape& b, const char* what) {
  if (!(a == b)) {
    throw ShapeError(std::string(what) + ": shape mismatch " + to_string(a) + " vs " +
                     to_string(b));
  }
}

void require_same_plane(const Shape& a, const Shape& b, const char* what) {
  if (!a.same_plane(b)) {
    throw ShapeError(std::string(what) + ": spatial size mismatch " + to_string(a) + " vs " +
                     to_string(b));
  }
}

double max_abs_diff(const Grid& a, const Grid& b) {
  require_same_shape(a.shape(), b.shape(), "max_abs_diff");
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    m = std::max(m, std::abs(a[i] - b[i]));
  }
  return m;
}

}  // namespace flowcast
