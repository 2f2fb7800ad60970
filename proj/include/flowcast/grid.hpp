#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace flowcast {

struct Shape {
  int height = 0;
  int width = 0;
  int channels = 0;

  std::size_t size() const {
    return static_cast<std::size_t>(height) * static_cast<std::size_t>(width) *
           static_cast<std::size_t>(channels);
  }
  bool same_plane(const Shape& o) const { return height == o.height && width == o.width; }
  friend bool operator==(const Shape&, const Shape&) = default;
};

std::string to_string(const Shape& s);

/// Dense H x W x C field of doubles stored row-major with channels
/// interleaved: index = (y * W + x) * C + c.
///
/// Used for images (values in [0,1]), masks and flow fields (channel 0 is
/// the horizontal displacement, channel 1 the vertical one).
class Grid {
 public:
  Grid() = default;
  Grid(int height, int width, int channels, double fill = 0.0);
  Grid(Shape shape, double fill = 0.0) : Grid(shape.height, shape.width, shape.channels, fill) {}
  Grid(int height, int width, int channels, std::vector<double> data);

  static Grid scalar(double v) { return Grid(1, 1, 1, v); }

  int height() const { return shape_.height; }
  int width() const { return shape_.width; }
  int channels() const { return shape_.channels; }
  const Shape& shape() const { return shape_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }
  bool is_scalar() const { return data_.size() == 1; }

  double& at(int y, int x, int c = 0) { return data_[index(y, x, c)]; }
  double at(int y, int x, int c = 0) const { return data_[index(y, x, c)]; }
  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  std::size_t index(int y, int x, int c = 0) const {
    return (static_cast<std::size_t>(y) * static_cast<std::size_t>(shape_.width) +
            static_cast<std::size_t>(x)) *
               static_cast<std::size_t>(shape_.channels) +
           static_cast<std::size_t>(c);
  }

  std::span<double> values() { return data_; }
  std::span<const double> values() const { return data_; }
  const std::vector<double>& data() const { return data_; }

  double item() const;  // the single value of a 1x1x1 grid

  bool all_finite() const;
  void fill(double v);

  // Copy of one channel as an H x W x 1 grid.
  Grid channel(int c) const;

  friend bool operator==(const Grid&, const Grid&) = default;

 private:
  Shape shape_;
  std::vector<double> data_;
};

// Throws ShapeError naming `what` when the shapes differ.
void require_same_shape(const Shape& a, const Shape& b, const char* what);
void require_same_plane(const Shape& a, const Shape& b, const char* what);

double max_abs_diff(const Grid& a, const Grid& b);

}  // namespace flowcast
