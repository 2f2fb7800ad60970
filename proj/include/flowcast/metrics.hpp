#pragma once

#include <iosfwd>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "flowcast/grid.hpp"

namespace flowcast {

// Returned by psnr() when the compared regions are identical.
inline constexpr double kPsnrIdentical = std::numeric_limits<double>::infinity();

/// 10 log10(1 / MSE) over pixels at least `margin` away from every edge,
/// peak value 1.
double psnr(const Grid& a, const Grid& b, int margin = 0);

/// Mean endpoint error over the interior.
double mean_epe(const Grid& flow, const Grid& truth, int margin = 0);

struct SsimParams {
  int window = 11;
  double sigma = 1.5;
  double k1 = 0.01;
  double k2 = 0.03;
  double peak = 1.0;
};

/// Single-scale SSIM averaged over valid window positions and channels.
double ssim(const Grid& a, const Grid& b, const SsimParams& p = {});

// Standard five-scale exponents, finest first.
inline constexpr double kMsSsimWeights[5] = {0.0448, 0.2856, 0.3001, 0.2363, 0.1333};

// Scales usable for an image: the coarsest must still fit one window.
int ms_ssim_scales(int height, int width, const SsimParams& p = {});

/// Multi-scale SSIM: per-channel product over scales of the contrast-structure
/// term (luminance added at the coarsest scale), averaged over channels.
/// Negative per-scale terms are clipped to zero. Images smaller than 176 px
/// use fewer scales with the leading weights renormalised to sum to one.
/// Throws ShapeError when the image is smaller than one window.
double ms_ssim(const Grid& a, const Grid& b, const SsimParams& p = {});

/// Colour-wheel rendering: hue from direction (0 deg = +x, counter-clockwise
/// in screen terms, i.e. towards -y), saturation = |f| / max_magnitude
/// clamped to 1, value 1. Zero flow is white.
Grid flow_to_color(const Grid& flow, double max_magnitude);

struct FrameMetrics {
  int index = 0;  // 1 for t+1, ...
  double psnr = 0.0;
  double ssim = 0.0;
  double ms_ssim = 0.0;
  std::optional<double> epe;
};

struct MetricsReport {
  int margin = 0;
  std::vector<FrameMetrics> frames;

  FrameMetrics& add(const Grid& predicted, const Grid& truth, int index,
                    const Grid* flow = nullptr, const Grid* truth_flow = nullptr);
  double mean_psnr() const;

  // key = value lines
  void write_text(std::ostream& os) const;
  // one JSON object per line
  void write_jsonl(std::ostream& os) const;
};

}  // namespace flowcast
