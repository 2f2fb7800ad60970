#pragma once

#include <string>
#include <vector>

#include "flowcast/grid.hpp"

namespace flowcast {

/// Reads a PNG or binary PPM (P6), 8 or 16 bits per sample, into an
/// H x W x 3 grid scaled to [0,1] (v / 255 or v / 65535). Grey PNGs are
/// replicated to three channels and alpha is dropped. The format is chosen
/// from the file's magic bytes, not its extension. Throws IoError.
Grid load_image(const std::string& path);

// At least two frames, all with the same dimensions.
std::vector<Grid> load_frames(const std::vector<std::string>& paths);

// 8-bit quantisation used for every written image: round half up, clamped.
unsigned char quantize8(double v);

/// Writes an 8-bit PNG (1 or 3 channels). Output bytes depend only on the
/// pixel values, so equal grids give identical files.
void save_png(const std::string& path, const Grid& image);

// Binary PPM with maxval 255 or 65535. Three-channel images only.
void save_ppm(const std::string& path, const Grid& image, int bits = 8);

}  // namespace flowcast
