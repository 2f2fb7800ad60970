#include "flowcast/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <cctype>
#include <cerrno>
#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iterator>
#include <memory>

#include "flowcast/error.hpp"

namespace flowcast {
namespace {

[[noreturn]] void fail(const std::string& path, const std::string& reason) {
  throw IoError(path + ": " + reason);
}

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using File = std::unique_ptr<std::FILE, FileCloser>;

File open_file(const std::string& path, const char* mode) {
  File f(std::fopen(path.c_str(), mode));
  if (!f) fail(path, std::strerror(errno));
  return f;
}

// Everything libpng touches lives here so nothing on the stack of the
// setjmp frame changes between setjmp and a longjmp.
struct PngRead {
  std::FILE* fp = nullptr;
  png_structp png = nullptr;
  png_infop info = nullptr;
  char error[256] = {};
  png_uint_32 width = 0, height = 0;
  int bit_depth = 0;
  std::vector<unsigned char> pixels;
  std::vector<png_bytep> rows;

  ~PngRead() {
    if (png) png_destroy_read_struct(&png, info ? &info : nullptr, nullptr);
  }
};

void png_error_to_buffer(png_structp png, png_const_charp msg) {
  auto* st = static_cast<PngRead*>(png_get_error_ptr(png));
  std::snprintf(st->error, sizeof st->error, "%s", msg);
  png_longjmp(png, 1);
}

void png_warning_ignore(png_structp, png_const_charp) {}

bool png_read_rgb(PngRead& st) {
  if (setjmp(png_jmpbuf(st.png))) return false;
  png_init_io(st.png, st.fp);
  png_read_info(st.png, st.info);
  const int color = png_get_color_type(st.png, st.info);
  png_set_expand(st.png);  // palette -> RGB, low-bit grey -> 8 bit, tRNS -> alpha
  if (color & PNG_COLOR_MASK_ALPHA || png_get_valid(st.png, st.info, PNG_INFO_tRNS)) {
    png_set_strip_alpha(st.png);
  }
  if (color == PNG_COLOR_TYPE_GRAY || color == PNG_COLOR_TYPE_GRAY_ALPHA) {
    png_set_gray_to_rgb(st.png);
  }
  png_read_update_info(st.png, st.info);
  st.width = png_get_image_width(st.png, st.info);
  st.height = png_get_image_height(st.png, st.info);
  st.bit_depth = png_get_bit_depth(st.png, st.info);
  const std::size_t stride = png_get_rowbytes(st.png, st.info);
  st.pixels.resize(stride * st.height);
  st.rows.resize(st.height);
  for (png_uint_32 y = 0; y < st.height; ++y) st.rows[y] = st.pixels.data() + y * stride;
  png_read_image(st.png, st.rows.data());
  png_read_end(st.png, nullptr);
  return true;
}

Grid load_png(const std::string& path) {
  File f = open_file(path, "rb");
  auto st = std::make_unique<PngRead>();
  st->fp = f.get();
  st->png = png_create_read_struct(PNG_LIBPNG_VER_STRING, st.get(), png_error_to_buffer,
                                   png_warning_ignore);
  if (!st->png) fail(path, "cannot initialise PNG decoder");
  st->info = png_create_info_struct(st->png);
  if (!st->info) fail(path, "cannot initialise PNG decoder");
  if (!png_read_rgb(*st)) fail(path, std::string("corrupt PNG (") + st->error + ")");
  if (st->bit_depth != 8 && st->bit_depth != 16) {
    fail(path, "unsupported PNG bit depth " + std::to_string(st->bit_depth));
  }

  Grid g(static_cast<int>(st->height), static_cast<int>(st->width), 3);
  const unsigned char* p = st->pixels.data();
  if (st->bit_depth == 8) {
    for (std::size_t i = 0; i < g.size(); ++i) g[i] = p[i] / 255.0;
  } else {
    // PNG stores 16-bit samples big-endian.
    for (std::size_t i = 0; i < g.size(); ++i) g[i] = ((p[2 * i] << 8) | p[2 * i + 1]) / 65535.0;
  }
  return g;
}

// Reads one whitespace-separated header token, skipping '#' comments.
long ppm_token(const std::string& path, const std::vector<unsigned char>& buf, std::size_t& pos) {
  while (pos < buf.size()) {
    if (buf[pos] == '#') {
      while (pos < buf.size() && buf[pos] != '\n') ++pos;
    } else if (std::isspace(buf[pos])) {
      ++pos;
    } else {
      break;
    }
  }
  long v = 0;
  std::size_t digits = 0;
  while (pos < buf.size() && std::isdigit(buf[pos])) {
    v = v * 10 + (buf[pos] - '0');
    if (v > 1'000'000) fail(path, "PPM header value out of range");
    ++pos;
    ++digits;
  }
  if (digits == 0) fail(path, "malformed PPM header");
  return v;
}

Grid load_ppm(const std::string& path, const std::vector<unsigned char>& buf) {
  std::size_t pos = 2;
  const long w = ppm_token(path, buf, pos);
  const long h = ppm_token(path, buf, pos);
  const long maxval = ppm_token(path, buf, pos);
  if (pos >= buf.size() || !std::isspace(buf[pos])) fail(path, "malformed PPM header");
  ++pos;  // single whitespace byte before the raster
  if (w < 1 || h < 1) fail(path, "PPM has zero size");
  if (maxval != 255 && maxval != 65535) {
    fail(path, "unsupported PPM maxval " + std::to_string(maxval) + " (need 255 or 65535)");
  }
  const std::size_t bytes = maxval == 255 ? 1 : 2;
  const std::size_t need = static_cast<std::size_t>(w) * h * 3 * bytes;
  if (buf.size() - pos < need) fail(path, "truncated PPM raster");

  Grid g(static_cast<int>(h), static_cast<int>(w), 3);
  const unsigned char* p = buf.data() + pos;
  for (std::size_t i = 0; i < g.size(); ++i) {
    g[i] = bytes == 1 ? p[i] / 255.0 : ((p[2 * i] << 8) | p[2 * i + 1]) / 65535.0;
  }
  return g;
}

void check_writable(const std::string& path, const Grid& image, bool allow_grey) {
  if (image.empty()) fail(path, "refusing to write an empty image");
  if (image.channels() != 3 && !(allow_grey && image.channels() == 1)) {
    throw ShapeError(path + ": cannot write a " + std::to_string(image.channels()) +
                     "-channel image");
  }
}

}  // namespace

Grid load_image(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(path, std::strerror(errno));
  std::vector<unsigned char> head(8);
  in.read(reinterpret_cast<char*>(head.data()), 8);
  head.resize(static_cast<std::size_t>(in.gcount()));
  if (head.size() == 8 && png_sig_cmp(head.data(), 0, 8) == 0) return load_png(path);
  if (head.size() >= 2 && head[0] == 'P' && head[1] == '6') {
    in.seekg(0);
    std::vector<unsigned char> buf((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
    return load_ppm(path, buf);
  }
  fail(path, "unsupported format (expected PNG or binary PPM P6)");
}

std::vector<Grid> load_frames(const std::vector<std::string>& paths) {
  if (paths.size() < 2) throw ConfigError("need at least two input frames");
  std::vector<Grid> frames;
  frames.reserve(paths.size());
  for (const auto& p : paths) {
    frames.push_back(load_image(p));
    if (!frames.back().shape().same_plane(frames.front().shape())) {
      throw IoError("dimension mismatch: " + paths.front() + " is " +
                    std::to_string(frames.front().width()) + "x" +
                    std::to_string(frames.front().height()) + " but " + p + " is " +
                    std::to_string(frames.back().width()) + "x" +
                    std::to_string(frames.back().height()));
    }
  }
  return frames;
}

unsigned char quantize8(double v) {
  if (!(v > 0.0)) return 0;  // also maps NaN to 0
  const double q = std::floor(v * 255.0 + 0.5);
  return q >= 255.0 ? 255 : static_cast<unsigned char>(q);
}

void save_png(const std::string& path, const Grid& image) {
  check_writable(path, image, true);
  std::vector<unsigned char> bytes(image.size());
  for (std::size_t i = 0; i < bytes.size(); ++i) bytes[i] = quantize8(image[i]);

  png_image out;
  std::memset(&out, 0, sizeof out);
  out.version = PNG_IMAGE_VERSION;
  out.width = static_cast<png_uint_32>(image.width());
  out.height = static_cast<png_uint_32>(image.height());
  out.format = image.channels() == 3 ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  if (!png_image_write_to_file(&out, path.c_str(), 0, bytes.data(), 0, nullptr)) {
    const std::string msg = out.message;
    png_image_free(&out);
    fail(path, "cannot write PNG (" + msg + ")");
  }
}

void save_ppm(const std::string& path, const Grid& image, int bits) {
  check_writable(path, image, false);
  if (bits != 8 && bits != 16) throw ConfigError("PPM bit depth must be 8 or 16");
  File f = open_file(path, "wb");
  const int maxval = bits == 8 ? 255 : 65535;
  std::fprintf(f.get(), "P6\n%d %d\n%d\n", image.width(), image.height(), maxval);
  std::vector<unsigned char> raster;
  raster.reserve(image.size() * (bits / 8));
  for (double v : image.values()) {
    if (bits == 8) {
      raster.push_back(quantize8(v));
    } else {
      const double c = std::isnan(v) ? 0.0 : std::clamp(v, 0.0, 1.0);
      const auto q = static_cast<unsigned>(std::floor(c * 65535.0 + 0.5));
      raster.push_back(static_cast<unsigned char>(q >> 8));
      raster.push_back(static_cast<unsigned char>(q & 0xff));
    }
  }
  if (std::fwrite(raster.data(), 1, raster.size(), f.get()) != raster.size() ||
      std::fflush(f.get()) != 0) {
    fail(path, "write failed");
  }
}

}  // namespace flowcast
