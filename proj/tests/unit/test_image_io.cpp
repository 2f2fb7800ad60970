#include <png.h>

#include <filesystem>
#include <fstream>
#include <iterator>

#include "doctest.h"
#include "flowcast/error.hpp"
#include "flowcast/image_io.hpp"
#include "helpers.hpp"

using namespace flowcast;
namespace fs = std::filesystem;

namespace {

std::string tmp(const std::string& name) {
  const fs::path dir = fs::path(FLOWCAST_TEST_TMP) / "image_io";
  fs::create_directories(dir);
  return (dir / name).string();
}

void write_bytes(const std::string& path, const std::string& bytes) {
  std::ofstream(path, std::ios::binary) << bytes;
}

std::string read_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

// Writes a PNG with libpng's simplified API; `linear` selects 16-bit samples.
void write_png(const std::string& path, int w, int h, png_uint_32 format, const void* data) {
  png_image img{};
  img.version = PNG_IMAGE_VERSION;
  img.width = w;
  img.height = h;
  img.format = format;
  REQUIRE(png_image_write_to_file(&img, path.c_str(), 0, data, 0, nullptr) != 0);
}

std::string expect_io_error(const std::vector<std::string>& paths) {
  try {
    load_frames(paths);
  } catch (const IoError& e) {
    return e.what();
  }
  FAIL("expected IoError");
  return {};
}

}  // namespace

TEST_CASE("quantisation rounds half up and clamps") {
  CHECK(quantize8(0.0) == 0);
  CHECK(quantize8(1.0) == 255);
  CHECK(quantize8(127.5 / 255.0) == 128);
  CHECK(quantize8(127.49 / 255.0) == 127);
  CHECK(quantize8(-0.3) == 0);
  CHECK(quantize8(7.0) == 255);
  CHECK(quantize8(std::nan("")) == 0);
}

TEST_CASE("8-bit PPM pixel 128 loads as 128/255") {
  const std::string p = tmp("p128.ppm");
  write_bytes(p, std::string("P6\n# a comment\n2 1\n255\n") + std::string("\x80\x00\xff\x80\x80\x80", 6));
  const Grid g = load_image(p);
  CHECK(g.shape() == Shape{1, 2, 3});
  CHECK(g.at(0, 0, 0) == 128.0 / 255.0);
  CHECK(g.at(0, 0, 1) == 0.0);
  CHECK(g.at(0, 0, 2) == 1.0);
}

TEST_CASE("16-bit PPM scales by 65535 and is big-endian") {
  const std::string p = tmp("p16.ppm");
  write_bytes(p, std::string("P6 1 1 65535\n") + std::string("\x01\x02\xff\xff\x00\x00", 6));
  const Grid g = load_image(p);
  CHECK(g.at(0, 0, 0) == 258.0 / 65535.0);
  CHECK(g.at(0, 0, 1) == 1.0);
}

TEST_CASE("PPM writer round-trips at 8 and 16 bits") {
  const Grid img = test::random_grid(5, 7, 3, 1);
  save_ppm(tmp("rt8.ppm"), img, 8);
  save_ppm(tmp("rt16.ppm"), img, 16);
  CHECK(max_abs_diff(load_image(tmp("rt8.ppm")), img) <= 0.5 / 255.0 + 1e-15);
  CHECK(max_abs_diff(load_image(tmp("rt16.ppm")), img) <= 0.5 / 65535.0 + 1e-15);
  CHECK_THROWS_AS(save_ppm(tmp("bad.ppm"), img, 12), ConfigError);
}

TEST_CASE("PNG round trip stays within one 8-bit step and is byte-stable") {
  const Grid img = test::random_grid(9, 11, 3, 2);
  save_png(tmp("a.png"), img);
  save_png(tmp("b.png"), img);
  CHECK(read_bytes(tmp("a.png")) == read_bytes(tmp("b.png")));
  const Grid back = load_image(tmp("a.png"));
  CHECK(back.shape() == img.shape());
  CHECK(max_abs_diff(back, img) <= 1.0 / 255.0);
  for (std::size_t i = 0; i < img.size(); ++i) CHECK(back[i] == quantize8(img[i]) / 255.0);
}

TEST_CASE("grey PNGs are replicated, alpha dropped, 16-bit scaled by 65535") {
  const unsigned char grey[4] = {0, 64, 128, 255};
  write_png(tmp("grey.png"), 2, 2, PNG_FORMAT_GRAY, grey);
  const Grid g = load_image(tmp("grey.png"));
  CHECK(g.shape() == Shape{2, 2, 3});
  CHECK(g.at(1, 0, 2) == 128.0 / 255.0);

  const unsigned char rgba[8] = {10, 20, 30, 0, 40, 50, 60, 255};
  write_png(tmp("rgba.png"), 2, 1, PNG_FORMAT_RGBA, rgba);
  const Grid c = load_image(tmp("rgba.png"));
  CHECK(c.channels() == 3);
  CHECK(c.at(0, 1, 1) == 50.0 / 255.0);

  const png_uint_16 deep[3] = {1000, 65535, 0};
  write_png(tmp("deep.png"), 1, 1, PNG_FORMAT_LINEAR_RGB, deep);
  const Grid d = load_image(tmp("deep.png"));
  CHECK(d.at(0, 0, 0) == 1000.0 / 65535.0);
  CHECK(d.at(0, 0, 1) == 1.0);
}

TEST_CASE("format comes from the magic bytes, not the extension") {
  save_png(tmp("really_png.ppm"), Grid(2, 2, 3, 0.5));
  CHECK(load_image(tmp("really_png.ppm")).at(1, 1, 2) == 128.0 / 255.0);
  write_bytes(tmp("junk.png"), "GIF89a....");
  CHECK_THROWS_AS(load_image(tmp("junk.png")), IoError);
}

TEST_CASE("load_frames errors name the files") {
  save_png(tmp("s64.png"), Grid(64, 64, 3, 0.2));
  save_png(tmp("s32.png"), Grid(32, 32, 3, 0.2));
  const auto frames = load_frames({tmp("s64.png"), tmp("s64.png")});
  CHECK(frames.size() == 2);
  CHECK(frames[0].shape() == Shape{64, 64, 3});

  const std::string mismatch = expect_io_error({tmp("s64.png"), tmp("s32.png")});
  CHECK(mismatch.find("s64.png") != std::string::npos);
  CHECK(mismatch.find("s32.png") != std::string::npos);

  const std::string missing = expect_io_error({tmp("s64.png"), tmp("nope.png")});
  CHECK(missing.find("nope.png") != std::string::npos);

  write_bytes(tmp("short.ppm"), "P6 4 4 255\nabc");
  CHECK(expect_io_error({tmp("s64.png"), tmp("short.ppm")}).find("short.ppm") != std::string::npos);
  CHECK_THROWS_AS(load_frames({tmp("s64.png")}), ConfigError);
}

TEST_CASE("writing into a missing directory is an IO error") {
  CHECK_THROWS_AS(save_png(tmp("no/such/dir/x.png"), Grid(2, 2, 3)), IoError);
}
