#include "tubekin/render.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <memory>
#include <numbers>

namespace tubekin {

namespace {

std::uint8_t to_byte(double x) { return static_cast<std::uint8_t>(std::lround(std::clamp(x, 0.0, 1.0) * 255.0)); }

// h in degrees [0, 360), s = 1.
Rgb hsv(double h, double v) {
  h = std::fmod(h, 360.0);
  if (h < 0.0) h += 360.0;
  const double sector = h / 60.0;
  const int i = std::min(5, static_cast<int>(sector));
  const double f = sector - i;
  const double p = 0.0, q = v * (1.0 - f), t = v * f;
  double r = 0, g = 0, b = 0;
  switch (i) {
    case 0: r = v; g = t; b = p; break;
    case 1: r = q; g = v; b = p; break;
    case 2: r = p; g = v; b = t; break;
    case 3: r = p; g = q; b = v; break;
    case 4: r = t; g = p; b = v; break;
    default: r = v; g = p; b = q; break;
  }
  return {to_byte(r), to_byte(g), to_byte(b)};
}

struct PngWrite {
  png_structp png = nullptr;
  png_infop info = nullptr;
  ~PngWrite() { png_destroy_write_struct(&png, &info); }
};

struct PngRead {
  png_structp png = nullptr;
  png_infop info = nullptr;
  ~PngRead() { png_destroy_read_struct(&png, &info, nullptr); }
};

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};

}  // namespace

Rgb RgbImage::at(int x, int y) const {
  const size_t o = (static_cast<size_t>(y) * width + x) * 3;
  return {pixels[o], pixels[o + 1], pixels[o + 2]};
}

void RgbImage::set(int x, int y, Rgb c) {
  const size_t o = (static_cast<size_t>(y) * width + x) * 3;
  pixels[o] = c.r;
  pixels[o + 1] = c.g;
  pixels[o + 2] = c.b;
}

Rgb area_color(double x) {
  x = std::clamp(x, 0.0, 1.0);
  return hsv(240.0 * (1.0 - x), 1.0);
}

Rgb gray_color(double x) {
  const std::uint8_t v = to_byte(x);
  return {v, v, v};
}

Rgb hue_value_color(double angle, double intensity) {
  return hsv(angle * 180.0 / std::numbers::pi, std::clamp(intensity, 0.0, 1.0));
}

void paint_cell(RgbImage& image, int row, int col, Rgb color, int magnification) {
  for (int dy = 0; dy < magnification; ++dy)
    for (int dx = 0; dx < magnification; ++dx) image.set(col * magnification + dx, row * magnification + dy, color);
}

Rendered render_scalar(const ScalarGrid& grid, ColorMap map, double lo, double hi, int magnification) {
  if (magnification < 1) throw InputError("magnification must be >= 1");
  Rendered out;
  out.image = RgbImage(grid.cols * magnification, grid.rows * magnification);
  const double span = hi - lo;
  for (int r = 0; r < grid.rows; ++r)
    for (int c = 0; c < grid.cols; ++c) {
      const double v = grid.at(r, c);
      Rgb color = kNanColor;
      if (std::isnan(v)) {
        ++out.nan_cells;
      } else {
        const double x = span > 0.0 ? (v - lo) / span : 0.5;
        color = map == ColorMap::area ? area_color(x) : gray_color(x);
      }
      paint_cell(out.image, r, c, color, magnification);
    }
  return out;
}

Rendered render_gradient(const GradientImage& g, int magnification) {
  if (magnification < 1) throw InputError("magnification must be >= 1");
  Rendered out;
  out.image = RgbImage(g.frames * magnification, g.stations * magnification);
  for (int j = 0; j < g.stations; ++j)
    for (int k = 0; k < g.frames; ++k) {
      const size_t i = g.index(j, k);
      const double mag = g.magnitude[i];
      Rgb color = kNanColor;
      if (std::isnan(mag) || std::isnan(g.angle[i])) {
        ++out.nan_cells;
      } else {
        color = hue_value_color(g.angle[i], mag);
      }
      paint_cell(out.image, j, k, color, magnification);
    }
  return out;
}

void write_png(const std::filesystem::path& path, const RgbImage& image) {
  std::unique_ptr<std::FILE, FileCloser> file(std::fopen(path.string().c_str(), "wb"));
  if (!file) throw InputError(path.string() + ": cannot open for writing");
  PngWrite w;
  w.png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!w.png) throw InputError("libpng: out of memory");
  w.info = png_create_info_struct(w.png);
  if (!w.info) throw InputError("libpng: out of memory");
  if (setjmp(png_jmpbuf(w.png))) throw InputError(path.string() + ": PNG write failed");
  png_init_io(w.png, file.get());
  png_set_IHDR(w.png, w.info, static_cast<png_uint_32>(image.width), static_cast<png_uint_32>(image.height), 8,
               PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_set_compression_level(w.png, 6);
  png_write_info(w.png, w.info);
  for (int y = 0; y < image.height; ++y)
    png_write_row(w.png, const_cast<png_bytep>(image.pixels.data() + static_cast<size_t>(y) * image.width * 3));
  png_write_end(w.png, nullptr);
}

RgbImage read_png(const std::filesystem::path& path) {
  std::unique_ptr<std::FILE, FileCloser> file(std::fopen(path.string().c_str(), "rb"));
  if (!file) throw InputError(path.string() + ": cannot open");
  PngRead r;
  r.png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!r.png) throw InputError("libpng: out of memory");
  r.info = png_create_info_struct(r.png);
  if (!r.info) throw InputError("libpng: out of memory");
  RgbImage image;
  if (setjmp(png_jmpbuf(r.png))) throw InputError(path.string() + ": not a readable PNG");
  png_init_io(r.png, file.get());
  png_read_info(r.png, r.info);
  png_set_expand(r.png);
  png_set_strip_16(r.png);
  png_set_strip_alpha(r.png);
  png_set_gray_to_rgb(r.png);
  png_read_update_info(r.png, r.info);
  image = RgbImage(static_cast<int>(png_get_image_width(r.png, r.info)),
                   static_cast<int>(png_get_image_height(r.png, r.info)));
  for (int y = 0; y < image.height; ++y)
    png_read_row(r.png, image.pixels.data() + static_cast<size_t>(y) * image.width * 3, nullptr);
  png_read_end(r.png, nullptr);
  return image;
}

}  // namespace tubekin
