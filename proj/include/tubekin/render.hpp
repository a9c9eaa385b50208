#pragma once

#include "tubekin/kinematics.hpp"

#include <cstdint>
#include <filesystem>
#include <vector>

namespace tubekin {

struct Rgb {
  std::uint8_t r = 0, g = 0, b = 0;
  bool operator==(const Rgb&) const = default;
};

inline constexpr Rgb kNanColor{128, 128, 128};

struct RgbImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;  // row-major RGB, row 0 on top

  RgbImage() = default;
  RgbImage(int w, int h) : width(w), height(h), pixels(static_cast<size_t>(w) * h * 3, 0) {}
  Rgb at(int x, int y) const;
  void set(int x, int y, Rgb c);
};

/// Row-major scalar matrix; row 0 is drawn on top.
struct ScalarGrid {
  int rows = 0;
  int cols = 0;
  std::vector<double> values;

  double at(int r, int c) const { return values[static_cast<size_t>(r) * cols + c]; }
};

enum class ColorMap { area, gray };

/// Hue sweep 240 deg (blue, x <= 0) to 0 deg (red, x >= 1) at full
/// saturation and value.
Rgb area_color(double x);
Rgb gray_color(double x);
/// Hue from the angle (radians, 0 = red), value from `intensity` in [0, 1].
Rgb hue_value_color(double angle, double intensity);

struct Rendered {
  RgbImage image;
  int nan_cells = 0;
};

/// Maps [lo, hi] onto the color map; each cell becomes a
/// magnification x magnification block. NaN cells are drawn gray.
Rendered render_scalar(const ScalarGrid& grid, ColorMap map, double lo, double hi, int magnification = 1);

/// Rows are stations, columns frames. Intensity is the normalized
/// magnitude, so an all-zero field is black.
Rendered render_gradient(const GradientImage& gradient, int magnification = 1);

/// Paints cell (row, col) in the magnified image.
void paint_cell(RgbImage& image, int row, int col, Rgb color, int magnification);

/// 8-bit RGB PNG without timestamps, so equal images give equal files.
void write_png(const std::filesystem::path& path, const RgbImage& image);
RgbImage read_png(const std::filesystem::path& path);

}  // namespace tubekin
