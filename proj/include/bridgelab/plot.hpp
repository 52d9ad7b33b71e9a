#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "bridgelab/common.hpp"

namespace bridgelab {

struct Rgb {
  uint8_t r = 0, g = 0, b = 0;
};

// Fixed palette cycled by curve / cloud index.
Rgb palette_color(int index);

// Plain RGB8 raster with a 5x7 bitmap font. Out-of-bounds pixels are
// silently dropped, so drawing never needs clipping logic at call sites.
struct Image {
  int width = 0;
  int height = 0;
  std::vector<uint8_t> rgb;

  Image(int w, int h, Rgb background = {255, 255, 255});

  void set(int x, int y, Rgb c);
  void fill_rect(int x0, int y0, int x1, int y1, Rgb c);  // inclusive corners
  void draw_line(int x0, int y0, int x1, int y1, Rgb c);
  void draw_disc(int cx, int cy, int radius, Rgb c);
  // Top-left anchored; glyphs are 5x7 with one column of spacing.
  void draw_text(int x, int y, const std::string& text, Rgb c);
};

int text_width(const std::string& text);

// Minimal PNG: 8-bit RGB, zlib-compressed scanlines with filter byte 0.
// Encoding is a pure function of the pixels, so identical images give
// identical bytes.
std::vector<uint8_t> encode_png(const Image& img);
void write_png(const std::string& path, const Image& img);

// Scatter panel of one or more point clouds over a centered square window.
// half_width <= 0 picks the smallest window containing every point.
struct ScatterSpec {
  std::string title;
  double half_width = 0.0;
  int size = 512;
  std::vector<std::string> labels;  // optional, one per cloud
};
Image render_scatter(const std::vector<PointBatch>& clouds,
                     const ScatterSpec& spec);

struct Curve {
  std::string label;
  std::vector<double> xs;
  std::vector<double> ys;
};

struct CurveSpec {
  std::string title;
  std::string x_label;
  std::string y_label;
  int width = 720;
  int height = 480;
};
Image render_curves(const std::vector<Curve>& curves, const CurveSpec& spec);

}  // namespace bridgelab
