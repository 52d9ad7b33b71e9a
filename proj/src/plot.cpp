#include "bridgelab/plot.hpp"

#include <zlib.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <limits>

namespace bridgelab {

namespace {

// Column-encoded 5x7 glyphs for ASCII 0x20..0x5F (bit 0 = top row).
// Lowercase input is uppercased before lookup.
constexpr uint8_t kFont[][5] = {
    {0x00, 0x00, 0x00, 0x00, 0x00},  // ' '
    {0x00, 0x00, 0x5F, 0x00, 0x00},  // !
    {0x00, 0x07, 0x00, 0x07, 0x00},  // "
    {0x14, 0x7F, 0x14, 0x7F, 0x14},  // #
    {0x24, 0x2A, 0x7F, 0x2A, 0x12},  // $
    {0x23, 0x13, 0x08, 0x64, 0x62},  // %
    {0x36, 0x49, 0x55, 0x22, 0x50},  // &
    {0x00, 0x05, 0x03, 0x00, 0x00},  // '
    {0x00, 0x1C, 0x22, 0x41, 0x00},  // (
    {0x00, 0x41, 0x22, 0x1C, 0x00},  // )
    {0x08, 0x2A, 0x1C, 0x2A, 0x08},  // *
    {0x08, 0x08, 0x3E, 0x08, 0x08},  // +
    {0x00, 0x50, 0x30, 0x00, 0x00},  // ,
    {0x08, 0x08, 0x08, 0x08, 0x08},  // -
    {0x00, 0x60, 0x60, 0x00, 0x00},  // .
    {0x20, 0x10, 0x08, 0x04, 0x02},  // /
    {0x3E, 0x51, 0x49, 0x45, 0x3E},  // 0
    {0x00, 0x42, 0x7F, 0x40, 0x00},  // 1
    {0x42, 0x61, 0x51, 0x49, 0x46},  // 2
    {0x21, 0x41, 0x45, 0x4B, 0x31},  // 3
    {0x18, 0x14, 0x12, 0x7F, 0x10},  // 4
    {0x27, 0x45, 0x45, 0x45, 0x39},  // 5
    {0x3C, 0x4A, 0x49, 0x49, 0x30},  // 6
    {0x01, 0x71, 0x09, 0x05, 0x03},  // 7
    {0x36, 0x49, 0x49, 0x49, 0x36},  // 8
    {0x06, 0x49, 0x49, 0x29, 0x1E},  // 9
    {0x00, 0x36, 0x36, 0x00, 0x00},  // :
    {0x00, 0x56, 0x36, 0x00, 0x00},  // ;
    {0x00, 0x08, 0x14, 0x22, 0x41},  // <
    {0x14, 0x14, 0x14, 0x14, 0x14},  // =
    {0x41, 0x22, 0x14, 0x08, 0x00},  // >
    {0x02, 0x01, 0x51, 0x09, 0x06},  // ?
    {0x32, 0x49, 0x79, 0x41, 0x3E},  // @
    {0x7E, 0x11, 0x11, 0x11, 0x7E},  // A
    {0x7F, 0x49, 0x49, 0x49, 0x36},  // B
    {0x3E, 0x41, 0x41, 0x41, 0x22},  // C
    {0x7F, 0x41, 0x41, 0x22, 0x1C},  // D
    {0x7F, 0x49, 0x49, 0x49, 0x41},  // E
    {0x7F, 0x09, 0x09, 0x09, 0x01},  // F
    {0x3E, 0x41, 0x41, 0x51, 0x32},  // G
    {0x7F, 0x08, 0x08, 0x08, 0x7F},  // H
    {0x00, 0x41, 0x7F, 0x41, 0x00},  // I
    {0x20, 0x40, 0x41, 0x3F, 0x01},  // J
    {0x7F, 0x08, 0x14, 0x22, 0x41},  // K
    {0x7F, 0x40, 0x40, 0x40, 0x40},  // L
    {0x7F, 0x02, 0x0C, 0x02, 0x7F},  // M
    {0x7F, 0x04, 0x08, 0x10, 0x7F},  // N
    {0x3E, 0x41, 0x41, 0x41, 0x3E},  // O
    {0x7F, 0x09, 0x09, 0x09, 0x06},  // P
    {0x3E, 0x41, 0x51, 0x21, 0x5E},  // Q
    {0x7F, 0x09, 0x19, 0x29, 0x46},  // R
    {0x46, 0x49, 0x49, 0x49, 0x31},  // S
    {0x01, 0x01, 0x7F, 0x01, 0x01},  // T
    {0x3F, 0x40, 0x40, 0x40, 0x3F},  // U
    {0x1F, 0x20, 0x40, 0x20, 0x1F},  // V
    {0x7F, 0x20, 0x18, 0x20, 0x7F},  // W
    {0x63, 0x14, 0x08, 0x14, 0x63},  // X
    {0x07, 0x08, 0x70, 0x08, 0x07},  // Y
    {0x61, 0x51, 0x49, 0x45, 0x43},  // Z
    {0x00, 0x7F, 0x41, 0x41, 0x00},  // [
    {0x02, 0x04, 0x08, 0x10, 0x20},  // backslash
    {0x00, 0x41, 0x41, 0x7F, 0x00},  // ]
    {0x04, 0x02, 0x01, 0x02, 0x04},  // ^
    {0x40, 0x40, 0x40, 0x40, 0x40},  // _
};
constexpr uint8_t kFallbackGlyph[5] = {0x7F, 0x41, 0x41, 0x41, 0x7F};

const uint8_t* glyph_for(char ch) {
  unsigned char c = static_cast<unsigned char>(std::toupper(ch));
  if (c < 0x20 || c > 0x5F) return kFallbackGlyph;
  return kFont[c - 0x20];
}

void push_u32_be(std::vector<uint8_t>& out, uint32_t v) {
  out.push_back(static_cast<uint8_t>(v >> 24));
  out.push_back(static_cast<uint8_t>(v >> 16));
  out.push_back(static_cast<uint8_t>(v >> 8));
  out.push_back(static_cast<uint8_t>(v));
}

void push_chunk(std::vector<uint8_t>& out, const char type[4],
                const std::vector<uint8_t>& data) {
  push_u32_be(out, static_cast<uint32_t>(data.size()));
  const std::size_t type_at = out.size();
  out.insert(out.end(), type, type + 4);
  out.insert(out.end(), data.begin(), data.end());
  uLong crc = crc32(0L, Z_NULL, 0);
  crc = crc32(crc, out.data() + type_at, static_cast<uInt>(4 + data.size()));
  push_u32_be(out, static_cast<uint32_t>(crc));
}

std::string tick_label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4g", v);
  return buf;
}

}  // namespace

Rgb palette_color(int index) {
  static const Rgb kPalette[] = {
      {31, 119, 180},  // blue
      {214, 39, 40},   // red
      {44, 160, 44},   // green
      {255, 127, 14},  // orange
      {148, 103, 189},  // purple
      {140, 86, 75},   // brown
      {23, 190, 207},  // cyan
      {188, 189, 34},  // olive
  };
  return kPalette[((index % 8) + 8) % 8];
}

Image::Image(int w, int h, Rgb background) : width(w), height(h) {
  rgb.resize(static_cast<std::size_t>(w) * h * 3);
  for (std::size_t i = 0; i < rgb.size(); i += 3) {
    rgb[i] = background.r;
    rgb[i + 1] = background.g;
    rgb[i + 2] = background.b;
  }
}

void Image::set(int x, int y, Rgb c) {
  if (x < 0 || y < 0 || x >= width || y >= height) return;
  std::size_t at = (static_cast<std::size_t>(y) * width + x) * 3;
  rgb[at] = c.r;
  rgb[at + 1] = c.g;
  rgb[at + 2] = c.b;
}

void Image::fill_rect(int x0, int y0, int x1, int y1, Rgb c) {
  if (x0 > x1) std::swap(x0, x1);
  if (y0 > y1) std::swap(y0, y1);
  for (int y = y0; y <= y1; ++y)
    for (int x = x0; x <= x1; ++x) set(x, y, c);
}

void Image::draw_line(int x0, int y0, int x1, int y1, Rgb c) {
  // Bresenham.
  int dx = std::abs(x1 - x0), sx = x0 < x1 ? 1 : -1;
  int dy = -std::abs(y1 - y0), sy = y0 < y1 ? 1 : -1;
  int err = dx + dy;
  while (true) {
    set(x0, y0, c);
    if (x0 == x1 && y0 == y1) break;
    int e2 = 2 * err;
    if (e2 >= dy) {
      err += dy;
      x0 += sx;
    }
    if (e2 <= dx) {
      err += dx;
      y0 += sy;
    }
  }
}

void Image::draw_disc(int cx, int cy, int radius, Rgb c) {
  for (int y = -radius; y <= radius; ++y)
    for (int x = -radius; x <= radius; ++x)
      if (x * x + y * y <= radius * radius) set(cx + x, cy + y, c);
}

void Image::draw_text(int x, int y, const std::string& text, Rgb c) {
  int pen = x;
  for (char ch : text) {
    const uint8_t* g = glyph_for(ch);
    for (int col = 0; col < 5; ++col)
      for (int row = 0; row < 7; ++row)
        if (g[col] & (1 << row)) set(pen + col, y + row, c);
    pen += 6;
  }
}

int text_width(const std::string& text) {
  return text.empty() ? 0 : static_cast<int>(text.size()) * 6 - 1;
}

std::vector<uint8_t> encode_png(const Image& img) {
  // Raw scanlines, each prefixed with filter type 0.
  std::vector<uint8_t> raw;
  raw.reserve(static_cast<std::size_t>(img.height) * (1 + 3 * img.width));
  for (int y = 0; y < img.height; ++y) {
    raw.push_back(0);
    const uint8_t* row = img.rgb.data() + static_cast<std::size_t>(y) * img.width * 3;
    raw.insert(raw.end(), row, row + static_cast<std::size_t>(img.width) * 3);
  }

  uLongf comp_len = compressBound(static_cast<uLong>(raw.size()));
  std::vector<uint8_t> comp(comp_len);
  if (compress2(comp.data(), &comp_len, raw.data(),
                static_cast<uLong>(raw.size()), 6) != Z_OK)
    throw std::runtime_error("png: zlib compression failed");
  comp.resize(comp_len);

  std::vector<uint8_t> out = {137, 80, 78, 71, 13, 10, 26, 10};
  std::vector<uint8_t> ihdr;
  push_u32_be(ihdr, static_cast<uint32_t>(img.width));
  push_u32_be(ihdr, static_cast<uint32_t>(img.height));
  ihdr.push_back(8);  // bit depth
  ihdr.push_back(2);  // color type: truecolor
  ihdr.push_back(0);  // compression
  ihdr.push_back(0);  // filter
  ihdr.push_back(0);  // interlace
  push_chunk(out, "IHDR", ihdr);
  push_chunk(out, "IDAT", comp);
  push_chunk(out, "IEND", {});
  return out;
}

void write_png(const std::string& path, const Image& img) {
  std::vector<uint8_t> bytes = encode_png(img);
  write_file_atomic(path, std::string(bytes.begin(), bytes.end()));
}

Image render_scatter(const std::vector<PointBatch>& clouds,
                     const ScatterSpec& spec) {
  const int size = std::max(spec.size, 64);
  Image img(size, size);
  const Rgb black{0, 0, 0};
  const int top = 22, bottom = 22, left = 12, right = 12;
  const int x0 = left, x1 = size - 1 - right;
  const int y0 = top, y1 = size - 1 - bottom;

  double half = spec.half_width;
  if (half <= 0.0) {
    for (const auto& pts : clouds)
      for (Eigen::Index i = 0; i < pts.rows(); ++i) {
        if (!std::isfinite(pts(i, 0)) || !std::isfinite(pts(i, 1))) continue;
        half = std::max({half, std::abs(pts(i, 0)), std::abs(pts(i, 1))});
      }
    half = half > 0.0 ? 1.05 * half : 1.0;
  }

  // Frame.
  img.draw_line(x0, y0, x1, y0, black);
  img.draw_line(x0, y1, x1, y1, black);
  img.draw_line(x0, y0, x0, y1, black);
  img.draw_line(x1, y0, x1, y1, black);

  if (!spec.title.empty())
    img.draw_text((size - text_width(spec.title)) / 2, 6, spec.title, black);
  img.draw_text(x0, y1 + 6, tick_label(-half), black);
  const std::string hi = tick_label(half);
  img.draw_text(x1 - text_width(hi), y1 + 6, hi, black);

  auto to_px = [&](double v) {
    return x0 + static_cast<int>(std::lround((v + half) / (2.0 * half) * (x1 - x0)));
  };
  auto to_py = [&](double v) {
    return y0 + static_cast<int>(std::lround((half - v) / (2.0 * half) * (y1 - y0)));
  };

  for (std::size_t c = 0; c < clouds.size(); ++c) {
    const Rgb col = clouds.size() == 1 ? Rgb{31, 119, 180}
                                       : palette_color(static_cast<int>(c));
    const PointBatch& pts = clouds[c];
    for (Eigen::Index i = 0; i < pts.rows(); ++i) {
      if (!std::isfinite(pts(i, 0)) || !std::isfinite(pts(i, 1))) continue;
      const int px = to_px(pts(i, 0)), py = to_py(pts(i, 1));
      if (px < x0 || px > x1 || py < y0 || py > y1) continue;
      img.set(px, py, col);
      img.set(px + 1, py, col);
      img.set(px, py + 1, col);
      img.set(px + 1, py + 1, col);
    }
  }

  for (std::size_t c = 0; c < spec.labels.size() && c < clouds.size(); ++c) {
    const int ly = y0 + 6 + 12 * static_cast<int>(c);
    const Rgb col = clouds.size() == 1 ? Rgb{31, 119, 180}
                                       : palette_color(static_cast<int>(c));
    img.fill_rect(x1 - 14, ly, x1 - 7, ly + 6, col);
    img.draw_text(x1 - 18 - text_width(spec.labels[c]), ly, spec.labels[c], black);
  }
  return img;
}

Image render_curves(const std::vector<Curve>& curves, const CurveSpec& spec) {
  const int W = std::max(spec.width, 160), H = std::max(spec.height, 120);
  Image img(W, H);
  const Rgb black{0, 0, 0}, grid{220, 220, 220};
  const int left = 64, right = 16, top = 26, bottom = 40;
  const int x0 = left, x1 = W - 1 - right, y0 = top, y1 = H - 1 - bottom;

  double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin;
  double ymin = xmin, ymax = -xmin;
  for (const Curve& c : curves)
    for (std::size_t i = 0; i < c.xs.size(); ++i) {
      if (!std::isfinite(c.xs[i]) || !std::isfinite(c.ys[i])) continue;
      xmin = std::min(xmin, c.xs[i]);
      xmax = std::max(xmax, c.xs[i]);
      ymin = std::min(ymin, c.ys[i]);
      ymax = std::max(ymax, c.ys[i]);
    }
  if (!std::isfinite(xmin)) {
    xmin = 0.0;
    xmax = 1.0;
    ymin = 0.0;
    ymax = 1.0;
  }
  if (xmax <= xmin) xmax = xmin + 1.0;
  if (ymax <= ymin) {
    ymin -= 0.5;
    ymax += 0.5;
  } else {
    const double pad = 0.05 * (ymax - ymin);
    ymin -= pad;
    ymax += pad;
  }

  auto to_px = [&](double v) {
    return x0 + static_cast<int>(std::lround((v - xmin) / (xmax - xmin) * (x1 - x0)));
  };
  auto to_py = [&](double v) {
    return y0 + static_cast<int>(std::lround((ymax - v) / (ymax - ymin) * (y1 - y0)));
  };

  // Grid and ticks.
  const int kTicks = 5;
  for (int t = 0; t < kTicks; ++t) {
    const double fx = xmin + (xmax - xmin) * t / (kTicks - 1);
    const double fy = ymin + (ymax - ymin) * t / (kTicks - 1);
    const int px = to_px(fx), py = to_py(fy);
    if (t > 0 && t < kTicks - 1) {
      img.draw_line(px, y0, px, y1, grid);
      img.draw_line(x0, py, x1, py, grid);
    }
    const std::string xl = tick_label(fx), yl = tick_label(fy);
    img.draw_text(px - text_width(xl) / 2, y1 + 6, xl, black);
    img.draw_text(x0 - 6 - text_width(yl), py - 3, yl, black);
  }

  // Frame.
  img.draw_line(x0, y0, x1, y0, black);
  img.draw_line(x0, y1, x1, y1, black);
  img.draw_line(x0, y0, x0, y1, black);
  img.draw_line(x1, y0, x1, y1, black);

  if (!spec.title.empty())
    img.draw_text((W - text_width(spec.title)) / 2, 8, spec.title, black);
  if (!spec.x_label.empty())
    img.draw_text((W - text_width(spec.x_label)) / 2, H - 14, spec.x_label, black);
  if (!spec.y_label.empty()) img.draw_text(4, 8, spec.y_label, black);

  for (std::size_t c = 0; c < curves.size(); ++c) {
    const Rgb col = palette_color(static_cast<int>(c));
    bool pen_down = false;
    int lx = 0, ly = 0;
    for (std::size_t i = 0; i < curves[c].xs.size(); ++i) {
      if (!std::isfinite(curves[c].xs[i]) || !std::isfinite(curves[c].ys[i])) {
        pen_down = false;
        continue;
      }
      const int px = to_px(curves[c].xs[i]), py = to_py(curves[c].ys[i]);
      if (pen_down) img.draw_line(lx, ly, px, py, col);
      img.draw_disc(px, py, 2, col);
      lx = px;
      ly = py;
      pen_down = true;
    }
  }

  int legend_y = y0 + 6;
  for (std::size_t c = 0; c < curves.size(); ++c) {
    if (curves[c].label.empty()) continue;
    const Rgb col = palette_color(static_cast<int>(c));
    img.fill_rect(x1 - 26, legend_y + 2, x1 - 10, legend_y + 4, col);
    img.draw_text(x1 - 32 - text_width(curves[c].label), legend_y,
                  curves[c].label, black);
    legend_y += 12;
  }
  return img;
}

}  // namespace bridgelab
