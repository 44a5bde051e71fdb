#include <png.h>

#include <array>
#include <cctype>
#include <cstdio>
#include <string>
#include <vector>

#include "lawarea/error.hpp"
#include "lawarea/eval.hpp"

namespace lawarea {

namespace {

// 5x7 glyphs, one byte per row, bit 4 = leftmost column.
struct Glyph {
  char c;
  std::array<std::uint8_t, 7> rows;
};

constexpr Glyph kFont[] = {
    {'0', {0x0E, 0x11, 0x13, 0x15, 0x19, 0x11, 0x0E}}, {'1', {0x04, 0x0C, 0x04, 0x04, 0x04, 0x04, 0x0E}},
    {'2', {0x0E, 0x11, 0x01, 0x02, 0x04, 0x08, 0x1F}}, {'3', {0x1F, 0x02, 0x04, 0x02, 0x01, 0x11, 0x0E}},
    {'4', {0x02, 0x06, 0x0A, 0x12, 0x1F, 0x02, 0x02}}, {'5', {0x1F, 0x10, 0x1E, 0x01, 0x01, 0x11, 0x0E}},
    {'6', {0x06, 0x08, 0x10, 0x1E, 0x11, 0x11, 0x0E}}, {'7', {0x1F, 0x01, 0x02, 0x04, 0x08, 0x08, 0x08}},
    {'8', {0x0E, 0x11, 0x11, 0x0E, 0x11, 0x11, 0x0E}}, {'9', {0x0E, 0x11, 0x11, 0x0F, 0x01, 0x02, 0x0C}},
    {'.', {0x00, 0x00, 0x00, 0x00, 0x00, 0x0C, 0x0C}}, {'-', {0x00, 0x00, 0x00, 0x1F, 0x00, 0x00, 0x00}},
    {'A', {0x0E, 0x11, 0x11, 0x1F, 0x11, 0x11, 0x11}}, {'B', {0x1E, 0x11, 0x11, 0x1E, 0x11, 0x11, 0x1E}},
    {'C', {0x0E, 0x11, 0x10, 0x10, 0x10, 0x11, 0x0E}}, {'D', {0x1C, 0x12, 0x11, 0x11, 0x11, 0x12, 0x1C}},
    {'E', {0x1F, 0x10, 0x10, 0x1E, 0x10, 0x10, 0x1F}}, {'F', {0x1F, 0x10, 0x10, 0x1E, 0x10, 0x10, 0x10}},
    {'G', {0x0E, 0x11, 0x10, 0x17, 0x11, 0x11, 0x0F}}, {'H', {0x11, 0x11, 0x11, 0x1F, 0x11, 0x11, 0x11}},
    {'I', {0x0E, 0x04, 0x04, 0x04, 0x04, 0x04, 0x0E}}, {'J', {0x07, 0x02, 0x02, 0x02, 0x02, 0x12, 0x0C}},
    {'K', {0x11, 0x12, 0x14, 0x18, 0x14, 0x12, 0x11}}, {'L', {0x10, 0x10, 0x10, 0x10, 0x10, 0x10, 0x1F}},
    {'M', {0x11, 0x1B, 0x15, 0x15, 0x11, 0x11, 0x11}}, {'N', {0x11, 0x11, 0x19, 0x15, 0x13, 0x11, 0x11}},
    {'O', {0x0E, 0x11, 0x11, 0x11, 0x11, 0x11, 0x0E}}, {'P', {0x1E, 0x11, 0x11, 0x1E, 0x10, 0x10, 0x10}},
    {'Q', {0x0E, 0x11, 0x11, 0x11, 0x15, 0x12, 0x0D}}, {'R', {0x1E, 0x11, 0x11, 0x1E, 0x14, 0x12, 0x11}},
    {'S', {0x0F, 0x10, 0x10, 0x0E, 0x01, 0x01, 0x1E}}, {'T', {0x1F, 0x04, 0x04, 0x04, 0x04, 0x04, 0x04}},
    {'U', {0x11, 0x11, 0x11, 0x11, 0x11, 0x11, 0x0E}}, {'V', {0x11, 0x11, 0x11, 0x11, 0x11, 0x0A, 0x04}},
    {'W', {0x11, 0x11, 0x11, 0x15, 0x15, 0x15, 0x0A}}, {'X', {0x11, 0x11, 0x0A, 0x04, 0x0A, 0x11, 0x11}},
    {'Y', {0x11, 0x11, 0x11, 0x0A, 0x04, 0x04, 0x04}}, {'Z', {0x1F, 0x01, 0x02, 0x04, 0x08, 0x10, 0x1F}},
};

constexpr int kGlyphAdvance = 6;
constexpr int kCellWidth = 30;
constexpr int kCellHeight = 16;
constexpr int kLeft = 34;
constexpr int kTop = 30;
constexpr int kMargin = 8;

struct Rgb {
  std::uint8_t r, g, b;
};

class Canvas {
 public:
  Canvas(int width, int height) : width_(width), height_(height), pixels_(static_cast<std::size_t>(width * height * 3), 255) {}

  void fill(int x0, int y0, int w, int h, Rgb color) {
    for (int y = y0; y < y0 + h; ++y) {
      for (int x = x0; x < x0 + w; ++x) set(x, y, color);
    }
  }

  void text(int x, int y, const std::string& s, Rgb color) {
    for (char raw : s) {
      const char c = static_cast<char>(std::toupper(static_cast<unsigned char>(raw)));
      for (const auto& glyph : kFont) {
        if (glyph.c != c) continue;
        for (int row = 0; row < 7; ++row) {
          for (int col = 0; col < 5; ++col) {
            if (glyph.rows[static_cast<std::size_t>(row)] & (0x10 >> col)) set(x + col, y + row, color);
          }
        }
      }
      x += kGlyphAdvance;
    }
  }

  int width() const { return width_; }
  int height() const { return height_; }
  const std::uint8_t* row(int y) const { return pixels_.data() + static_cast<std::size_t>(y * width_ * 3); }

 private:
  void set(int x, int y, Rgb c) {
    if (x < 0 || y < 0 || x >= width_ || y >= height_) return;
    auto* p = pixels_.data() + static_cast<std::size_t>((y * width_ + x) * 3);
    p[0] = c.r;
    p[1] = c.g;
    p[2] = c.b;
  }

  int width_;
  int height_;
  std::vector<std::uint8_t> pixels_;
};

int text_width(const std::string& s) { return static_cast<int>(s.size()) * kGlyphAdvance - 1; }

// White to dark blue.
Rgb shade(double v) {
  auto lerp = [&](int a, int b) { return static_cast<std::uint8_t>(a + (b - a) * v + 0.5); };
  return {lerp(255, 8), lerp(255, 48), lerp(255, 107)};
}

void append_bytes(png_structp png, png_bytep data, png_size_t length) {
  auto* out = static_cast<std::string*>(png_get_io_ptr(png));
  out->append(reinterpret_cast<const char*>(data), length);
}

void flush_nothing(png_structp) {}

std::string encode_png(const Canvas& canvas) {
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw Error(ErrorCode::IoError, "png_create_write_struct failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    throw Error(ErrorCode::IoError, "png_create_info_struct failed");
  }
  std::string out;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw Error(ErrorCode::IoError, "PNG encoding failed");
  }
  png_set_write_fn(png, &out, append_bytes, flush_nothing);
  png_set_IHDR(png, info, static_cast<png_uint_32>(canvas.width()), static_cast<png_uint_32>(canvas.height()), 8,
               PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (int y = 0; y < canvas.height(); ++y) png_write_row(png, const_cast<png_bytep>(canvas.row(y)));
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  return out;
}

}  // namespace

std::string render_heatmap_png(const EvaluationReport& report) {
  const auto& counts = report.confusion.counts;
  const int n = static_cast<int>(counts.rows());
  if (n == 0 || counts.cols() != n || static_cast<int>(report.class_codes.size()) != n) {
    throw Error(ErrorCode::ShapeMismatch, "confusion matrix does not match the class list");
  }
  Canvas canvas(kLeft + n * kCellWidth + kMargin, kTop + n * kCellHeight + kMargin);
  const Rgb black{0, 0, 0};
  const Rgb white{255, 255, 255};
  const std::string axis = "PREDICTED";
  canvas.text(kLeft + (n * kCellWidth - text_width(axis)) / 2, 4, axis, black);

  for (int k = 0; k < n; ++k) {
    const auto& code = report.class_codes[static_cast<std::size_t>(k)];
    canvas.text(kLeft + k * kCellWidth + (kCellWidth - text_width(code)) / 2, kTop - 11, code, black);
    canvas.text(kLeft - 4 - text_width(code), kTop + k * kCellHeight + (kCellHeight - 7) / 2, code, black);
  }
  for (int i = 0; i < n; ++i) {
    const double row_total = static_cast<double>(counts.row(i).sum());
    for (int j = 0; j < n; ++j) {
      const double v = row_total > 0 ? static_cast<double>(counts(i, j)) / row_total : 0.0;
      const int x = kLeft + j * kCellWidth;
      const int y = kTop + i * kCellHeight;
      canvas.fill(x, y, kCellWidth - 1, kCellHeight - 1, shade(v));
      char label[16];
      std::snprintf(label, sizeof label, "%.2f", v);
      canvas.text(x + (kCellWidth - text_width(label)) / 2, y + (kCellHeight - 7) / 2, label, v > 0.5 ? white : black);
    }
  }
  return encode_png(canvas);
}

}  // namespace lawarea
