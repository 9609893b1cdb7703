#pragma once

// 8-bit grayscale images (binary PGM, "P5", maxval 255) and the
// non-overlapping patch tiling used to turn one image into a data matrix.
//
// Layout: pixels are row-major. Patch j of a grid is at patch-row j / gw,
// patch-col j % gw, and its p*p pixels fill column j of the patch matrix in
// row-major order within the patch.

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include "rnmf/csv.hpp"
#include "rnmf/errors.hpp"
#include "rnmf/matrix.hpp"

namespace rnmf {

struct GrayImage {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<std::uint8_t> pixels;  // row-major, width * height

  std::uint8_t at(std::size_t row, std::size_t col) const { return pixels[row * width + col]; }
  friend bool operator==(const GrayImage&, const GrayImage&) = default;
};

inline std::uint8_t to_pixel(double value) {
  if (!(value > 0.0)) return 0;  // also maps NaN to 0
  if (value >= 255.0) return 255;
  return static_cast<std::uint8_t>(std::lround(value));
}

inline GrayImage parse_pgm(const std::string& bytes) {
  std::size_t pos = 0;
  auto skip_space_and_comments = [&] {
    while (pos < bytes.size()) {
      if (std::isspace(static_cast<unsigned char>(bytes[pos]))) {
        ++pos;
      } else if (bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else {
        break;
      }
    }
  };
  auto read_int = [&](const char* what) -> std::size_t {
    skip_space_and_comments();
    const std::size_t start = pos;
    while (pos < bytes.size() && std::isdigit(static_cast<unsigned char>(bytes[pos]))) ++pos;
    if (pos == start) throw FormatError(std::string("pgm: missing ") + what);
    return detail::parse_count(std::string_view(bytes).substr(start, pos - start), "pgm");
  };

  if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '5') {
    throw FormatError("pgm: bad magic (expected P5)");
  }
  pos = 2;
  GrayImage img;
  img.width = read_int("width");
  img.height = read_int("height");
  const std::size_t maxval = read_int("maxval");
  if (maxval != 255) throw FormatError("pgm: maxval must be 255");
  if (img.width == 0 || img.height == 0) throw FormatError("pgm: zero dimension");
  if (pos >= bytes.size() || !std::isspace(static_cast<unsigned char>(bytes[pos]))) {
    throw FormatError("pgm: truncated header");
  }
  ++pos;  // exactly one whitespace byte before the raster
  const std::size_t n = img.width * img.height;
  if (bytes.size() - pos < n) throw FormatError("pgm: truncated payload");
  img.pixels.assign(bytes.begin() + static_cast<std::ptrdiff_t>(pos),
                    bytes.begin() + static_cast<std::ptrdiff_t>(pos + n));
  return img;
}

inline std::string format_pgm(const GrayImage& img) {
  if (img.pixels.size() != img.width * img.height) {
    throw DimensionError("pgm: pixel count does not match dimensions");
  }
  std::string out = "P5\n" + std::to_string(img.width) + " " + std::to_string(img.height) +
                    "\n255\n";
  out.append(img.pixels.begin(), img.pixels.end());
  return out;
}

inline GrayImage read_pgm(const std::string& path) { return parse_pgm(read_text_file(path)); }

inline void write_pgm(const std::string& path, const GrayImage& img) {
  write_text_file(path, format_pgm(img));
}

// Real-valued height x width matrix to pixels (rounded, clamped to 0..255).
inline GrayImage image_from_matrix(const DenseMatrix& values) {
  GrayImage img{values.cols(), values.rows(), {}};
  img.pixels.reserve(values.size());
  for (double v : values.data()) img.pixels.push_back(to_pixel(v));
  return img;
}

inline DenseMatrix image_to_matrix(const GrayImage& img) {
  DenseMatrix m(img.height, img.width);
  for (std::size_t i = 0; i < img.pixels.size(); ++i) m.data()[i] = img.pixels[i];
  return m;
}

// Stack of equally sized images, one column each (pixels row-major).
inline DenseMatrix images_to_columns(const std::vector<GrayImage>& images) {
  if (images.empty()) throw DimensionError("images_to_columns: no images");
  const std::size_t d = images.front().pixels.size();
  DenseMatrix m(d, images.size());
  for (std::size_t j = 0; j < images.size(); ++j) {
    if (images[j].pixels.size() != d) throw DimensionError("images_to_columns: size mismatch");
    for (std::size_t i = 0; i < d; ++i) m(i, j) = images[j].pixels[i];
  }
  return m;
}

struct PatchGrid {
  std::size_t patch = 0;
  std::size_t grid_h = 0;
  std::size_t grid_w = 0;
  std::size_t height = 0;  // original image
  std::size_t width = 0;
  DenseMatrix columns;  // patch^2 x (grid_h * grid_w)
};

inline PatchGrid extract_patches(const GrayImage& img, std::size_t p) {
  if (p == 0) throw DomainError("extract_patches: patch size must be >= 1");
  if (p > img.width && p > img.height) {
    throw DomainError("extract_patches: patch size " + std::to_string(p) +
                      " exceeds image " + std::to_string(img.width) + "x" +
                      std::to_string(img.height));
  }
  PatchGrid g;
  g.patch = p;
  g.height = img.height;
  g.width = img.width;
  g.grid_h = (img.height + p - 1) / p;
  g.grid_w = (img.width + p - 1) / p;
  g.columns = DenseMatrix(p * p, g.grid_h * g.grid_w);
  for (std::size_t gr = 0; gr < g.grid_h; ++gr) {
    for (std::size_t gc = 0; gc < g.grid_w; ++gc) {
      const std::size_t col = gr * g.grid_w + gc;
      for (std::size_t r = 0; r < p; ++r) {
        // Edge replication for the padded border.
        const std::size_t y = std::min(gr * p + r, img.height - 1);
        for (std::size_t c = 0; c < p; ++c) {
          const std::size_t x = std::min(gc * p + c, img.width - 1);
          g.columns(r * p + c, col) = img.at(y, x);
        }
      }
    }
  }
  return g;
}

// Tile `columns` (same layout as grid.columns, e.g. a reconstruction UV)
// back into an image of the original size.
inline DenseMatrix reassemble_values(const PatchGrid& g, const DenseMatrix& columns) {
  if (columns.rows() != g.patch * g.patch || columns.cols() != g.grid_h * g.grid_w) {
    throw DimensionError("reassemble: patch matrix " + shape_str(columns) +
                         " does not match grid");
  }
  DenseMatrix out(g.height, g.width);
  const std::size_t p = g.patch;
  for (std::size_t y = 0; y < g.height; ++y) {
    for (std::size_t x = 0; x < g.width; ++x) {
      const std::size_t col = (y / p) * g.grid_w + x / p;
      out(y, x) = columns((y % p) * p + x % p, col);
    }
  }
  return out;
}

inline GrayImage reassemble(const PatchGrid& g, const DenseMatrix& columns) {
  return image_from_matrix(reassemble_values(g, columns));
}

inline GrayImage reassemble(const PatchGrid& g) { return reassemble(g, g.columns); }

}  // namespace rnmf
