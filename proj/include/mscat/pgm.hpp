#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "mscat/errors.hpp"
#include "mscat/tensor_io.hpp"

namespace mscat {

/// 8-bit binary PGM bytes ("P5\n<w> <h>\n255\n" + w*h pixels), linear
/// min-max mapping to 0..255. A constant array maps to 128 everywhere.
inline std::vector<unsigned char> encode_pgm(std::span<const double> values, int width, int height) {
  if (width <= 0 || height <= 0 || values.size() != static_cast<std::size_t>(width) * height) {
    throw ValidationError("PGM dimensions do not match the array");
  }
  for (double v : values) {
    if (!std::isfinite(v)) throw ValidationError("PGM input contains a non-finite value");
  }
  const auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
  const double lo = *lo_it;
  const double hi = *hi_it;
  const std::string header = "P5\n" + std::to_string(width) + " " + std::to_string(height) + "\n255\n";
  std::vector<unsigned char> out(header.begin(), header.end());
  out.reserve(header.size() + values.size());
  for (double v : values) {
    if (hi == lo) {
      out.push_back(128);
    } else {
      out.push_back(static_cast<unsigned char>(std::lround(255.0 * (v - lo) / (hi - lo))));
    }
  }
  return out;
}

inline void render_pgm(std::span<const double> values, int width, int height, const std::filesystem::path& path) {
  write_file_atomic(path, encode_pgm(values, width, height));
}

struct GrayImage {
  int width = 0;
  int height = 0;
  std::vector<double> values;  // row-major, normalized by maxval to [0, 1]
};

/// Reads binary (P5, 8- or 16-bit) and ASCII (P2) graymaps.
inline GrayImage read_pgm(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  std::size_t pos = 0;
  auto skip_space = [&] {
    while (pos < bytes.size()) {
      if (bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else if (std::isspace(bytes[pos])) {
        ++pos;
      } else {
        break;
      }
    }
  };
  auto read_int = [&]() -> long {
    skip_space();
    if (pos >= bytes.size() || !std::isdigit(bytes[pos])) throw FormatError(path.string() + ": expected integer", pos);
    long v = 0;
    while (pos < bytes.size() && std::isdigit(bytes[pos])) {
      v = v * 10 + (bytes[pos] - '0');
      if (v > 1'000'000'000) throw FormatError(path.string() + ": integer too large", pos);
      ++pos;
    }
    return v;
  };
  if (bytes.size() < 2 || bytes[0] != 'P' || (bytes[1] != '5' && bytes[1] != '2')) {
    throw FormatError(path.string() + ": not a P5/P2 graymap", 0);
  }
  const bool binary = bytes[1] == '5';
  pos = 2;
  GrayImage img;
  img.width = static_cast<int>(read_int());
  img.height = static_cast<int>(read_int());
  const long maxval = read_int();
  if (img.width <= 0 || img.height <= 0 || maxval <= 0 || maxval > 65535) {
    throw FormatError(path.string() + ": invalid graymap header", pos);
  }
  const std::size_t count = static_cast<std::size_t>(img.width) * img.height;
  img.values.resize(count);
  if (binary) {
    ++pos;  // single whitespace byte after maxval
    const std::size_t bpp = maxval < 256 ? 1 : 2;
    if (bytes.size() < pos + count * bpp) throw FormatError(path.string() + ": truncated pixel data", bytes.size());
    for (std::size_t i = 0; i < count; ++i) {
      const unsigned v = bpp == 1 ? bytes[pos + i] : (bytes[pos + 2 * i] << 8) | bytes[pos + 2 * i + 1];
      img.values[i] = static_cast<double>(v) / maxval;
    }
  } else {
    for (std::size_t i = 0; i < count; ++i) img.values[i] = static_cast<double>(read_int()) / maxval;
  }
  for (double& v : img.values) v = std::clamp(v, 0.0, 1.0);
  return img;
}

/// Bilinear resampling onto an n x n grid (pixel-center aligned).
inline std::vector<double> resample_square(const GrayImage& img, int n) {
  std::vector<double> out(static_cast<std::size_t>(n) * n);
  auto at = [&](int x, int y) {
    x = std::clamp(x, 0, img.width - 1);
    y = std::clamp(y, 0, img.height - 1);
    return img.values[static_cast<std::size_t>(y) * img.width + x];
  };
  for (int iy = 0; iy < n; ++iy) {
    for (int ix = 0; ix < n; ++ix) {
      const double sx = (ix + 0.5) * img.width / n - 0.5;
      const double sy = (iy + 0.5) * img.height / n - 0.5;
      const int x0 = static_cast<int>(std::floor(sx));
      const int y0 = static_cast<int>(std::floor(sy));
      const double fx = sx - x0;
      const double fy = sy - y0;
      out[static_cast<std::size_t>(iy) * n + ix] = (1 - fx) * (1 - fy) * at(x0, y0) + fx * (1 - fy) * at(x0 + 1, y0) +
                                                   (1 - fx) * fy * at(x0, y0 + 1) + fx * fy * at(x0 + 1, y0 + 1);
    }
  }
  return out;
}

}  // namespace mscat
