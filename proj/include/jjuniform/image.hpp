#pragma once

// 8-bit grayscale raster with a physical pixel scale, and binary PGM (P5)
// reading and writing. Wafer position and scale round-trip through `# jju`
// comment lines in the header.

#include <cctype>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "errors.hpp"
#include "shadow_model.hpp"

namespace jju {

struct GrayImage {
  int width = 0;
  int height = 0;
  double scale_nm_per_px = 1.0;
  std::vector<std::uint8_t> pixels; // row-major
  std::optional<WaferPoint> position;

  GrayImage() = default;
  GrayImage(int w, int h, double scale, std::uint8_t fill = 0)
      : width(w), height(h), scale_nm_per_px(scale),
        pixels(static_cast<std::size_t>(w) * static_cast<std::size_t>(h), fill) {
    validate();
  }

  void validate() const {
    if (width <= 0 || height <= 0) throw DataError("image dimensions must be positive");
    if (!(scale_nm_per_px > 0.0)) throw DataError("image scale must be positive");
    if (pixels.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height))
      throw DataError("image buffer size does not match its dimensions");
  }

  std::uint8_t& at(int x, int y) { return pixels[static_cast<std::size_t>(y) * width + x]; }
  std::uint8_t at(int x, int y) const { return pixels[static_cast<std::size_t>(y) * width + x]; }
};

namespace pgm {

inline void write(std::ostream& os, const GrayImage& img) {
  img.validate();
  os << "P5\n";
  char buf[128];
  std::snprintf(buf, sizeof buf, "# jju scale_nm=%.17g\n", img.scale_nm_per_px);
  os << buf;
  if (img.position) {
    std::snprintf(buf, sizeof buf, "# jju x_mm=%.17g y_mm=%.17g\n", img.position->x_mm,
                  img.position->y_mm);
    os << buf;
  }
  os << img.width << ' ' << img.height << "\n255\n";
  os.write(reinterpret_cast<const char*>(img.pixels.data()),
           static_cast<std::streamsize>(img.pixels.size()));
}

inline void write_file(const std::string& path, const GrayImage& img) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw DataError("cannot write '" + path + "'");
  write(os, img);
  if (!os) throw DataError("error writing '" + path + "'");
}

namespace detail {

struct HeaderMeta {
  std::optional<double> scale;
  std::optional<double> x, y;
};

inline void parse_comment(const std::string& line, HeaderMeta& meta) {
  std::istringstream is(line);
  std::string hash, tag, kv;
  is >> hash >> tag;
  if (tag != "jju") return;
  while (is >> kv) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) continue;
    const std::string key = kv.substr(0, eq);
    double v = 0.0;
    try {
      v = std::stod(kv.substr(eq + 1));
    } catch (const std::exception&) {
      continue;
    }
    if (key == "scale_nm") meta.scale = v;
    else if (key == "x_mm") meta.x = v;
    else if (key == "y_mm") meta.y = v;
  }
}

// Next whitespace-separated header token, collecting comments on the way.
inline std::string token(std::istream& is, HeaderMeta& meta) {
  std::string tok;
  while (true) {
    int c = is.peek();
    if (c == EOF) break;
    if (c == '#') {
      std::string line;
      std::getline(is, line);
      parse_comment(line, meta);
      if (!tok.empty()) break;
      continue;
    }
    if (std::isspace(c)) {
      is.get();
      if (!tok.empty()) break;
      continue;
    }
    tok.push_back(static_cast<char>(is.get()));
  }
  return tok;
}

} // namespace detail

/// Read a P5 image. `scale_override` wins over any scale in the header; a
/// scale must come from one of the two.
inline GrayImage read(std::istream& is, std::optional<double> scale_override = std::nullopt) {
  detail::HeaderMeta meta;
  if (detail::token(is, meta) != "P5") throw DataError("not a binary PGM (P5) image");
  int w = 0, h = 0, maxval = 0;
  try {
    w = std::stoi(detail::token(is, meta));
    h = std::stoi(detail::token(is, meta));
    maxval = std::stoi(detail::token(is, meta));
  } catch (const std::exception&) {
    throw DataError("malformed PGM header");
  }
  if (w <= 0 || h <= 0) throw DataError("PGM dimensions must be positive");
  if (maxval <= 0 || maxval > 255) throw DataError("only 8-bit PGM images are supported");
  const auto scale = scale_override ? scale_override : meta.scale;
  if (!scale) throw DataError("PGM image has no pixel scale; supply one explicitly");
  GrayImage img(w, h, *scale);
  is.read(reinterpret_cast<char*>(img.pixels.data()), static_cast<std::streamsize>(img.pixels.size()));
  if (is.gcount() != static_cast<std::streamsize>(img.pixels.size()))
    throw DataError("PGM pixel data truncated");
  if (meta.x && meta.y) img.position = WaferPoint{*meta.x, *meta.y};
  return img;
}

inline GrayImage read_file(const std::string& path, std::optional<double> scale_override = std::nullopt) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("cannot open '" + path + "'");
  return read(is, scale_override);
}

} // namespace pgm
} // namespace jju
