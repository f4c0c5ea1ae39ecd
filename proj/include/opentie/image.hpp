#pragma once

#include <array>
#include <cctype>
#include <cstdlib>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>
#include <vector>

#include "opentie/error.hpp"

namespace opentie {

/// Row-major W x H raster.
template <typename T>
class Raster {
 public:
  using value_type = T;

  Raster() = default;
  Raster(int width, int height, T fill = T{})
      : width_(width), height_(height), data_(checked_size(width, height), fill) {}
  Raster(int width, int height, std::vector<T> data)
      : width_(width), height_(height), data_(std::move(data)) {
    if (data_.size() != checked_size(width, height)) {
      throw Error("image", ErrorCode::SizeMismatch, "pixel count does not match dimensions");
    }
  }

  int width() const { return width_; }
  int height() const { return height_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  T& operator()(int u, int v) { return data_[index(u, v)]; }
  const T& operator()(int u, int v) const { return data_[index(u, v)]; }

  bool contains(int u, int v) const { return u >= 0 && v >= 0 && u < width_ && v < height_; }
  bool same_shape(int w, int h) const { return w == width_ && h == height_; }
  template <typename U>
  bool same_shape(const Raster<U>& o) const {
    return o.width() == width_ && o.height() == height_;
  }

  std::vector<T>& data() { return data_; }
  const std::vector<T>& data() const { return data_; }

  friend bool operator==(const Raster&, const Raster&) = default;

 private:
  static std::size_t checked_size(int w, int h) {
    if (w < 0 || h < 0) throw Error("image", ErrorCode::InvalidArgument, "negative dimensions");
    return static_cast<std::size_t>(w) * static_cast<std::size_t>(h);
  }
  std::size_t index(int u, int v) const {
    return static_cast<std::size_t>(v) * static_cast<std::size_t>(width_) +
           static_cast<std::size_t>(u);
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<T> data_;
};

using Rgb = std::array<std::uint8_t, 3>;
using GrayImage = Raster<std::uint8_t>;
using RgbImage = Raster<Rgb>;
// uint8_t rather than bool so the storage stays a contiguous span of bytes.
using BinaryMask = Raster<std::uint8_t>;

/// Disparities in pixels; any negative value marks an invalid pixel.
using DisparityMap = Raster<float>;
inline constexpr float kInvalidDisparity = -1.0f;

inline bool is_valid_disparity(float d) { return d >= 0.0f; }

inline std::size_t count_valid(const DisparityMap& disp) {
  std::size_t n = 0;
  for (float d : disp.data()) n += is_valid_disparity(d) ? 1 : 0;
  return n;
}

inline RgbImage gray_to_rgb(const GrayImage& gray) {
  RgbImage out(gray.width(), gray.height());
  for (std::size_t i = 0; i < gray.size(); ++i) {
    const auto g = gray.data()[i];
    out.data()[i] = {g, g, g};
  }
  return out;
}

// ---------------------------------------------------------------------------
// Netpbm (binary P5 / P6, maxval 255)

namespace detail {

inline std::string read_file_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("io", ErrorCode::FileError, "cannot open " + path);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_file_bytes(const std::string& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("io", ErrorCode::FileError, "cannot write " + path);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error("io", ErrorCode::FileError, "short write to " + path);
}

struct PnmHeader {
  std::string magic;
  int width = 0;
  int height = 0;
  int maxval = 0;
  std::size_t data_offset = 0;
};

inline PnmHeader parse_pnm_header(const std::string& bytes) {
  PnmHeader h;
  std::size_t pos = 0;
  auto skip_space_and_comments = [&] {
    while (pos < bytes.size()) {
      const char c = bytes[pos];
      if (c == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else if (c == ' ' || c == '\t' || c == '\n' || c == '\r') {
        ++pos;
      } else {
        break;
      }
    }
  };
  auto read_token = [&] {
    skip_space_and_comments();
    std::string tok;
    while (pos < bytes.size() && !std::isspace(static_cast<unsigned char>(bytes[pos]))) {
      tok += bytes[pos++];
    }
    return tok;
  };
  auto read_int = [&](const char* what) {
    const std::string tok = read_token();
    try {
      std::size_t used = 0;
      const int v = std::stoi(tok, &used);
      if (used != tok.size() || v <= 0) throw std::invalid_argument(tok);
      return v;
    } catch (const std::exception&) {
      throw Error("io", ErrorCode::ParseError, std::string("bad netpbm ") + what);
    }
  };
  h.magic = read_token();
  h.width = read_int("width");
  h.height = read_int("height");
  h.maxval = read_int("maxval");
  if (h.maxval != 255) throw Error("io", ErrorCode::ParseError, "netpbm maxval must be 255");
  if (pos >= bytes.size()) throw Error("io", ErrorCode::ParseError, "truncated netpbm header");
  h.data_offset = pos + 1;  // single whitespace byte after maxval
  return h;
}

inline std::string pnm_header(const char* magic, int w, int h) {
  return std::string(magic) + "\n" + std::to_string(w) + " " + std::to_string(h) + "\n255\n";
}

}  // namespace detail

inline std::string encode_pgm(const GrayImage& img) {
  std::string out = detail::pnm_header("P5", img.width(), img.height());
  out.append(reinterpret_cast<const char*>(img.data().data()), img.size());
  return out;
}

inline std::string encode_ppm(const RgbImage& img) {
  std::string out = detail::pnm_header("P6", img.width(), img.height());
  out.reserve(out.size() + img.size() * 3);
  for (const auto& px : img.data()) {
    out.append(reinterpret_cast<const char*>(px.data()), 3);
  }
  return out;
}

inline GrayImage decode_pgm(const std::string& bytes) {
  const auto h = detail::parse_pnm_header(bytes);
  if (h.magic != "P5") throw Error("io", ErrorCode::ParseError, "expected P5 image");
  const std::size_t n = static_cast<std::size_t>(h.width) * static_cast<std::size_t>(h.height);
  if (bytes.size() < h.data_offset + n) {
    throw Error("io", ErrorCode::ParseError, "truncated P5 pixel data");
  }
  std::vector<std::uint8_t> px(bytes.begin() + static_cast<std::ptrdiff_t>(h.data_offset),
                               bytes.begin() + static_cast<std::ptrdiff_t>(h.data_offset + n));
  return GrayImage(h.width, h.height, std::move(px));
}

inline RgbImage decode_ppm(const std::string& bytes) {
  const auto h = detail::parse_pnm_header(bytes);
  if (h.magic != "P6") throw Error("io", ErrorCode::ParseError, "expected P6 image");
  const std::size_t n = static_cast<std::size_t>(h.width) * static_cast<std::size_t>(h.height);
  if (bytes.size() < h.data_offset + 3 * n) {
    throw Error("io", ErrorCode::ParseError, "truncated P6 pixel data");
  }
  RgbImage img(h.width, h.height);
  const auto* src = reinterpret_cast<const std::uint8_t*>(bytes.data() + h.data_offset);
  for (std::size_t i = 0; i < n; ++i) {
    img.data()[i] = {src[3 * i], src[3 * i + 1], src[3 * i + 2]};
  }
  return img;
}

/// Reads either P5 (promoted to gray RGB) or P6.
inline RgbImage decode_any_as_rgb(const std::string& bytes) {
  const auto h = detail::parse_pnm_header(bytes);
  if (h.magic == "P5") return gray_to_rgb(decode_pgm(bytes));
  return decode_ppm(bytes);
}

inline GrayImage read_pgm(const std::string& path) {
  return decode_pgm(detail::read_file_bytes(path));
}
inline RgbImage read_ppm(const std::string& path) {
  return decode_ppm(detail::read_file_bytes(path));
}
inline void write_pgm(const std::string& path, const GrayImage& img) {
  detail::write_file_bytes(path, encode_pgm(img));
}
inline void write_ppm(const std::string& path, const RgbImage& img) {
  detail::write_file_bytes(path, encode_ppm(img));
}

/// Mask as P5 with 0 = false and 255 = true.
inline GrayImage mask_to_gray(const BinaryMask& mask) {
  GrayImage out(mask.width(), mask.height());
  for (std::size_t i = 0; i < mask.size(); ++i) out.data()[i] = mask.data()[i] ? 255 : 0;
  return out;
}

inline BinaryMask gray_to_mask(const GrayImage& gray) {
  BinaryMask out(gray.width(), gray.height());
  for (std::size_t i = 0; i < gray.size(); ++i) out.data()[i] = gray.data()[i] >= 128 ? 1 : 0;
  return out;
}

// ---------------------------------------------------------------------------
// Disparity text: "width height" then one row per line, invalid written as -1.

inline std::string format_real(double v, int significant_digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", significant_digits, v);
  return buf;
}

inline std::string encode_disparity(const DisparityMap& disp) {
  std::string out = std::to_string(disp.width()) + " " + std::to_string(disp.height()) + "\n";
  for (int v = 0; v < disp.height(); ++v) {
    for (int u = 0; u < disp.width(); ++u) {
      if (u > 0) out += ' ';
      const float d = disp(u, v);
      out += is_valid_disparity(d) ? format_real(d, 6) : "-1";
    }
    out += '\n';
  }
  return out;
}

inline DisparityMap decode_disparity(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  auto next_line = [&]() -> bool {
    while (std::getline(in, line)) {
      ++line_no;
      if (line.find_first_not_of(" \t\r") != std::string::npos) return true;
    }
    return false;
  };
  if (!next_line()) throw ParseError("stereo", 1, "missing disparity header");
  int w = 0;
  int h = 0;
  {
    std::istringstream hs(line);
    std::string extra;
    if (!(hs >> w >> h) || (hs >> extra) || w <= 0 || h <= 0) {
      throw ParseError("stereo", line_no, "expected 'width height'");
    }
  }
  DisparityMap disp(w, h, kInvalidDisparity);
  for (int v = 0; v < h; ++v) {
    if (!next_line()) throw ParseError("stereo", line_no + 1, "missing disparity row");
    const char* p = line.c_str();
    char* end = nullptr;
    for (int u = 0; u < w; ++u) {
      const double d = std::strtod(p, &end);
      if (end == p) throw ParseError("stereo", line_no, "expected " + std::to_string(w) + " values");
      disp(u, v) = d < 0.0 ? kInvalidDisparity : static_cast<float>(d);
      p = end;
    }
    while (*p == ' ' || *p == '\t' || *p == '\r') ++p;
    if (*p != '\0') throw ParseError("stereo", line_no, "too many values in row");
  }
  return disp;
}

inline DisparityMap read_disparity(const std::string& path) {
  return decode_disparity(detail::read_file_bytes(path));
}
inline void write_disparity(const std::string& path, const DisparityMap& disp) {
  detail::write_file_bytes(path, encode_disparity(disp));
}

}  // namespace opentie
