#pragma once

#include <cctype>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "cilp/common.hpp"

namespace cilp {

struct Point {
  int x = 0;
  int y = 0;
  friend bool operator==(const Point&, const Point&) = default;
};

/// Row-major binary raster, origin top-left, y growing downward.
class BinaryMask {
 public:
  BinaryMask() = default;
  BinaryMask(int width, int height) : width_(width), height_(height) {
    if (width < 0 || height < 0) throw std::invalid_argument("negative mask size");
    pixels_.assign(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), 0);
  }

  int width() const { return width_; }
  int height() const { return height_; }
  std::size_t size() const { return pixels_.size(); }
  bool in_bounds(int x, int y) const { return x >= 0 && y >= 0 && x < width_ && y < height_; }

  std::uint8_t at(int x, int y) const { return pixels_[index(x, y)]; }
  void set(int x, int y, bool value = true) { pixels_[index(x, y)] = value ? 1 : 0; }

  std::span<const std::uint8_t> pixels() const { return pixels_; }
  std::span<std::uint8_t> pixels() { return pixels_; }

  std::size_t count() const {
    std::size_t n = 0;
    for (auto v : pixels_) n += v;
    return n;
  }

  friend bool operator==(const BinaryMask&, const BinaryMask&) = default;

 private:
  std::size_t index(int x, int y) const {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x);
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> pixels_;
};

/// Binary PGM (P5) with maxval 1, one byte per pixel.
inline std::string encode_pgm(const BinaryMask& mask) {
  std::string out = "P5\n" + std::to_string(mask.width()) + " " + std::to_string(mask.height()) + "\n1\n";
  out.append(reinterpret_cast<const char*>(mask.pixels().data()), mask.size());
  return out;
}

inline BinaryMask decode_pgm(const std::string& bytes) {
  std::size_t pos = 0;
  auto header_token = [&]() -> std::string {
    for (;;) {
      while (pos < bytes.size() && std::isspace(static_cast<unsigned char>(bytes[pos]))) ++pos;
      if (pos < bytes.size() && bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
        continue;
      }
      break;
    }
    std::string tok;
    while (pos < bytes.size() && !std::isspace(static_cast<unsigned char>(bytes[pos]))) tok += bytes[pos++];
    if (tok.empty()) throw Error("truncated PGM header");
    return tok;
  };
  if (header_token() != "P5") throw Error("not a binary PGM (P5)");
  int w = 0, h = 0, maxval = 0;
  try {
    w = std::stoi(header_token());
    h = std::stoi(header_token());
    maxval = std::stoi(header_token());
  } catch (const std::logic_error&) {
    throw Error("malformed PGM header");
  }
  if (maxval < 1 || maxval > 255) throw Error("unsupported PGM maxval " + std::to_string(maxval));
  ++pos;  // single whitespace after maxval
  BinaryMask mask(w, h);
  if (bytes.size() < pos + mask.size()) throw Error("truncated PGM data");
  auto px = mask.pixels();
  for (std::size_t i = 0; i < px.size(); ++i) px[i] = static_cast<unsigned char>(bytes[pos + i]) > 0 ? 1 : 0;
  return mask;
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::filesystem::path& path, std::string_view bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error("write failed: " + path.string());
}

inline void write_pgm(const std::filesystem::path& path, const BinaryMask& mask) { write_file(path, encode_pgm(mask)); }
inline BinaryMask read_pgm(const std::filesystem::path& path) { return decode_pgm(read_file(path)); }

}  // namespace cilp
