#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace opstage {

// Quantized grayscale raster: row-major, every pixel in [0, levels).
class GrayImage {
 public:
  GrayImage(int width, int height, int levels, std::vector<std::uint16_t> pixels);

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  int levels() const noexcept { return levels_; }
  std::span<const std::uint16_t> pixels() const noexcept { return pixels_; }

  std::uint16_t at(int row, int col) const noexcept {
    return pixels_[static_cast<std::size_t>(row) * width_ + col];
  }

  friend bool operator==(const GrayImage&, const GrayImage&) = default;

 private:
  int width_;
  int height_;
  int levels_;
  std::vector<std::uint16_t> pixels_;
};

// Raw (unquantized) raster as decoded from disk.
struct RawRaster {
  int width = 0;
  int height = 0;
  std::uint32_t max_value = 0;
  std::vector<std::uint32_t> values;  // row-major
};

// Uniform binning: pixel = floor(value * levels / (max_value + 1)).
GrayImage quantize_image(const RawRaster& raster, std::uint32_t max_value, int levels);

// PGM I/O. Reads P2 (ASCII) and P5 (binary, 8- or 16-bit big-endian).
// Color formats (P3/P6) and bitmaps are rejected.
RawRaster decode_pgm(std::string_view bytes);
RawRaster read_pgm(const std::filesystem::path& path);

// Writes a binary P5 file with maxval = levels - 1, so that re-quantizing
// at the same level count is the identity.
std::string encode_pgm(const GrayImage& img);
void write_pgm(const std::filesystem::path& path, const GrayImage& img);

}  // namespace opstage
