#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

namespace pocr {

// Row-major 8-bit grayscale image.
struct GrayImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;

  GrayImage() = default;
  GrayImage(int w, int h, std::uint8_t fill = 0);

  std::uint8_t at(int x, int y) const { return pixels[static_cast<std::size_t>(y) * width + x]; }
  std::uint8_t& at(int x, int y) { return pixels[static_cast<std::size_t>(y) * width + x]; }
  bool empty() const noexcept { return width == 0 || height == 0; }

  // Copy of the rectangle [x, x+w) x [y, y+h); must lie inside the image.
  GrayImage crop(int x, int y, int w, int h) const;

  friend bool operator==(const GrayImage&, const GrayImage&) = default;
};

// Binary PGM (P5, maxval 255).
void write_pgm(const GrayImage& image, const std::filesystem::path& path);
// Throws MissingAsset when the file cannot be opened and DecodeError when the
// header is malformed or the pixel payload is short.
GrayImage read_pgm(const std::filesystem::path& path);

}  // namespace pocr
