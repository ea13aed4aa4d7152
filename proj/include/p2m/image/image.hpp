#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace p2m {

/// 8-bit RGB raster, row-major, interleaved.
struct Image {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> rgb;

  Image() = default;
  Image(int w, int h);

  [[nodiscard]] bool empty() const { return width == 0 || height == 0; }
  std::uint8_t* at(int x, int y) { return rgb.data() + 3 * (static_cast<std::size_t>(y) * width + x); }
  [[nodiscard]] const std::uint8_t* at(int x, int y) const {
    return rgb.data() + 3 * (static_cast<std::size_t>(y) * width + x);
  }

  friend bool operator==(const Image&, const Image&) = default;
};

/// Decodes PNG (any bit depth / colour type, alpha dropped) or binary PPM (P6).
/// Throws IoError for unreadable or undecodable files.
Image load_image(const std::filesystem::path& path);

void save_png(const Image& img, const std::filesystem::path& path);

/// Bilinear resize with pixel-centre alignment.
Image resize_bilinear(const Image& img, int width, int height);

/// SHA-256 over dimensions and pixels; independent of the container format.
std::string pixel_hash(const Image& img);

}  // namespace p2m
