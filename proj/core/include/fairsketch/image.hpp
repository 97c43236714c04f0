#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

namespace fairsketch::image {

/// 8-bit image, row-major, interleaved channels (1 = grayscale, 3 = RGB).
struct ImageBuffer {
  std::size_t width = 0;
  std::size_t height = 0;
  std::size_t channels = 0;
  std::vector<std::uint8_t> pixels;

  std::uint8_t& at(std::size_t x, std::size_t y, std::size_t c) {
    return pixels[(y * width + x) * channels + c];
  }
  std::uint8_t at(std::size_t x, std::size_t y, std::size_t c) const {
    return pixels[(y * width + x) * channels + c];
  }
};

/// Loads a PNG or binary PPM (P6) image as grayscale or RGB.
/// Palette, 16-bit, and alpha PNG variants are folded down to 8-bit gray/RGB.
ImageBuffer read_image(const std::filesystem::path& path);

/// Writes a 1- or 3-channel buffer as an 8-bit PNG.
void write_png(const std::filesystem::path& path, const ImageBuffer& img);

/// Box-filter resize (pixel-area averaging); deterministic, channel-preserving.
ImageBuffer resize_box(const ImageBuffer& img, std::size_t out_width, std::size_t out_height);

}  // namespace fairsketch::image
