#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "fairsketch/image.hpp"

namespace fairsketch::sketch {

/// Parameters of the extended difference-of-Gaussians line extractor.
struct SketchParams {
  double sigma = 1.0;    // base blur scale in pixels, > 0
  double k = 1.6;        // scale ratio between the two blurs, > 1
  double tau = 0.98;     // weight of the wider blur, in (0, 1]
  double epsilon = 0.1;  // edge threshold, in [0, 1]
  double phi = 10.0;     // soft-threshold sharpness, > 0
};

void validate(const SketchParams& params);

/// Double-precision gray plane on the 0..255 scale; all intermediates live here
/// so quantization happens exactly once, at the final output.
struct Plane {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<double> values;

  Plane() = default;
  Plane(std::size_t w, std::size_t h) : width(w), height(h), values(w * h, 0.0) {}
  double& at(std::size_t x, std::size_t y) { return values[y * width + x]; }
  double at(std::size_t x, std::size_t y) const { return values[y * width + x]; }
};

/// Luma conversion round(0.299 R + 0.587 G + 0.114 B); 1-channel input is returned unchanged.
image::ImageBuffer to_grayscale(const image::ImageBuffer& img);

/// Widens a 1-channel buffer into a double plane (values 0..255).
Plane to_plane(const image::ImageBuffer& gray);

/// Discrete 1-D Gaussian kernel of radius ceil(3 sigma), normalized to sum exactly 1.
std::vector<double> gaussian_kernel(double sigma);

/// Separable Gaussian convolution with edge-clamped borders.
Plane gaussian_blur(const Plane& plane, double sigma);

/// Extended difference-of-Gaussians sketch; output is a 1-channel image.
image::ImageBuffer xdog_sketch(const image::ImageBuffer& img, const SketchParams& params);

enum class SketchMode { Grayscale, Sketch };
const char* to_string(SketchMode mode) noexcept;
SketchMode sketch_mode_from_string(const std::string& s);

struct ManifestEntry {
  std::string input;   // path relative to the input directory
  std::string output;  // path relative to the output directory, empty on failure
  SketchMode mode = SketchMode::Sketch;
  std::string status;  // "ok" or an error description
};

struct SketchifyResult {
  std::vector<ManifestEntry> entries;
  std::vector<std::string> warnings;
  std::filesystem::path manifest_path;
  std::size_t converted = 0;
  std::size_t failed = 0;
};

/// Converts every PNG/PPM under in_dir (recursively, in sorted path order),
/// mirroring the directory layout under out_dir, and writes a manifest CSV
/// with header input,output,mode,status. Decode failures are recorded, not fatal.
SketchifyResult sketchify_dataset(const std::filesystem::path& in_dir,
                                  const std::filesystem::path& out_dir,
                                  const SketchParams& params, SketchMode mode);

}  // namespace fairsketch::sketch
