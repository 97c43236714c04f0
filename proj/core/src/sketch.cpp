#include "fairsketch/sketch.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>

#include "fairsketch/csv.hpp"
#include "fairsketch/error.hpp"

namespace fairsketch::sketch {
namespace {

namespace fs = std::filesystem;

std::string lower_ext(const fs::path& p) {
  std::string ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return ext;
}

/// Horizontal pass of the separable convolution; transpose-free vertical pass below.
void blur_rows(const Plane& src, Plane& dst, const std::vector<double>& kernel) {
  const std::ptrdiff_t radius = static_cast<std::ptrdiff_t>(kernel.size() / 2);
  const std::ptrdiff_t w = static_cast<std::ptrdiff_t>(src.width);
  for (std::size_t y = 0; y < src.height; ++y)
    for (std::ptrdiff_t x = 0; x < w; ++x) {
      double acc = 0.0;
      for (std::ptrdiff_t t = -radius; t <= radius; ++t) {
        const std::ptrdiff_t sx = std::clamp<std::ptrdiff_t>(x + t, 0, w - 1);
        acc += kernel[static_cast<std::size_t>(t + radius)] *
               src.at(static_cast<std::size_t>(sx), y);
      }
      dst.at(static_cast<std::size_t>(x), y) = acc;
    }
}

void blur_cols(const Plane& src, Plane& dst, const std::vector<double>& kernel) {
  const std::ptrdiff_t radius = static_cast<std::ptrdiff_t>(kernel.size() / 2);
  const std::ptrdiff_t h = static_cast<std::ptrdiff_t>(src.height);
  for (std::ptrdiff_t y = 0; y < h; ++y)
    for (std::size_t x = 0; x < src.width; ++x) {
      double acc = 0.0;
      for (std::ptrdiff_t t = -radius; t <= radius; ++t) {
        const std::ptrdiff_t sy = std::clamp<std::ptrdiff_t>(y + t, 0, h - 1);
        acc += kernel[static_cast<std::size_t>(t + radius)] *
               src.at(x, static_cast<std::size_t>(sy));
      }
      dst.at(x, static_cast<std::size_t>(y)) = acc;
    }
}

}  // namespace

void validate(const SketchParams& params) {
  if (!(params.sigma > 0.0)) throw Error(ErrorKind::Config, "sigma must be positive");
  if (!(params.k > 1.0)) throw Error(ErrorKind::Config, "k must exceed 1");
  if (!(params.tau > 0.0 && params.tau <= 1.0))
    throw Error(ErrorKind::Config, "tau must lie in (0, 1]");
  if (!(params.epsilon >= 0.0 && params.epsilon <= 1.0))
    throw Error(ErrorKind::Config, "epsilon must lie in [0, 1]");
  if (!(params.phi > 0.0)) throw Error(ErrorKind::Config, "phi must be positive");
}

image::ImageBuffer to_grayscale(const image::ImageBuffer& img) {
  if (img.channels == 1) return img;
  if (img.channels != 3)
    throw Error(ErrorKind::Format, "grayscale conversion expects 1 or 3 channels");
  image::ImageBuffer gray;
  gray.width = img.width;
  gray.height = img.height;
  gray.channels = 1;
  gray.pixels.resize(img.width * img.height);
  for (std::size_t i = 0; i < gray.pixels.size(); ++i) {
    const double r = img.pixels[i * 3];
    const double g = img.pixels[i * 3 + 1];
    const double b = img.pixels[i * 3 + 2];
    gray.pixels[i] = static_cast<std::uint8_t>(std::lround(0.299 * r + 0.587 * g + 0.114 * b));
  }
  return gray;
}

Plane to_plane(const image::ImageBuffer& gray) {
  if (gray.channels != 1) throw Error(ErrorKind::Format, "plane conversion expects 1 channel");
  Plane plane(gray.width, gray.height);
  for (std::size_t i = 0; i < gray.pixels.size(); ++i)
    plane.values[i] = static_cast<double>(gray.pixels[i]);
  return plane;
}

std::vector<double> gaussian_kernel(double sigma) {
  if (!(sigma > 0.0)) throw Error(ErrorKind::Config, "sigma must be positive");
  const std::ptrdiff_t radius = static_cast<std::ptrdiff_t>(std::ceil(3.0 * sigma));
  std::vector<double> kernel(static_cast<std::size_t>(2 * radius + 1));
  const double inv2s2 = 1.0 / (2.0 * sigma * sigma);
  double sum = 0.0;
  for (std::ptrdiff_t t = -radius; t <= radius; ++t) {
    const double v = std::exp(-static_cast<double>(t * t) * inv2s2);
    kernel[static_cast<std::size_t>(t + radius)] = v;
    sum += v;
  }
  for (double& v : kernel) v /= sum;
  return kernel;
}

Plane gaussian_blur(const Plane& plane, double sigma) {
  if (plane.width == 0 || plane.height == 0)
    throw Error(ErrorKind::Shape, "cannot blur an empty plane");
  const std::vector<double> kernel = gaussian_kernel(sigma);
  Plane tmp(plane.width, plane.height);
  Plane out(plane.width, plane.height);
  blur_rows(plane, tmp, kernel);
  blur_cols(tmp, out, kernel);
  return out;
}

image::ImageBuffer xdog_sketch(const image::ImageBuffer& img, const SketchParams& params) {
  validate(params);
  const image::ImageBuffer gray = to_grayscale(img);
  const Plane plane = to_plane(gray);
  const Plane narrow = gaussian_blur(plane, params.sigma);
  const Plane wide = gaussian_blur(plane, params.k * params.sigma);

  image::ImageBuffer out;
  out.width = gray.width;
  out.height = gray.height;
  out.channels = 1;
  out.pixels.resize(gray.pixels.size());
  for (std::size_t i = 0; i < out.pixels.size(); ++i) {
    const double d = narrow.values[i] - params.tau * wide.values[i];
    double v = 255.0;
    if (d < params.epsilon)
      v = std::lround(255.0 * (1.0 + std::tanh(params.phi * (d - params.epsilon))) / 2.0);
    out.pixels[i] = static_cast<std::uint8_t>(std::clamp(v, 0.0, 255.0));
  }
  return out;
}

const char* to_string(SketchMode mode) noexcept {
  return mode == SketchMode::Grayscale ? "grayscale" : "sketch";
}

SketchMode sketch_mode_from_string(const std::string& s) {
  if (s == "grayscale") return SketchMode::Grayscale;
  if (s == "sketch") return SketchMode::Sketch;
  throw Error(ErrorKind::Config, "unknown sketch mode '" + s + "'");
}

SketchifyResult sketchify_dataset(const fs::path& in_dir, const fs::path& out_dir,
                                  const SketchParams& params, SketchMode mode) {
  validate(params);
  if (!fs::is_directory(in_dir))
    throw Error(ErrorKind::Io, "input directory '" + in_dir.string() + "' is not readable");

  std::vector<fs::path> files;
  SketchifyResult result;
  for (const auto& entry : fs::recursive_directory_iterator(in_dir)) {
    if (!entry.is_regular_file()) continue;
    const std::string ext = lower_ext(entry.path());
    if (ext == ".png" || ext == ".ppm")
      files.push_back(fs::relative(entry.path(), in_dir));
    else
      result.warnings.push_back("skipped non-image file '" +
                                fs::relative(entry.path(), in_dir).generic_string() + "'");
  }
  if (files.empty())
    throw Error(ErrorKind::EmptyDataset,
                "no PNG or PPM images under '" + in_dir.string() + "'");
  std::sort(files.begin(), files.end(),
            [](const fs::path& a, const fs::path& b) { return a.generic_string() < b.generic_string(); });

  fs::create_directories(out_dir);
  for (const fs::path& rel : files) {
    ManifestEntry entry;
    entry.input = rel.generic_string();
    entry.mode = mode;
    fs::path out_rel = rel;
    out_rel.replace_extension(".png");
    try {
      const image::ImageBuffer img = image::read_image(in_dir / rel);
      const image::ImageBuffer converted =
          mode == SketchMode::Grayscale ? to_grayscale(img) : xdog_sketch(img, params);
      fs::create_directories((out_dir / out_rel).parent_path());
      image::write_png(out_dir / out_rel, converted);
      entry.output = out_rel.generic_string();
      entry.status = "ok";
      ++result.converted;
    } catch (const Error& e) {
      entry.status = std::string("error: ") + e.what();
      result.warnings.push_back("failed to convert '" + entry.input + "': " + e.what());
      ++result.failed;
    }
    result.entries.push_back(std::move(entry));
  }

  result.manifest_path = out_dir / "manifest.csv";
  std::ofstream manifest(result.manifest_path);
  if (!manifest)
    throw Error(ErrorKind::Io, "cannot write '" + result.manifest_path.string() + "'");
  csv::write_row(manifest, {"input", "output", "mode", "status"});
  for (const auto& entry : result.entries)
    csv::write_row(manifest, {entry.input, entry.output, to_string(entry.mode), entry.status});
  return result;
}

}  // namespace fairsketch::sketch
