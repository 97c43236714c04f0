#pragma once

#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "fairsketch/image.hpp"
#include "fairsketch/rng.hpp"
#include "fairsketch/sketch.hpp"

namespace support {

/// Unique scratch directory, removed on destruction.
class TempDir {
public:
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("fairsketch_" + tag + "_" + std::to_string(::getpid()) + "_" +
             std::to_string(counter++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
  std::filesystem::path path_;
};

inline std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

inline void spit(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
}

/// Path of the CLI under test; settable for drivers that take it as an
/// argument, otherwise from the FAIRSKETCH_BIN environment variable.
inline std::string& cli_path() {
  static std::string path = [] {
    const char* env = std::getenv("FAIRSKETCH_BIN");
    return std::string(env ? env : "");
  }();
  return path;
}

/// Runs the CLI with the given argument string; returns the exit code and
/// captures stdout/stderr when requested.
inline int run_cli(const std::string& args, std::string* out = nullptr,
                   std::string* err = nullptr, const std::string& extra_prefix = {}) {
  static int counter = 0;
  const auto base = std::filesystem::temp_directory_path() /
                    ("fairsketch_cli_io_" + std::to_string(::getpid()) + "_" +
                     std::to_string(counter++));
  const std::string out_file = base.string() + ".out";
  const std::string err_file = base.string() + ".err";
  const std::string cmd = extra_prefix + "\"" + cli_path() + "\" " + args + " >" + out_file +
                          " 2>" + err_file;
  const int status = std::system(cmd.c_str());
  if (out) *out = slurp(out_file);
  if (err) *err = slurp(err_file);
  std::filesystem::remove(out_file);
  std::filesystem::remove(err_file);
  if (status < 0) return -1;
#ifdef WEXITSTATUS
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
#else
  return status;
#endif
}

/// Random RGB image plus a differently colored image with an identical
/// rounded-luma plane, for the color-invariance contract.
inline std::pair<fairsketch::image::ImageBuffer, fairsketch::image::ImageBuffer> luma_equal_pair(
    fairsketch::rng::SeededRng& rng, std::size_t width, std::size_t height) {
  using fairsketch::image::ImageBuffer;
  ImageBuffer a, b;
  a.width = b.width = width;
  a.height = b.height = height;
  a.channels = b.channels = 3;
  a.pixels.resize(width * height * 3);
  b.pixels.resize(width * height * 3);

  auto luma_of = [](int r, int g, int bl) {
    return std::lround(0.299 * r + 0.587 * g + 0.114 * bl);
  };
  for (std::size_t i = 0; i < width * height; ++i) {
    const int target = static_cast<int>(rng.bounded(256));
    a.pixels[i * 3] = a.pixels[i * 3 + 1] = a.pixels[i * 3 + 2] =
        static_cast<std::uint8_t>(target);
    int r = target, g = target, bl = target;
    for (int attempt = 0; attempt < 64; ++attempt) {
      const int cr = static_cast<int>(rng.bounded(256));
      const int cg = static_cast<int>(rng.bounded(256));
      const double need = (static_cast<double>(target) - 0.299 * cr - 0.587 * cg) / 0.114;
      const int cb = static_cast<int>(std::lround(std::clamp(need, 0.0, 255.0)));
      if (luma_of(cr, cg, cb) == target) {
        r = cr;
        g = cg;
        bl = cb;
        break;
      }
    }
    b.pixels[i * 3] = static_cast<std::uint8_t>(r);
    b.pixels[i * 3 + 1] = static_cast<std::uint8_t>(g);
    b.pixels[i * 3 + 2] = static_cast<std::uint8_t>(bl);
  }
  return {std::move(a), std::move(b)};
}

/// Synthetic labeled PNG corpus: the sensitive attribute z tints the
/// background (red vs blue), the label y picks the foreground shape (square
/// vs diagonal stripes), and y is correlated with z. Writes n images plus
/// manifest.csv (id,label,z) into dir.
inline void write_synthetic_corpus(const std::filesystem::path& dir, std::size_t n,
                                   std::uint64_t seed) {
  namespace img = fairsketch::image;
  std::filesystem::create_directories(dir);
  fairsketch::rng::SeededRng rng(seed);
  std::ostringstream manifest;
  manifest << "id,label,z\n";

  const std::size_t side = 24;
  for (std::size_t i = 0; i < n; ++i) {
    const int z = i % 2 == 0 ? 1 : 0;  // exactly balanced groups
    // Exact 75%/25% positive rates per group, cyclically assigned, so both
    // label strata stay populated even in small splits.
    const std::size_t within = i / 2;
    const int y = z == 1 ? ((within % 4) < 3 ? 1 : 0) : ((within % 4) < 1 ? 1 : 0);

    img::ImageBuffer im;
    im.width = im.height = side;
    im.channels = 3;
    im.pixels.resize(side * side * 3);
    for (std::size_t p = 0; p < side * side; ++p) {
      const int jitter = static_cast<int>(rng.bounded(24));
      const int hot = 170 + jitter;
      const int cold = 40 + jitter;
      im.pixels[p * 3] = static_cast<std::uint8_t>(z == 1 ? hot : cold);
      im.pixels[p * 3 + 1] = static_cast<std::uint8_t>(cold);
      im.pixels[p * 3 + 2] = static_cast<std::uint8_t>(z == 1 ? cold : hot);
    }
    const std::size_t lo = 6, hi = 18;
    for (std::size_t yy = lo; yy < hi; ++yy)
      for (std::size_t xx = lo; xx < hi; ++xx) {
        const bool draw = y == 1 ? true : ((xx + yy) % 4 < 2);
        if (!draw) continue;
        im.at(xx, yy, 0) = im.at(xx, yy, 1) = im.at(xx, yy, 2) = 235;
      }

    char name[32];
    std::snprintf(name, sizeof name, "img_%04zu.png", i);
    img::write_png(dir / name, im);
    manifest << name << ',' << y << ',' << z << '\n';
  }
  spit(dir / "manifest.csv", manifest.str());
}

}  // namespace support
