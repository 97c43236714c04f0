#include "fairsketch/image.hpp"

#include <png.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <fstream>
#include <memory>
#include <string>

#include "fairsketch/error.hpp"

namespace fairsketch::image {
namespace {

void validate(const ImageBuffer& img, const char* what) {
  if (img.width == 0 || img.height == 0)
    throw Error(ErrorKind::Shape, std::string(what) + ": image has zero size");
  if (img.channels != 1 && img.channels != 3)
    throw Error(ErrorKind::Shape, std::string(what) + ": expected 1 or 3 channels");
  if (img.pixels.size() != img.width * img.height * img.channels)
    throw Error(ErrorKind::Shape, std::string(what) + ": pixel buffer size mismatch");
}

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FileHandle = std::unique_ptr<std::FILE, FileCloser>;

ImageBuffer read_png_file(const std::filesystem::path& path) {
  FileHandle fp(std::fopen(path.string().c_str(), "rb"));
  if (!fp) throw Error(ErrorKind::Io, "cannot open '" + path.string() + "'");

  unsigned char sig[8] = {};
  if (std::fread(sig, 1, 8, fp.get()) != 8 || png_sig_cmp(sig, 0, 8) != 0)
    throw Error(ErrorKind::Format, "'" + path.string() + "' is not a PNG file");

  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw Error(ErrorKind::Io, "libpng initialization failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    throw Error(ErrorKind::Io, "libpng initialization failed");
  }

  // Declared before setjmp so longjmp cannot skip their destructors.
  ImageBuffer img;
  std::vector<png_bytep> rows;

  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw Error(ErrorKind::Format, "corrupt PNG file '" + path.string() + "'");
  }

  png_init_io(png, fp.get());
  png_set_sig_bytes(png, 8);
  png_read_info(png, info);

  const png_byte color_type = png_get_color_type(png, info);
  const png_byte bit_depth = png_get_bit_depth(png, info);
  if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color_type == PNG_COLOR_TYPE_GRAY && bit_depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
  if (bit_depth == 16) png_set_strip_16(png);
  png_set_strip_alpha(png);
  png_read_update_info(png, info);

  img.width = png_get_image_width(png, info);
  img.height = png_get_image_height(png, info);
  img.channels = png_get_channels(png, info);
  if (img.channels != 1 && img.channels != 3) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw Error(ErrorKind::Format, "'" + path.string() + "' has an unsupported channel layout");
  }

  img.pixels.resize(img.width * img.height * img.channels);
  rows.resize(img.height);
  for (std::size_t y = 0; y < img.height; ++y)
    rows[y] = img.pixels.data() + y * img.width * img.channels;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return img;
}

void skip_ppm_space(std::istream& in) {
  for (;;) {
    const int c = in.peek();
    if (c == '#') {
      std::string line;
      std::getline(in, line);
    } else if (c != std::istream::traits_type::eof() && std::isspace(c)) {
      in.get();
    } else {
      return;
    }
  }
}

std::size_t read_ppm_number(std::istream& in, const std::string& path) {
  skip_ppm_space(in);
  long long v = -1;
  if (!(in >> v) || v < 0)
    throw Error(ErrorKind::Format, "malformed PPM header in '" + path + "'");
  return static_cast<std::size_t>(v);
}

ImageBuffer read_ppm_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open '" + path.string() + "'");
  char magic[2] = {};
  in.read(magic, 2);
  if (!in || magic[0] != 'P' || magic[1] != '6')
    throw Error(ErrorKind::Format, "'" + path.string() + "' is not a binary PPM file");

  ImageBuffer img;
  img.width = read_ppm_number(in, path.string());
  img.height = read_ppm_number(in, path.string());
  const std::size_t maxval = read_ppm_number(in, path.string());
  if (img.width == 0 || img.height == 0 || maxval == 0 || maxval > 255)
    throw Error(ErrorKind::Format, "unsupported PPM dimensions in '" + path.string() + "'");
  in.get();  // single whitespace byte after the header

  img.channels = 3;
  img.pixels.resize(img.width * img.height * 3);
  in.read(reinterpret_cast<char*>(img.pixels.data()),
          static_cast<std::streamsize>(img.pixels.size()));
  if (!in) throw Error(ErrorKind::Format, "truncated PPM file '" + path.string() + "'");
  if (maxval != 255)
    for (auto& p : img.pixels)
      p = static_cast<std::uint8_t>(
          std::llround(static_cast<double>(p) * 255.0 / static_cast<double>(maxval)));
  return img;
}

}  // namespace

ImageBuffer read_image(const std::filesystem::path& path) {
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  ImageBuffer img = ext == ".ppm" ? read_ppm_file(path) : read_png_file(path);
  validate(img, "read_image");
  return img;
}

void write_png(const std::filesystem::path& path, const ImageBuffer& img) {
  validate(img, "write_png");
  FileHandle fp(std::fopen(path.string().c_str(), "wb"));
  if (!fp) throw Error(ErrorKind::Io, "cannot write '" + path.string() + "'");

  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw Error(ErrorKind::Io, "libpng initialization failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    throw Error(ErrorKind::Io, "libpng initialization failed");
  }

  std::vector<png_bytep> rows(img.height);

  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw Error(ErrorKind::Io, "failed writing '" + path.string() + "'");
  }

  png_init_io(png, fp.get());
  png_set_compression_level(png, 6);
  png_set_IHDR(png, info, static_cast<png_uint_32>(img.width),
               static_cast<png_uint_32>(img.height), 8,
               img.channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  // pixels are only read here, so the const_cast is safe
  for (std::size_t y = 0; y < img.height; ++y)
    rows[y] = const_cast<png_bytep>(img.pixels.data() + y * img.width * img.channels);
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

ImageBuffer resize_box(const ImageBuffer& img, std::size_t out_width, std::size_t out_height) {
  validate(img, "resize_box");
  if (out_width == 0 || out_height == 0)
    throw Error(ErrorKind::Config, "resize target must be non-empty");

  ImageBuffer out;
  out.width = out_width;
  out.height = out_height;
  out.channels = img.channels;
  out.pixels.resize(out_width * out_height * img.channels);

  const double sx = static_cast<double>(img.width) / static_cast<double>(out_width);
  const double sy = static_cast<double>(img.height) / static_cast<double>(out_height);
  std::vector<double> acc(img.channels);

  for (std::size_t oy = 0; oy < out_height; ++oy) {
    const double y0 = static_cast<double>(oy) * sy;
    const double y1 = y0 + sy;
    for (std::size_t ox = 0; ox < out_width; ++ox) {
      const double x0 = static_cast<double>(ox) * sx;
      const double x1 = x0 + sx;
      std::fill(acc.begin(), acc.end(), 0.0);
      double total = 0.0;
      for (std::size_t iy = static_cast<std::size_t>(y0);
           iy < img.height && static_cast<double>(iy) < y1; ++iy) {
        const double wy = std::min(y1, static_cast<double>(iy) + 1.0) -
                          std::max(y0, static_cast<double>(iy));
        for (std::size_t ix = static_cast<std::size_t>(x0);
             ix < img.width && static_cast<double>(ix) < x1; ++ix) {
          const double wx = std::min(x1, static_cast<double>(ix) + 1.0) -
                            std::max(x0, static_cast<double>(ix));
          const double w = wx * wy;
          total += w;
          for (std::size_t c = 0; c < img.channels; ++c)
            acc[c] += w * static_cast<double>(img.at(ix, iy, c));
        }
      }
      for (std::size_t c = 0; c < img.channels; ++c)
        out.at(ox, oy, c) = static_cast<std::uint8_t>(
            std::clamp<long>(std::lround(acc[c] / total), 0L, 255L));
    }
  }
  return out;
}

}  // namespace fairsketch::image
