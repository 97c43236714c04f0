#include "featurize.hpp"

#include "fairsketch/error.hpp"
#include "fairsketch/image.hpp"

namespace fairsketch::cli {

std::vector<data::LabeledExample> featurize(std::vector<data::LabeledExample> examples,
                                            const std::filesystem::path& images_dir,
                                            std::size_t image_size) {
  if (images_dir.empty()) {
    for (const auto& ex : examples)
      if (ex.features.empty())
        throw Error(ErrorKind::Config,
                    "example '" + ex.id + "' has no features and no images_dir was configured");
    return examples;
  }

  for (auto& ex : examples) {
    const std::string& name = ex.image_path.empty() ? ex.id : ex.image_path;
    std::filesystem::path path = images_dir / name;
    if (!std::filesystem::exists(path)) {
      std::filesystem::path alt = path;
      alt.replace_extension(".png");
      if (std::filesystem::exists(alt))
        path = std::move(alt);
      else
        throw Error(ErrorKind::Io, "image '" + path.string() + "' not found");
    }
    const image::ImageBuffer img =
        image::resize_box(image::read_image(path), image_size, image_size);
    ex.features.resize(img.pixels.size());
    for (std::size_t i = 0; i < img.pixels.size(); ++i)
      ex.features[i] = static_cast<double>(img.pixels[i]) / 255.0;
  }
  return examples;
}

}  // namespace fairsketch::cli
