#pragma once

#include <filesystem>
#include <vector>

#include "fairsketch/data.hpp"

namespace fairsketch::cli {

/// Fills in `features` for every example. With a non-empty images_dir, each
/// example's raster is loaded (falling back to the same stem with a .png
/// extension, which is what sketchify emits), box-resized to
/// image_size x image_size, and flattened channel-interleaved to [0,1].
/// With an empty images_dir the manifest must have supplied tabular features.
std::vector<data::LabeledExample> featurize(std::vector<data::LabeledExample> examples,
                                            const std::filesystem::path& images_dir,
                                            std::size_t image_size);

}  // namespace fairsketch::cli
