#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "fairsketch/metrics.hpp"
#include "fairsketch/model.hpp"
#include "fairsketch/sketch.hpp"

namespace fairsketch::cli {

/// One experiment, fully described by a flat JSON document. Relative paths
/// are resolved against the config file's directory.
struct ExperimentConfig {
  // dataset
  std::string manifest;
  std::string images_dir;  // empty = tabular features straight from the manifest
  std::string id_attr = "id";
  std::string label_attr = "label";
  std::string z_attr = "z";  // attribute name, or "name>=threshold"
  std::vector<std::string> z_positive_values{"1"};
  std::vector<std::string> feature_columns;
  std::size_t image_size = 32;
  std::string condition = "original";  // original | grayscale | sketch

  sketch::SketchParams sketch_params;

  // training
  std::vector<std::size_t> hidden_dims{16};
  int num_classes = 2;
  model::Activation activation = model::Activation::ReluHiddenSigmoidOut;
  model::Optimizer optimizer = model::Optimizer::Sgd;
  double learning_rate = 1e-3;
  std::size_t batch_size = 64;
  std::size_t epochs = 10;
  std::uint64_t seed = 0;
  double lambda = 1.0;
  double spd_ideal = 0.0;
  int positive_class = 1;
  std::array<double, 3> ratios{0.7, 0.15, 0.15};

  // audit / report
  metrics::FprMode fpr_mode = metrics::FprMode::Standard;
  std::string out_dir = "run";

  // directory the config file was loaded from; "" when parsed from a string
  std::filesystem::path base_dir;

  std::filesystem::path resolve(const std::string& path) const;
};

/// Parses and validates a config document; unknown keys are rejected.
ExperimentConfig parse_config(const std::string& json_text);
ExperimentConfig load_config(const std::filesystem::path& path);
void validate(const ExperimentConfig& cfg);

/// Canonical serialization (sorted keys, all defaults materialized); two
/// configs hash equal exactly when every resolved setting matches.
std::string canonical_json(const ExperimentConfig& cfg);

std::uint64_t fnv1a64(std::string_view bytes);
std::uint64_t config_hash(const ExperimentConfig& cfg);
std::string hash_hex(std::uint64_t hash);

}  // namespace fairsketch::cli
