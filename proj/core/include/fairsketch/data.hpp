#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "fairsketch/metrics.hpp"

namespace fairsketch::data {

using metrics::PredictionRecord;

/// One labeled training example. Either `features` is populated (tabular) or
/// `image_path` names the raster to featurize; manifests produce the latter.
struct LabeledExample {
  std::string id;
  std::vector<double> features;
  std::string image_path;
  int label = 0;
  int z = 0;
};

/// Output of the balanced split protocol. `discarded` holds the majority-
/// group examples dropped while equalizing group counts.
struct SplitSet {
  std::vector<LabeledExample> train;
  std::vector<LabeledExample> val;
  std::vector<LabeledExample> test;
  std::vector<LabeledExample> discarded;
  std::uint64_t seed = 0;
  std::array<double, 3> ratios{0.7, 0.15, 0.15};
};

/// Reads a prediction log. CSV needs columns id,y_true,y_pred,z with score
/// optional; JSON-lines needs the same keys per object. Format is chosen by
/// extension (.jsonl/.ndjson vs anything else) with a first-byte fallback.
/// Unknown columns are ignored; `notes`, when given, collects one debug note
/// per ignored column. Errors carry 1-based line numbers.
std::vector<PredictionRecord> load_prediction_log(const std::filesystem::path& path,
                                                  std::vector<std::string>* notes = nullptr);

/// How to derive (id, label, z, features) from a manifest's columns.
/// `z_rule` is either an attribute name (z = 1 when the value is in
/// `z_positive_values`) or "name>=threshold" for numeric attributes such as
/// age buckets.
struct ManifestSpec {
  std::string label_attr;
  std::string z_rule;
  std::vector<std::string> z_positive_values{"1"};
  std::string id_attr;                       // empty = first column / filename
  std::vector<std::string> feature_columns;  // optional tabular features
};

/// Loads a labeled dataset from either the CelebA attribute text format
/// (count line, attribute-name line, then "filename v1 v2 ..." rows with
/// values +-1) or a generic CSV with named columns. The format is detected
/// from the first line.
std::vector<LabeledExample> load_attribute_manifest(const std::filesystem::path& path,
                                                    const ManifestSpec& spec,
                                                    std::vector<std::string>* notes = nullptr);

/// Balanced split protocol: the larger z group is down-sampled (seeded,
/// without replacement) to the smaller group's size, the kept examples are
/// interleaved by group, and split sizes come from largest-remainder rounding
/// of ratios * kept-total. Guarantees per-split group-count difference <= 1
/// and split sizes within one example of the exact ratios.
SplitSet balanced_split(std::span<const LabeledExample> examples, std::uint64_t seed,
                        std::array<double, 3> ratios = {0.7, 0.15, 0.15});

/// Seeded epoch shuffle partitioned into batches of `batch_size` (final short
/// batch retained). Returned batches index into the split sequence; their
/// concatenation is a permutation of 0..n-1.
std::vector<std::vector<std::size_t>> minibatches(std::size_t split_size, std::size_t batch_size,
                                                  std::uint64_t epoch_seed);

}  // namespace fairsketch::data
