#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "fairsketch/data.hpp"
#include "fairsketch/loss.hpp"
#include "fairsketch/matrix.hpp"

namespace fairsketch::model {

/// Hidden layers are always ReLU; the enum picks the output nonlinearity.
enum class Activation { ReluHiddenSigmoidOut, ReluHiddenSoftmaxOut };
enum class Optimizer { Sgd, Adam };

const char* to_string(Activation a) noexcept;
Activation activation_from_string(const std::string& s);
const char* to_string(Optimizer o) noexcept;
Optimizer optimizer_from_string(const std::string& s);

struct Layer {
  Matrix weights;  // out x in
  std::vector<double> bias;
};

struct ModelParams {
  std::vector<Layer> layers;
  Activation activation = Activation::ReluHiddenSigmoidOut;

  std::size_t input_dim() const { return layers.front().weights.cols(); }
  std::size_t output_dim() const { return layers.back().weights.rows(); }
};

struct TrainConfig {
  std::vector<std::size_t> layer_dims;  // input, hidden..., output
  Activation activation = Activation::ReluHiddenSigmoidOut;
  double lambda = 1.0;
  double spd_ideal = 0.0;
  int positive_class = 1;
  double learning_rate = 1e-3;
  std::size_t batch_size = 64;
  std::size_t epochs = 10;
  std::uint64_t seed = 0;
  Optimizer optimizer = Optimizer::Sgd;
};

struct EpochStats {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double train_ce = 0.0;
  /// Lambda-weighted fairness term, so train_loss == train_ce + train_fair
  /// and a lambda of zero logs an exactly-zero column.
  double train_fair = 0.0;
  std::optional<double> val_accuracy;
  /// Hard statistical parity difference of argmax validation predictions;
  /// empty when the validation set lacks a group.
  std::optional<double> val_spd;
};

using TrainHistory = std::vector<EpochStats>;

/// Per-layer inputs and pre-activations from one forward pass, consumed by
/// backward. Bound to the parameter shapes that produced it.
struct ForwardCache {
  std::vector<Matrix> inputs;    // layer k's input activations
  std::vector<Matrix> preacts;   // layer k's W x + b
  std::vector<std::pair<std::size_t, std::size_t>> shapes;  // (out, in) per layer
};

struct ParamGrads {
  std::vector<Layer> layers;  // same shapes as the model
};

/// Seeded init: weights uniform in (-1/sqrt(in), 1/sqrt(in)), biases zero.
/// The same seed always produces bitwise-identical parameters.
ModelParams init_params(std::span<const std::size_t> layer_dims, std::uint64_t seed,
                        Activation activation = Activation::ReluHiddenSigmoidOut);

/// Runs the network on a B x input_dim feature matrix. Returns output
/// probabilities (B x 1 sigmoid or B x C softmax rows) plus the cache.
std::pair<Matrix, ForwardCache> forward(const ModelParams& params, const Matrix& features);

/// Chain rule from d(loss)/d(probs) down to every weight and bias.
ParamGrads backward(const ModelParams& params, const ForwardCache& cache,
                    const Matrix& grad_probs);

/// Argmax predictions: threshold 0.5 on a single sigmoid column, row argmax
/// otherwise (ties to the lower class index).
std::vector<int> hard_predictions(const Matrix& probs);

/// Deterministic mini-batch training of the combined objective on
/// `splits.train`, with per-epoch validation stats. Aborts with
/// NonFiniteLoss (epoch/batch in the message) if the loss leaves the reals.
std::pair<ModelParams, TrainHistory> train(const data::SplitSet& splits, const TrainConfig& cfg);

/// Max relative error between backward() and central finite differences
/// (h = 1e-6) over every parameter, with the combined objective as the
/// scalar. Relative to max(1, |analytic|, |numeric|) so zero gradients
/// compare cleanly.
double gradient_check(const ModelParams& params, const Matrix& features,
                      const std::vector<int>& labels, const std::vector<int>& z,
                      const loss::LossWeights& weights);

struct Checkpoint {
  ModelParams params;
  std::uint64_t seed = 0;
  std::uint64_t config_hash = 0;
};

/// Versioned little-endian binary container; layout documented in the README
/// and stable across releases.
void save_checkpoint(const std::filesystem::path& path, const ModelParams& params,
                     std::uint64_t seed, std::uint64_t config_hash);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace fairsketch::model
