#include "fairsketch/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <string>

#include "fairsketch/error.hpp"
#include "fairsketch/metrics.hpp"
#include "fairsketch/rng.hpp"

namespace fairsketch::model {
namespace {

double sigmoid(double a) { return 1.0 / (1.0 + std::exp(-a)); }

/// out = a (B x n) * W^T (n x m) + bias, i.e. one dense layer's pre-activation.
Matrix affine(const Matrix& a, const Layer& layer) {
  const std::size_t b = a.rows();
  const std::size_t in = layer.weights.cols();
  const std::size_t out = layer.weights.rows();
  if (a.cols() != in) throw Error(ErrorKind::Shape, "layer input width mismatch");
  Matrix pre(b, out);
  for (std::size_t i = 0; i < b; ++i)
    for (std::size_t j = 0; j < out; ++j) {
      double acc = layer.bias[j];
      for (std::size_t k = 0; k < in; ++k) acc += layer.weights(j, k) * a(i, k);
      pre(i, j) = acc;
    }
  return pre;
}

Matrix apply_output(const Matrix& pre, Activation activation) {
  Matrix out(pre.rows(), pre.cols());
  if (activation == Activation::ReluHiddenSigmoidOut) {
    for (std::size_t i = 0; i < pre.size(); ++i)
      out.values()[i] = sigmoid(pre.values()[i]);
    return out;
  }
  for (std::size_t i = 0; i < pre.rows(); ++i) {
    double row_max = pre(i, 0);
    for (std::size_t j = 1; j < pre.cols(); ++j) row_max = std::max(row_max, pre(i, j));
    double sum = 0.0;
    for (std::size_t j = 0; j < pre.cols(); ++j) {
      out(i, j) = std::exp(pre(i, j) - row_max);
      sum += out(i, j);
    }
    for (std::size_t j = 0; j < pre.cols(); ++j) out(i, j) /= sum;
  }
  return out;
}

std::vector<std::pair<std::size_t, std::size_t>> shape_fingerprint(const ModelParams& params) {
  std::vector<std::pair<std::size_t, std::size_t>> shapes;
  for (const auto& layer : params.layers)
    shapes.emplace_back(layer.weights.rows(), layer.weights.cols());
  return shapes;
}

struct EvalResult {
  double accuracy = 0.0;
  std::optional<double> spd;
};

Matrix features_matrix(std::span<const data::LabeledExample> examples, std::size_t dim) {
  Matrix x(examples.size(), dim);
  for (std::size_t i = 0; i < examples.size(); ++i) {
    if (examples[i].features.size() != dim)
      throw Error(ErrorKind::Shape, "example '" + examples[i].id + "' has " +
                                        std::to_string(examples[i].features.size()) +
                                        " features, expected " + std::to_string(dim));
    for (std::size_t j = 0; j < dim; ++j) x(i, j) = examples[i].features[j];
  }
  return x;
}

/// Hard accuracy and hard SPD of argmax predictions on a held-out split.
EvalResult evaluate(const ModelParams& params, std::span<const data::LabeledExample> examples,
                    int positive_class) {
  EvalResult result;
  if (examples.empty()) return result;
  const auto [probs, cache] = forward(params, features_matrix(examples, params.input_dim()));
  const std::vector<int> preds = hard_predictions(probs);

  std::vector<metrics::PredictionRecord> records(examples.size());
  std::size_t correct = 0;
  for (std::size_t i = 0; i < examples.size(); ++i) {
    records[i].id = examples[i].id;
    records[i].y_true = examples[i].label;
    records[i].y_pred = preds[i];
    records[i].z = examples[i].z;
    if (preds[i] == examples[i].label) ++correct;
  }
  result.accuracy = static_cast<double>(correct) / static_cast<double>(examples.size());
  try {
    result.spd = metrics::statistical_parity_difference(records, positive_class);
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::MissingGroup) throw;
  }
  return result;
}

class AdamState {
public:
  explicit AdamState(const ModelParams& params) {
    for (const auto& layer : params.layers) {
      m_.push_back({Matrix(layer.weights.rows(), layer.weights.cols()),
                    std::vector<double>(layer.bias.size(), 0.0)});
      v_.push_back({Matrix(layer.weights.rows(), layer.weights.cols()),
                    std::vector<double>(layer.bias.size(), 0.0)});
    }
  }

  void step(ModelParams& params, const ParamGrads& grads, double lr) {
    ++t_;
    const double bc1 = 1.0 - std::pow(kBeta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(kBeta2, static_cast<double>(t_));
    for (std::size_t l = 0; l < params.layers.size(); ++l) {
      auto& w = params.layers[l].weights.values();
      const auto& gw = grads.layers[l].weights.values();
      auto& mw = m_[l].weights.values();
      auto& vw = v_[l].weights.values();
      for (std::size_t i = 0; i < w.size(); ++i)
        w[i] -= lr * update(gw[i], mw[i], vw[i], bc1, bc2);
      auto& b = params.layers[l].bias;
      const auto& gb = grads.layers[l].bias;
      auto& mb = m_[l].bias;
      auto& vb = v_[l].bias;
      for (std::size_t i = 0; i < b.size(); ++i)
        b[i] -= lr * update(gb[i], mb[i], vb[i], bc1, bc2);
    }
  }

private:
  static constexpr double kBeta1 = 0.9;
  static constexpr double kBeta2 = 0.999;
  static constexpr double kEps = 1e-8;

  double update(double g, double& m, double& v, double bc1, double bc2) {
    m = kBeta1 * m + (1.0 - kBeta1) * g;
    v = kBeta2 * v + (1.0 - kBeta2) * g * g;
    return (m / bc1) / (std::sqrt(v / bc2) + kEps);
  }

  std::vector<Layer> m_;
  std::vector<Layer> v_;
  std::uint64_t t_ = 0;
};

void sgd_step(ModelParams& params, const ParamGrads& grads, double lr) {
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    params.layers[l].weights.add_scaled(grads.layers[l].weights, -lr);
    auto& b = params.layers[l].bias;
    const auto& gb = grads.layers[l].bias;
    for (std::size_t i = 0; i < b.size(); ++i) b[i] -= lr * gb[i];
  }
}

}  // namespace

const char* to_string(Activation a) noexcept {
  return a == Activation::ReluHiddenSigmoidOut ? "sigmoid" : "softmax";
}

Activation activation_from_string(const std::string& s) {
  if (s == "sigmoid") return Activation::ReluHiddenSigmoidOut;
  if (s == "softmax") return Activation::ReluHiddenSoftmaxOut;
  throw Error(ErrorKind::Config, "unknown activation '" + s + "'");
}

const char* to_string(Optimizer o) noexcept { return o == Optimizer::Sgd ? "sgd" : "adam"; }

Optimizer optimizer_from_string(const std::string& s) {
  if (s == "sgd") return Optimizer::Sgd;
  if (s == "adam") return Optimizer::Adam;
  throw Error(ErrorKind::Config, "unknown optimizer '" + s + "'");
}

ModelParams init_params(std::span<const std::size_t> layer_dims, std::uint64_t seed,
                        Activation activation) {
  if (layer_dims.size() < 2)
    throw Error(ErrorKind::Config, "need at least input and output dimensions");
  for (std::size_t d : layer_dims)
    if (d == 0) throw Error(ErrorKind::Config, "layer dimensions must be positive");
  if (activation == Activation::ReluHiddenSigmoidOut && layer_dims.back() != 1)
    throw Error(ErrorKind::Config, "sigmoid output requires exactly one output unit");

  ModelParams params;
  params.activation = activation;
  rng::SeededRng gen(rng::derive(seed, 0x1417));
  for (std::size_t l = 0; l + 1 < layer_dims.size(); ++l) {
    const std::size_t in = layer_dims[l];
    const std::size_t out = layer_dims[l + 1];
    Layer layer{Matrix(out, in), std::vector<double>(out, 0.0)};
    const double bound = 1.0 / std::sqrt(static_cast<double>(in));
    for (double& w : layer.weights.values()) w = gen.uniform(-bound, bound);
    params.layers.push_back(std::move(layer));
  }
  return params;
}

std::pair<Matrix, ForwardCache> forward(const ModelParams& params, const Matrix& features) {
  if (params.layers.empty()) throw Error(ErrorKind::Config, "model has no layers");
  if (features.cols() != params.input_dim())
    throw Error(ErrorKind::Shape, "feature width " + std::to_string(features.cols()) +
                                      " does not match model input " +
                                      std::to_string(params.input_dim()));
  ForwardCache cache;
  cache.shapes = shape_fingerprint(params);
  Matrix a = features;
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    cache.inputs.push_back(a);
    Matrix pre = affine(a, params.layers[l]);
    cache.preacts.push_back(pre);
    if (l + 1 == params.layers.size()) {
      a = apply_output(pre, params.activation);
    } else {
      for (double& v : pre.values()) v = std::max(0.0, v);
      a = std::move(pre);
    }
  }
  return {std::move(a), std::move(cache)};
}

ParamGrads backward(const ModelParams& params, const ForwardCache& cache,
                    const Matrix& grad_probs) {
  if (cache.shapes != shape_fingerprint(params) ||
      cache.inputs.size() != params.layers.size())
    throw Error(ErrorKind::MismatchedCache, "cache does not match these parameters");
  const std::size_t last = params.layers.size() - 1;
  const std::size_t b = cache.inputs.front().rows();
  if (grad_probs.rows() != b || grad_probs.cols() != params.output_dim())
    throw Error(ErrorKind::Shape, "upstream gradient shape mismatch");

  // Output nonlinearity jacobian applied to d(loss)/d(probs).
  const Matrix probs = apply_output(cache.preacts[last], params.activation);
  Matrix delta(b, params.output_dim());
  if (params.activation == Activation::ReluHiddenSigmoidOut) {
    for (std::size_t i = 0; i < delta.size(); ++i) {
      const double p = probs.values()[i];
      delta.values()[i] = grad_probs.values()[i] * p * (1.0 - p);
    }
  } else {
    for (std::size_t i = 0; i < b; ++i) {
      double dot = 0.0;
      for (std::size_t j = 0; j < probs.cols(); ++j) dot += grad_probs(i, j) * probs(i, j);
      for (std::size_t j = 0; j < probs.cols(); ++j)
        delta(i, j) = probs(i, j) * (grad_probs(i, j) - dot);
    }
  }

  ParamGrads grads;
  grads.layers.resize(params.layers.size());
  for (std::size_t l = params.layers.size(); l-- > 0;) {
    const Matrix& input = cache.inputs[l];
    const std::size_t out = params.layers[l].weights.rows();
    const std::size_t in = params.layers[l].weights.cols();
    Layer& g = grads.layers[l];
    g.weights = Matrix(out, in);
    g.bias.assign(out, 0.0);
    for (std::size_t i = 0; i < b; ++i)
      for (std::size_t j = 0; j < out; ++j) {
        const double d = delta(i, j);
        g.bias[j] += d;
        for (std::size_t k = 0; k < in; ++k) g.weights(j, k) += d * input(i, k);
      }
    if (l == 0) break;
    // delta_{l-1} = (delta_l W_l) masked by the ReLU derivative.
    const Matrix& w = params.layers[l].weights;
    Matrix next(b, in);
    for (std::size_t i = 0; i < b; ++i)
      for (std::size_t k = 0; k < in; ++k) {
        double acc = 0.0;
        for (std::size_t j = 0; j < out; ++j) acc += delta(i, j) * w(j, k);
        next(i, k) = cache.preacts[l - 1](i, k) > 0.0 ? acc : 0.0;
      }
    delta = std::move(next);
  }
  return grads;
}

std::vector<int> hard_predictions(const Matrix& probs) {
  std::vector<int> preds(probs.rows());
  for (std::size_t i = 0; i < probs.rows(); ++i) {
    if (probs.cols() == 1) {
      preds[i] = probs(i, 0) >= 0.5 ? 1 : 0;
    } else {
      std::size_t best = 0;
      for (std::size_t j = 1; j < probs.cols(); ++j)
        if (probs(i, j) > probs(i, best)) best = j;
      preds[i] = static_cast<int>(best);
    }
  }
  return preds;
}

std::pair<ModelParams, TrainHistory> train(const data::SplitSet& splits, const TrainConfig& cfg) {
  if (splits.train.empty()) throw Error(ErrorKind::Config, "training split is empty");
  if (cfg.batch_size > splits.train.size())
    throw Error(ErrorKind::Config, "batch size " + std::to_string(cfg.batch_size) +
                                       " exceeds training set size " +
                                       std::to_string(splits.train.size()));
  if (cfg.learning_rate <= 0.0) throw Error(ErrorKind::Config, "learning rate must be positive");
  if (cfg.epochs == 0) throw Error(ErrorKind::Config, "epochs must be at least 1");
  if (cfg.lambda < 0.0) throw Error(ErrorKind::Config, "lambda must be non-negative");

  ModelParams params = init_params(cfg.layer_dims, cfg.seed, cfg.activation);
  const std::size_t dim = params.input_dim();
  const int num_classes =
      params.output_dim() == 1 ? 2 : static_cast<int>(params.output_dim());
  for (const auto& ex : splits.train)
    if (ex.label < 0 || ex.label >= num_classes)
      throw Error(ErrorKind::Config, "example '" + ex.id + "' has label outside the class range");

  const loss::LossWeights weights{cfg.lambda, cfg.spd_ideal, cfg.positive_class};
  const int hard_positive = params.output_dim() == 1 ? 1 : cfg.positive_class;
  AdamState adam(params);
  TrainHistory history;

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    const auto batches =
        data::minibatches(splits.train.size(), cfg.batch_size, rng::derive(cfg.seed, epoch + 1));
    double loss_sum = 0.0, ce_sum = 0.0, fair_sum = 0.0;
    for (std::size_t bi = 0; bi < batches.size(); ++bi) {
      const auto& idx = batches[bi];
      Matrix x(idx.size(), dim);
      loss::BatchPrediction batch;
      batch.labels.resize(idx.size());
      batch.z.resize(idx.size());
      for (std::size_t i = 0; i < idx.size(); ++i) {
        const auto& ex = splits.train[idx[i]];
        if (ex.features.size() != dim)
          throw Error(ErrorKind::Shape, "example '" + ex.id + "' feature width mismatch");
        for (std::size_t j = 0; j < dim; ++j) x(i, j) = ex.features[j];
        batch.labels[i] = ex.label;
        batch.z[i] = ex.z;
      }

      auto [probs, cache] = forward(params, x);
      batch.probs = std::move(probs);
      const loss::LossValue total = loss::total_loss(batch, weights);
      if (!std::isfinite(total.value))
        throw Error(ErrorKind::NonFiniteLoss, "epoch " + std::to_string(epoch) + ", batch " +
                                                  std::to_string(bi) + ": loss is not finite");
      const loss::LossValue ce = loss::cross_entropy_loss(batch);
      const loss::LossValue fair = loss::fairness_loss(batch, weights);
      const double bsz = static_cast<double>(idx.size());
      loss_sum += total.value * bsz;
      ce_sum += ce.value * bsz;
      fair_sum += cfg.lambda * fair.value * bsz;

      const ParamGrads grads = backward(params, cache, total.grad_probs);
      if (cfg.optimizer == Optimizer::Sgd)
        sgd_step(params, grads, cfg.learning_rate);
      else
        adam.step(params, grads, cfg.learning_rate);
    }

    EpochStats stats;
    stats.epoch = epoch;
    const double n = static_cast<double>(splits.train.size());
    stats.train_loss = loss_sum / n;
    stats.train_ce = ce_sum / n;
    stats.train_fair = fair_sum / n;
    if (!splits.val.empty()) {
      const EvalResult val = evaluate(params, splits.val, hard_positive);
      stats.val_accuracy = val.accuracy;
      stats.val_spd = val.spd;
    }
    history.push_back(stats);
  }
  return {std::move(params), std::move(history)};
}

double gradient_check(const ModelParams& params, const Matrix& features,
                      const std::vector<int>& labels, const std::vector<int>& z,
                      const loss::LossWeights& weights) {
  constexpr double kStep = 1e-6;
  loss::BatchPrediction batch;
  batch.labels = labels;
  batch.z = z;

  auto objective = [&](const ModelParams& p) {
    auto [probs, cache] = forward(p, features);
    batch.probs = std::move(probs);
    return loss::total_loss(batch, weights).value;
  };

  auto [probs, cache] = forward(params, features);
  batch.probs = std::move(probs);
  const loss::LossValue total = loss::total_loss(batch, weights);
  const ParamGrads grads = backward(params, cache, total.grad_probs);

  ModelParams probe = params;
  double max_err = 0.0;
  auto check_one = [&](double& slot, double analytic) {
    const double saved = slot;
    slot = saved + kStep;
    const double up = objective(probe);
    slot = saved - kStep;
    const double down = objective(probe);
    slot = saved;
    const double numeric = (up - down) / (2.0 * kStep);
    const double err = std::abs(analytic - numeric) /
                       std::max({1.0, std::abs(analytic), std::abs(numeric)});
    max_err = std::max(max_err, err);
  };

  for (std::size_t l = 0; l < probe.layers.size(); ++l) {
    auto& w = probe.layers[l].weights.values();
    for (std::size_t i = 0; i < w.size(); ++i)
      check_one(w[i], grads.layers[l].weights.values()[i]);
    for (std::size_t i = 0; i < probe.layers[l].bias.size(); ++i)
      check_one(probe.layers[l].bias[i], grads.layers[l].bias[i]);
  }
  return max_err;
}

namespace {

void write_u32(std::ostream& out, std::uint32_t v) {
  unsigned char buf[4];
  for (int i = 0; i < 4; ++i) buf[i] = static_cast<unsigned char>(v >> (8 * i));
  out.write(reinterpret_cast<const char*>(buf), 4);
}

void write_u64(std::ostream& out, std::uint64_t v) {
  unsigned char buf[8];
  for (int i = 0; i < 8; ++i) buf[i] = static_cast<unsigned char>(v >> (8 * i));
  out.write(reinterpret_cast<const char*>(buf), 8);
}

void write_f64(std::ostream& out, double v) {
  std::uint64_t bits = 0;
  std::memcpy(&bits, &v, sizeof bits);
  write_u64(out, bits);
}

std::uint32_t read_u32(std::istream& in) {
  unsigned char buf[4];
  in.read(reinterpret_cast<char*>(buf), 4);
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(buf[i]) << (8 * i);
  return v;
}

std::uint64_t read_u64(std::istream& in) {
  unsigned char buf[8];
  in.read(reinterpret_cast<char*>(buf), 8);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
  return v;
}

double read_f64(std::istream& in) {
  const std::uint64_t bits = read_u64(in);
  double v = 0.0;
  std::memcpy(&v, &bits, sizeof v);
  return v;
}

constexpr char kMagic[4] = {'F', 'S', 'K', 'C'};
constexpr std::uint32_t kVersion = 1;

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const ModelParams& params,
                     std::uint64_t seed, std::uint64_t config_hash) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::Io, "cannot write '" + path.string() + "'");
  out.write(kMagic, 4);
  write_u32(out, kVersion);
  write_u64(out, seed);
  write_u64(out, config_hash);
  out.put(params.activation == Activation::ReluHiddenSigmoidOut ? '\x00' : '\x01');
  write_u32(out, static_cast<std::uint32_t>(params.layers.size()));
  for (const auto& layer : params.layers) {
    write_u32(out, static_cast<std::uint32_t>(layer.weights.rows()));
    write_u32(out, static_cast<std::uint32_t>(layer.weights.cols()));
    for (double w : layer.weights.values()) write_f64(out, w);
    for (double b : layer.bias) write_f64(out, b);
  }
  if (!out) throw Error(ErrorKind::Io, "failed writing '" + path.string() + "'");
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open '" + path.string() + "'");
  char magic[4] = {};
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMagic, 4) != 0)
    throw Error(ErrorKind::Format, "'" + path.string() + "' is not a checkpoint file");
  const std::uint32_t version = read_u32(in);
  if (version != kVersion)
    throw Error(ErrorKind::Format, "unsupported checkpoint version " + std::to_string(version));

  Checkpoint ckpt;
  ckpt.seed = read_u64(in);
  ckpt.config_hash = read_u64(in);
  const int activation = in.get();
  if (activation != 0 && activation != 1)
    throw Error(ErrorKind::Format, "invalid activation tag");
  ckpt.params.activation =
      activation == 0 ? Activation::ReluHiddenSigmoidOut : Activation::ReluHiddenSoftmaxOut;
  const std::uint32_t layers = read_u32(in);
  std::size_t prev_out = 0;
  for (std::uint32_t l = 0; l < layers; ++l) {
    const std::uint32_t out = read_u32(in);
    const std::uint32_t in_dim = read_u32(in);
    if (out == 0 || in_dim == 0) throw Error(ErrorKind::Format, "zero layer dimension");
    if (l > 0 && in_dim != prev_out)
      throw Error(ErrorKind::Format, "layer dimensions do not chain");
    prev_out = out;
    Layer layer{Matrix(out, in_dim), std::vector<double>(out, 0.0)};
    for (double& w : layer.weights.values()) w = read_f64(in);
    for (double& b : layer.bias) b = read_f64(in);
    ckpt.params.layers.push_back(std::move(layer));
  }
  if (!in) throw Error(ErrorKind::Format, "truncated checkpoint file");
  return ckpt;
}

}  // namespace fairsketch::model
