#pragma once

#include <utility>
#include <vector>

#include "fairsketch/matrix.hpp"

namespace fairsketch::loss {

/// A mini-batch of model outputs. `probs` is B x 1 for binary models (the
/// positive-class probability) or B x C rows of a probability simplex.
///
/// Plain aggregate by design: the loss operations check only the shapes they
/// need, so tests can probe them at off-simplex points. Code that assembles
/// batches from model output should run `validate_batch` to enforce the full
/// type invariants.
struct BatchPrediction {
  Matrix probs;
  std::vector<int> labels;
  std::vector<int> z;
};

/// Throws on length mismatch, labels outside the class range, z outside
/// {0,1}, probabilities outside (0,1), or multiclass rows off the simplex by
/// more than 1e-9.
void validate_batch(const BatchPrediction& batch);

struct LossValue {
  double value = 0.0;
  Matrix grad_probs;  // same shape as batch.probs
};

struct LossWeights {
  double lambda = 1.0;     // weight of the fairness penalty
  double spd_ideal = 0.0;  // target soft SPD, 0 = parity
  /// Class whose probability mass drives the fairness penalty when probs has
  /// more than one column. Ignored for binary (single-column) batches.
  int positive_class = 1;
};

/// Mean negative log-likelihood of the true class, probabilities clamped to
/// [1e-12, 1 - 1e-12] before the log. Gradient is exact at the clamped point.
LossValue cross_entropy_loss(const BatchPrediction& batch);

/// Mean positive-class probability over members of `group`, plus its gradient
/// (1/|group| on member slots). Throws MissingGroupInBatch when empty.
std::pair<double, Matrix> soft_group_positive_rate(const BatchPrediction& batch, int group,
                                                   int positive_class = 1);

/// Squared deviation of the soft statistical parity difference from
/// `spd_ideal`: value = (|rate_1 - rate_0| - spd_ideal)^2. A batch missing
/// either group contributes zero value and zero gradient.
LossValue fairness_loss(const BatchPrediction& batch, const LossWeights& weights);

/// cross_entropy + lambda * fairness, values and gradients combined.
LossValue total_loss(const BatchPrediction& batch, const LossWeights& weights);

}  // namespace fairsketch::loss
