#include "fairsketch/loss.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "fairsketch/error.hpp"

namespace fairsketch::loss {
namespace {

constexpr double kProbEps = 1e-12;

double clamp_prob(double p) { return std::clamp(p, kProbEps, 1.0 - kProbEps); }

void check_shapes(const BatchPrediction& batch) {
  const std::size_t b = batch.probs.rows();
  if (b == 0) throw Error(ErrorKind::Shape, "empty batch");
  if (batch.probs.cols() == 0) throw Error(ErrorKind::Shape, "batch has zero prob columns");
  if (batch.labels.size() != b || batch.z.size() != b)
    throw Error(ErrorKind::Shape, "probs/labels/z lengths disagree (" + std::to_string(b) + "/" +
                                      std::to_string(batch.labels.size()) + "/" +
                                      std::to_string(batch.z.size()) + ")");
}

int positive_column(const BatchPrediction& batch, int positive_class) {
  if (batch.probs.cols() == 1) return 0;
  if (positive_class < 0 || static_cast<std::size_t>(positive_class) >= batch.probs.cols())
    throw Error(ErrorKind::Shape,
                "positive class " + std::to_string(positive_class) + " outside prob columns");
  return positive_class;
}

}  // namespace

void validate_batch(const BatchPrediction& batch) {
  check_shapes(batch);
  const std::size_t b = batch.probs.rows();
  const std::size_t c = batch.probs.cols();
  for (std::size_t i = 0; i < b; ++i) {
    const int label = batch.labels[i];
    const int max_label = c == 1 ? 1 : static_cast<int>(c) - 1;
    if (label < 0 || label > max_label)
      throw Error(ErrorKind::Shape, "label " + std::to_string(label) + " at row " +
                                        std::to_string(i) + " outside class range");
    if (batch.z[i] != 0 && batch.z[i] != 1)
      throw Error(ErrorKind::Shape, "z must be 0 or 1 at row " + std::to_string(i));
    double row_sum = 0.0;
    for (std::size_t j = 0; j < c; ++j) {
      const double p = batch.probs(i, j);
      if (!(p > 0.0 && p < 1.0))
        throw Error(ErrorKind::Shape, "probability outside (0,1) at row " + std::to_string(i));
      row_sum += p;
    }
    if (c > 1 && std::abs(row_sum - 1.0) > 1e-9)
      throw Error(ErrorKind::Shape, "probability row " + std::to_string(i) + " off the simplex");
  }
}

LossValue cross_entropy_loss(const BatchPrediction& batch) {
  check_shapes(batch);
  const std::size_t b = batch.probs.rows();
  const std::size_t c = batch.probs.cols();
  const double inv_b = 1.0 / static_cast<double>(b);

  LossValue out;
  out.grad_probs = Matrix(b, c);
  double sum = 0.0;
  for (std::size_t i = 0; i < b; ++i) {
    const int label = batch.labels[i];
    if (label < 0 || (c == 1 && label > 1) || (c > 1 && static_cast<std::size_t>(label) >= c))
      throw Error(ErrorKind::Shape,
                  "label " + std::to_string(label) + " at row " + std::to_string(i));
    if (c == 1) {
      const double p = clamp_prob(batch.probs(i, 0));
      if (label == 1) {
        sum -= std::log(p);
        out.grad_probs(i, 0) = -inv_b / p;
      } else {
        sum -= std::log(1.0 - p);
        out.grad_probs(i, 0) = inv_b / (1.0 - p);
      }
    } else {
      const double p = clamp_prob(batch.probs(i, static_cast<std::size_t>(label)));
      sum -= std::log(p);
      out.grad_probs(i, static_cast<std::size_t>(label)) = -inv_b / p;
    }
  }
  out.value = sum * inv_b;
  return out;
}

std::pair<double, Matrix> soft_group_positive_rate(const BatchPrediction& batch, int group,
                                                   int positive_class) {
  check_shapes(batch);
  const int col = positive_column(batch, positive_class);
  const std::size_t b = batch.probs.rows();

  std::size_t members = 0;
  double sum = 0.0;
  for (std::size_t i = 0; i < b; ++i)
    if (batch.z[i] == group) {
      ++members;
      sum += batch.probs(i, static_cast<std::size_t>(col));
    }
  if (members == 0)
    throw Error(ErrorKind::MissingGroupInBatch,
                "no batch members with z=" + std::to_string(group));

  Matrix grad(b, batch.probs.cols());
  const double w = 1.0 / static_cast<double>(members);
  for (std::size_t i = 0; i < b; ++i)
    if (batch.z[i] == group) grad(i, static_cast<std::size_t>(col)) = w;
  return {sum * w, std::move(grad)};
}

LossValue fairness_loss(const BatchPrediction& batch, const LossWeights& weights) {
  check_shapes(batch);
  LossValue out;
  out.grad_probs = Matrix(batch.probs.rows(), batch.probs.cols());

  // Random mini-batches can miss a group entirely; that is a defined
  // no-penalty case, not an error.
  bool has0 = false, has1 = false;
  for (int zi : batch.z) (zi == 0 ? has0 : has1) = true;
  if (!has0 || !has1) return out;

  auto [rate1, grad1] = soft_group_positive_rate(batch, 1, weights.positive_class);
  auto [rate0, grad0] = soft_group_positive_rate(batch, 0, weights.positive_class);
  const double soft_spd = rate1 - rate0;
  const double deviation = std::abs(soft_spd) - weights.spd_ideal;
  out.value = deviation * deviation;

  const double sign = soft_spd > 0.0 ? 1.0 : (soft_spd < 0.0 ? -1.0 : 0.0);
  const double dvalue_dspd = 2.0 * deviation * sign;
  out.grad_probs = std::move(grad1);
  for (std::size_t i = 0; i < out.grad_probs.size(); ++i)
    out.grad_probs.values()[i] =
        dvalue_dspd * (out.grad_probs.values()[i] - grad0.values()[i]);
  return out;
}

LossValue total_loss(const BatchPrediction& batch, const LossWeights& weights) {
  if (weights.lambda < 0.0) throw Error(ErrorKind::Config, "lambda must be non-negative");
  LossValue ce = cross_entropy_loss(batch);
  const LossValue fair = fairness_loss(batch, weights);
  ce.value += weights.lambda * fair.value;
  ce.grad_probs.add_scaled(fair.grad_probs, weights.lambda);
  return ce;
}

}  // namespace fairsketch::loss
