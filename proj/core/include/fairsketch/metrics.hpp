#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace fairsketch::metrics {

/// One evaluated example from a prediction log. `z` is the sensitive group
/// flag: 0 = unprotected, 1 = protected.
struct PredictionRecord {
  std::string id;
  int y_true = 0;
  int y_pred = 0;
  std::optional<double> score;  // positive-class confidence, binary logs only
  int z = 0;
};

/// One-vs-rest confusion counts for a single group.
struct GroupConfusion {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t tn = 0;
  std::size_t fn = 0;

  std::size_t n() const noexcept { return tp + fp + tn + fn; }
};

/// Semantics of the FPR term inside the average-odds difference.
///
/// Standard:  FPR_z = fp / (fp + tn), AOD = (|dTPR| + |dFPR|) / 2.
/// AsWritten: FPR_z = P(y_pred != y_true | z), the group misclassification
///            rate, and AOD = (|dTPR| - |dFPR|) / 2, which can be negative.
/// The second form reproduces a published variant verbatim; the first is the
/// conventional definition.
enum class FprMode { Standard, AsWritten };

const char* to_string(FprMode mode) noexcept;
FprMode fpr_mode_from_string(const std::string& s);

struct PrfScores {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  /// True when a zero denominator forced some component to 0.
  bool degenerate = false;
};

/// Aggregated fairness audit of one prediction log.
struct FairnessReport {
  double spd = 0.0;
  double eod = 0.0;
  double deo = 0.0;
  double aod = 0.0;
  double accuracy = 0.0;
  std::map<int, PrfScores> per_group;
  FprMode fpr_mode = FprMode::Standard;
  int num_classes = 2;
  int positive_class = 1;
  std::vector<std::string> warnings;
};

/// Smallest class count consistent with the log (at least 2).
int infer_num_classes(std::span<const PredictionRecord> records);

/// Partitions records by z and counts the one-vs-rest confusion of
/// `positive_class` per group. Throws EmptyLog on an empty span and
/// MalformedRecord on negative class indices or z outside {0,1}.
std::map<int, GroupConfusion> group_confusion(std::span<const PredictionRecord> records,
                                              int positive_class);

/// |P(y_pred = pos | z=1) - P(y_pred = pos | z=0)|. Throws MissingGroup if
/// either group is absent.
double statistical_parity_difference(std::span<const PredictionRecord> records,
                                     int positive_class);

/// |TPR_1 - TPR_0| with TPR_z = tp/(tp+fn). Throws MissingGroup for an absent
/// group, UndefinedRate when a present group has no positive-labeled records.
double equal_opportunity_difference(std::span<const PredictionRecord> records,
                                    int positive_class);

/// max over y in {positive, rest} of |P(y_pred = pos | y, z=1) -
/// P(y_pred = pos | y, z=0)|. Throws UndefinedRate when any (y, z) stratum is
/// empty.
double equalized_odds_difference(std::span<const PredictionRecord> records,
                                 int positive_class);

/// Average-odds difference under the selected FPR semantics; see FprMode.
double average_odds_difference(std::span<const PredictionRecord> records, int positive_class,
                               FprMode mode);

/// Per-group precision/recall/F1. Binary logs score `positive_class`;
/// multiclass logs return the unweighted macro average over one-vs-rest
/// classes. Zero-denominator cells contribute 0 and set `degenerate`.
std::map<int, PrfScores> per_group_prf(std::span<const PredictionRecord> records,
                                       int positive_class = 1);

/// Full audit: the four fairness metrics, accuracy, and per-group P/R/F1.
/// Multiclass logs macro-average each fairness metric over one-vs-rest
/// classes, skipping classes whose rates are undefined (noted in `warnings`).
/// Errors are rethrown with the offending metric named.
FairnessReport audit(std::span<const PredictionRecord> records, int positive_class = 1,
                     FprMode mode = FprMode::Standard);

}  // namespace fairsketch::metrics
