#include "fairsketch/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>

#include "fairsketch/error.hpp"

namespace fairsketch::metrics {
namespace {

void validate_records(std::span<const PredictionRecord> records) {
  if (records.empty()) throw Error(ErrorKind::EmptyLog, "no prediction records");
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    if (r.y_true < 0 || r.y_pred < 0)
      throw Error(ErrorKind::MalformedRecord,
                  "record " + std::to_string(i) + " (id '" + r.id + "'): negative class index");
    if (r.z != 0 && r.z != 1)
      throw Error(ErrorKind::MalformedRecord,
                  "record " + std::to_string(i) + " (id '" + r.id + "'): z must be 0 or 1");
    if (r.score && (*r.score < 0.0 || *r.score > 1.0))
      throw Error(ErrorKind::MalformedRecord,
                  "record " + std::to_string(i) + " (id '" + r.id + "'): score outside [0,1]");
  }
}

struct GroupPair {
  GroupConfusion g0;
  GroupConfusion g1;
};

/// Confusions for both groups; MissingGroup if either is absent.
GroupPair both_groups(std::span<const PredictionRecord> records, int positive_class) {
  auto by_group = group_confusion(records, positive_class);
  auto it0 = by_group.find(0);
  auto it1 = by_group.find(1);
  if (it0 == by_group.end()) throw Error(ErrorKind::MissingGroup, "no records with z=0");
  if (it1 == by_group.end()) throw Error(ErrorKind::MissingGroup, "no records with z=1");
  return {it0->second, it1->second};
}

double tpr(const GroupConfusion& g, int z) {
  const std::size_t denom = g.tp + g.fn;
  if (denom == 0)
    throw Error(ErrorKind::UndefinedRate,
                "group z=" + std::to_string(z) + " has no positive-labeled records");
  return static_cast<double>(g.tp) / static_cast<double>(denom);
}

double fpr(const GroupConfusion& g, int z) {
  const std::size_t denom = g.fp + g.tn;
  if (denom == 0)
    throw Error(ErrorKind::UndefinedRate,
                "group z=" + std::to_string(z) + " has no negative-labeled records");
  return static_cast<double>(g.fp) / static_cast<double>(denom);
}

/// P(y_pred != y_true | z) under the one-vs-rest reduction.
double error_rate(const GroupConfusion& g) {
  return static_cast<double>(g.fp + g.fn) / static_cast<double>(g.n());
}

PrfScores binary_prf(const GroupConfusion& g) {
  PrfScores s;
  if (g.tp + g.fp == 0) {
    s.degenerate = true;
  } else {
    s.precision = static_cast<double>(g.tp) / static_cast<double>(g.tp + g.fp);
  }
  if (g.tp + g.fn == 0) {
    s.degenerate = true;
  } else {
    s.recall = static_cast<double>(g.tp) / static_cast<double>(g.tp + g.fn);
  }
  if (s.precision + s.recall == 0.0) {
    s.degenerate = true;
  } else {
    s.f1 = 2.0 * s.precision * s.recall / (s.precision + s.recall);
  }
  return s;
}

using MetricFn = double (*)(std::span<const PredictionRecord>, int);

/// Unweighted macro average of a one-vs-rest metric over all classes.
/// Classes with undefined rates are skipped and reported via `warnings`.
double macro_average(std::span<const PredictionRecord> records, int num_classes, MetricFn fn,
                     const char* name, std::vector<std::string>& warnings) {
  double sum = 0.0;
  int used = 0;
  for (int c = 0; c < num_classes; ++c) {
    try {
      sum += fn(records, c);
      ++used;
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::UndefinedRate) throw;
      warnings.push_back(std::string(name) + ": skipped class " + std::to_string(c) +
                         " (undefined rate)");
    }
  }
  if (used == 0)
    throw Error(ErrorKind::UndefinedRate,
                std::string(name) + ": undefined for every class of the log");
  return sum / static_cast<double>(used);
}

}  // namespace

const char* to_string(FprMode mode) noexcept {
  return mode == FprMode::Standard ? "standard" : "as_written";
}

FprMode fpr_mode_from_string(const std::string& s) {
  if (s == "standard") return FprMode::Standard;
  if (s == "as_written") return FprMode::AsWritten;
  throw Error(ErrorKind::Config, "unknown fpr mode '" + s + "'");
}

int infer_num_classes(std::span<const PredictionRecord> records) {
  int max_class = 1;
  for (const auto& r : records) max_class = std::max({max_class, r.y_true, r.y_pred});
  return max_class + 1;
}

std::map<int, GroupConfusion> group_confusion(std::span<const PredictionRecord> records,
                                              int positive_class) {
  validate_records(records);
  if (positive_class < 0 || positive_class >= infer_num_classes(records))
    throw Error(ErrorKind::Config,
                "positive class " + std::to_string(positive_class) + " not present in the log");
  std::map<int, GroupConfusion> out;
  for (const auto& r : records) {
    GroupConfusion& g = out[r.z];
    const bool actual = r.y_true == positive_class;
    const bool predicted = r.y_pred == positive_class;
    if (actual && predicted)
      ++g.tp;
    else if (!actual && predicted)
      ++g.fp;
    else if (actual && !predicted)
      ++g.fn;
    else
      ++g.tn;
  }
  return out;
}

double statistical_parity_difference(std::span<const PredictionRecord> records,
                                     int positive_class) {
  const auto [g0, g1] = both_groups(records, positive_class);
  const double p1 = static_cast<double>(g1.tp + g1.fp) / static_cast<double>(g1.n());
  const double p0 = static_cast<double>(g0.tp + g0.fp) / static_cast<double>(g0.n());
  return std::abs(p1 - p0);
}

double equal_opportunity_difference(std::span<const PredictionRecord> records,
                                    int positive_class) {
  const auto [g0, g1] = both_groups(records, positive_class);
  return std::abs(tpr(g1, 1) - tpr(g0, 0));
}

double equalized_odds_difference(std::span<const PredictionRecord> records, int positive_class) {
  const auto [g0, g1] = both_groups(records, positive_class);
  const double tpr_gap = std::abs(tpr(g1, 1) - tpr(g0, 0));
  const double fpr_gap = std::abs(fpr(g1, 1) - fpr(g0, 0));
  return std::max(tpr_gap, fpr_gap);
}

double average_odds_difference(std::span<const PredictionRecord> records, int positive_class,
                               FprMode mode) {
  const auto [g0, g1] = both_groups(records, positive_class);
  const double tpr_gap = std::abs(tpr(g1, 1) - tpr(g0, 0));
  if (mode == FprMode::Standard) {
    const double fpr_gap = std::abs(fpr(g1, 1) - fpr(g0, 0));
    return 0.5 * (tpr_gap + fpr_gap);
  }
  // As-written form: both strata must still be populated so the rates are
  // comparable across modes, then FPR collapses to the group error rate.
  fpr(g1, 1);
  fpr(g0, 0);
  const double err_gap = std::abs(error_rate(g1) - error_rate(g0));
  return 0.5 * (tpr_gap - err_gap);
}

std::map<int, PrfScores> per_group_prf(std::span<const PredictionRecord> records,
                                       int positive_class) {
  validate_records(records);
  const int num_classes = infer_num_classes(records);
  std::map<int, PrfScores> out;
  if (num_classes == 2) {
    for (auto& [z, g] : group_confusion(records, positive_class)) out[z] = binary_prf(g);
    return out;
  }
  // Multiclass: per-class one-vs-rest within each group, unweighted mean.
  std::map<int, std::vector<GroupConfusion>> per_class;  // z -> confusion per class
  for (int c = 0; c < num_classes; ++c)
    for (auto& [z, g] : group_confusion(records, c)) {
      auto& v = per_class[z];
      v.resize(num_classes);
      v[c] = g;
    }
  for (auto& [z, confusions] : per_class) {
    PrfScores macro;
    for (int c = 0; c < num_classes; ++c) {
      const PrfScores s = binary_prf(confusions[c]);
      macro.precision += s.precision;
      macro.recall += s.recall;
      macro.f1 += s.f1;
      macro.degenerate = macro.degenerate || s.degenerate;
    }
    macro.precision /= num_classes;
    macro.recall /= num_classes;
    macro.f1 /= num_classes;
    out[z] = macro;
  }
  return out;
}

FairnessReport audit(std::span<const PredictionRecord> records, int positive_class,
                     FprMode mode) {
  validate_records(records);
  FairnessReport report;
  report.fpr_mode = mode;
  report.num_classes = infer_num_classes(records);
  report.positive_class = positive_class;

  std::size_t correct = 0;
  bool has_z0 = false, has_z1 = false;
  for (const auto& r : records) {
    if (r.y_true == r.y_pred) ++correct;
    (r.z == 0 ? has_z0 : has_z1) = true;
  }
  if (!has_z0 || !has_z1)
    throw Error(ErrorKind::MissingGroup,
                std::string("audit: no records with z=") + (has_z0 ? "1" : "0"));
  report.accuracy = static_cast<double>(correct) / static_cast<double>(records.size());

  auto run = [&](const char* name, auto&& fn) {
    try {
      return fn();
    } catch (const Error& e) {
      throw Error(e.kind(), std::string(name) + ": " + e.message());
    }
  };

  if (report.num_classes == 2) {
    report.spd = run("spd", [&] { return statistical_parity_difference(records, positive_class); });
    report.eod = run("eod", [&] { return equal_opportunity_difference(records, positive_class); });
    report.deo = run("deo", [&] { return equalized_odds_difference(records, positive_class); });
    report.aod =
        run("aod", [&] { return average_odds_difference(records, positive_class, mode); });
  } else {
    const int k = report.num_classes;
    auto aod_std = [](std::span<const PredictionRecord> rs, int c) {
      return average_odds_difference(rs, c, FprMode::Standard);
    };
    auto aod_lit = [](std::span<const PredictionRecord> rs, int c) {
      return average_odds_difference(rs, c, FprMode::AsWritten);
    };
    report.spd = macro_average(records, k, &statistical_parity_difference, "spd", report.warnings);
    report.eod = macro_average(records, k, &equal_opportunity_difference, "eod", report.warnings);
    report.deo = macro_average(records, k, &equalized_odds_difference, "deo", report.warnings);
    report.aod = macro_average(records, k, mode == FprMode::Standard ? +aod_std : +aod_lit, "aod",
                               report.warnings);
  }
  report.per_group = per_group_prf(records, positive_class);
  return report;
}

}  // namespace fairsketch::metrics
