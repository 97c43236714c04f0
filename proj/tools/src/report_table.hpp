#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace fairsketch::cli {

/// One experiment run's headline numbers, as read back from a run directory.
struct RunSummary {
  std::string condition;
  double lambda = 0.0;
  std::uint64_t seed = 0;
  std::string config_hash;
  int num_classes = 2;
  double accuracy = 0.0;
  double spd = 0.0;
  double eod = 0.0;
  double deo = 0.0;
  double aod = 0.0;
};

/// Condition x lambda result grid. Binary runs report ACC/SPD/DEO, multiclass
/// runs report SPD/EOD/AOD; the two regimes cannot be mixed in one table.
struct ResultTable {
  bool binary = true;
  std::vector<RunSummary> runs;
};

ResultTable build_table(std::vector<RunSummary> runs);

/// Machine-readable rendering; metric columns keep full precision.
std::string render_csv(const ResultTable& table);

/// Aligned human table with direction arrows in the headers and the best
/// value per metric column marked with '*' (when more than one run).
std::string render_text(const ResultTable& table);

}  // namespace fairsketch::cli
