#include "report_table.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include "fairsketch/csv.hpp"
#include "fairsketch/error.hpp"

namespace fairsketch::cli {
namespace {

std::string fixed4(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

std::string full_precision(double v) {
  std::ostringstream out;
  out.precision(std::numeric_limits<double>::max_digits10);
  out << v;
  return out.str();
}

std::string number(double v) {
  std::ostringstream out;
  out << v;
  return out.str();
}

/// Approximate display width: count UTF-8 code points, not bytes.
std::size_t display_width(const std::string& s) {
  std::size_t w = 0;
  for (unsigned char c : s)
    if ((c & 0xC0) != 0x80) ++w;
  return w;
}

struct MetricColumn {
  const char* header;        // with direction arrow
  const char* csv_name;      // plain
  double RunSummary::*field;
  bool higher_is_better;
  bool by_magnitude;  // pick the best by |value| (signed AOD)
};

std::vector<MetricColumn> metric_columns(bool binary) {
  if (binary)
    return {{"ACC ↑", "acc", &RunSummary::accuracy, true, false},
            {"SPD ↓", "spd", &RunSummary::spd, false, false},
            {"DEO ↓", "deo", &RunSummary::deo, false, false}};
  return {{"SPD ↓", "spd", &RunSummary::spd, false, false},
          {"EOD ↓", "eod", &RunSummary::eod, false, false},
          {"AOD ↓", "aod", &RunSummary::aod, false, true}};
}

double best_value(const ResultTable& table, const MetricColumn& col) {
  double best = table.runs.front().*(col.field);
  for (const auto& run : table.runs) {
    const double v = run.*(col.field);
    if (col.by_magnitude ? std::abs(v) < std::abs(best)
                         : (col.higher_is_better ? v > best : v < best))
      best = v;
  }
  return best;
}

}  // namespace

ResultTable build_table(std::vector<RunSummary> runs) {
  if (runs.empty()) throw Error(ErrorKind::Config, "no runs to tabulate");
  ResultTable table;
  table.binary = runs.front().num_classes == 2;
  for (const auto& run : runs)
    if ((run.num_classes == 2) != table.binary)
      throw Error(ErrorKind::Config,
                  "cannot mix binary and multiclass runs in one table (run '" + run.condition +
                      "' has " + std::to_string(run.num_classes) + " classes)");
  table.runs = std::move(runs);
  return table;
}

std::string render_csv(const ResultTable& table) {
  std::ostringstream out;
  std::vector<std::string> header = {"condition", "lambda", "seed", "config_hash"};
  const auto cols = metric_columns(table.binary);
  for (const auto& col : cols) header.push_back(col.csv_name);
  csv::write_row(out, header);
  for (const auto& run : table.runs) {
    std::vector<std::string> row = {run.condition, number(run.lambda), std::to_string(run.seed),
                                    run.config_hash};
    for (const auto& col : cols) row.push_back(full_precision(run.*(col.field)));
    csv::write_row(out, row);
  }
  return out.str();
}

std::string render_text(const ResultTable& table) {
  const auto cols = metric_columns(table.binary);
  const bool flag_best = table.runs.size() > 1;

  std::vector<std::string> header = {"condition", "lambda", "seed"};
  for (const auto& col : cols) header.push_back(col.header);

  std::vector<std::vector<std::string>> rows;
  for (const auto& run : table.runs) {
    std::vector<std::string> row = {run.condition, number(run.lambda), std::to_string(run.seed)};
    for (const auto& col : cols) {
      std::string cell = fixed4(run.*(col.field));
      if (flag_best && run.*(col.field) == best_value(table, col)) cell += '*';
      row.push_back(std::move(cell));
    }
    rows.push_back(std::move(row));
  }

  std::vector<std::size_t> widths(header.size());
  for (std::size_t c = 0; c < header.size(); ++c) {
    widths[c] = display_width(header[c]);
    for (const auto& row : rows) widths[c] = std::max(widths[c], display_width(row[c]));
  }

  std::ostringstream out;
  auto emit = [&](const std::vector<std::string>& row) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      out << row[c];
      if (c + 1 < row.size())
        out << std::string(widths[c] - display_width(row[c]) + 2, ' ');
    }
    out << '\n';
  };
  emit(header);
  std::size_t rule = 0;
  for (std::size_t c = 0; c < widths.size(); ++c) rule += widths[c] + (c + 1 < widths.size() ? 2 : 0);
  out << std::string(rule, '-') << '\n';
  for (const auto& row : rows) emit(row);
  return out.str();
}

}  // namespace fairsketch::cli
