#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include "fairsketch/metrics.hpp"
#include "fairsketch/sketch.hpp"

namespace fairsketch::cli {

/// Flags shared by every subcommand.
struct GlobalOpts {
  std::optional<std::uint64_t> seed;  // overrides the config's seed
  std::optional<std::filesystem::path> config;
  bool verbose = false;
};

void cmd_sketchify(const std::filesystem::path& in_dir, const std::filesystem::path& out_dir,
                   sketch::SketchMode mode, const GlobalOpts& opts);

void cmd_train(const GlobalOpts& opts,
               const std::optional<std::filesystem::path>& out_override);

void cmd_audit(const std::filesystem::path& log_path, std::optional<int> positive_class,
               std::optional<metrics::FprMode> fpr_mode,
               const std::optional<std::filesystem::path>& report_out, const GlobalOpts& opts);

void cmd_report(const std::vector<std::filesystem::path>& run_dirs,
                const std::filesystem::path& table_out, const GlobalOpts& opts);

}  // namespace fairsketch::cli
