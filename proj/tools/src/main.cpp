#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "commands.hpp"
#include "fairsketch/error.hpp"
#include "fairsketch/metrics.hpp"
#include "fairsketch/sketch.hpp"

namespace {

constexpr int kExitInputError = 2;
constexpr int kExitNumericalError = 3;

}  // namespace

int main(int argc, char** argv) {
  using fairsketch::cli::GlobalOpts;

  CLI::App app{"fairness-aware classification toolkit: sketchify, train, audit, report"};
  app.require_subcommand(1);

  GlobalOpts opts;
  std::uint64_t seed_value = 0;
  std::string config_path;
  auto* seed_opt = app.add_option("--seed", seed_value, "override the experiment seed");
  auto* config_opt =
      app.add_option("--config", config_path, "experiment config JSON")->check(CLI::ExistingFile);
  app.add_flag("--verbose", opts.verbose, "print parser notes and warnings");

  // sketchify
  std::string sk_in, sk_out, sk_mode = "sketch";
  auto* sketchify = app.add_subcommand("sketchify", "convert an image directory");
  sketchify->fallthrough();
  sketchify->add_option("--in", sk_in, "input image directory")
      ->required()
      ->check(CLI::ExistingDirectory);
  sketchify->add_option("--out", sk_out, "output directory")->required();
  sketchify->add_option("--mode", sk_mode, "conversion mode")
      ->check(CLI::IsMember({"sketch", "grayscale"}));

  // train
  std::string train_out;
  auto* train = app.add_subcommand("train", "train a model from a config");
  train->fallthrough();
  auto* train_out_opt = train->add_option("--out", train_out, "run directory override");

  // audit
  std::string audit_log, audit_out, audit_mode;
  int audit_pos = 1;
  auto* audit = app.add_subcommand("audit", "audit a prediction log");
  audit->fallthrough();
  audit->add_option("--log", audit_log, "prediction log (CSV or JSONL)")
      ->required()
      ->check(CLI::ExistingFile);
  auto* audit_pos_opt = audit->add_option("--positive-class", audit_pos, "positive class index");
  auto* audit_mode_opt = audit->add_option("--fpr-mode", audit_mode, "AOD false-positive mode")
                             ->check(CLI::IsMember({"standard", "as_written"}));
  auto* audit_out_opt = audit->add_option("--out", audit_out, "report JSON output path");

  // report
  std::vector<std::string> report_dirs;
  std::string report_table = "table.csv";
  auto* report = app.add_subcommand("report", "tabulate audited runs");
  report->fallthrough();
  report->add_option("dirs", report_dirs, "run directories")->required()->expected(-1);
  report->add_option("--out", report_table, "table CSV output path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitInputError;
  }

  if (*seed_opt) opts.seed = seed_value;
  if (*config_opt) opts.config = config_path;

  try {
    if (*sketchify) {
      fairsketch::cli::cmd_sketchify(sk_in, sk_out,
                                     fairsketch::sketch::sketch_mode_from_string(sk_mode), opts);
    } else if (*train) {
      std::optional<std::filesystem::path> out;
      if (*train_out_opt) out = train_out;
      fairsketch::cli::cmd_train(opts, out);
    } else if (*audit) {
      std::optional<int> pos;
      if (*audit_pos_opt) pos = audit_pos;
      std::optional<fairsketch::metrics::FprMode> mode;
      if (*audit_mode_opt) mode = fairsketch::metrics::fpr_mode_from_string(audit_mode);
      std::optional<std::filesystem::path> out;
      if (*audit_out_opt) out = audit_out;
      fairsketch::cli::cmd_audit(audit_log, pos, mode, out, opts);
    } else if (*report) {
      std::vector<std::filesystem::path> dirs(report_dirs.begin(), report_dirs.end());
      fairsketch::cli::cmd_report(dirs, report_table, opts);
    }
    return 0;
  } catch (const fairsketch::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return e.kind() == fairsketch::ErrorKind::NonFiniteLoss ? kExitNumericalError
                                                            : kExitInputError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInputError;
  }
}
