#include "commands.hpp"

#include <cmath>
#include <fstream>
#include <iostream>
#include <limits>
#include <sstream>

#include <nlohmann/json.hpp>

#include "config.hpp"
#include "featurize.hpp"
#include "fairsketch/csv.hpp"
#include "fairsketch/data.hpp"
#include "fairsketch/error.hpp"
#include "fairsketch/model.hpp"
#include "report_table.hpp"

namespace fairsketch::cli {
namespace {

using nlohmann::json;

void print_notes(const std::vector<std::string>& notes, const GlobalOpts& opts) {
  if (!opts.verbose) return;
  for (const auto& note : notes) std::cerr << "note: " << note << '\n';
}

std::string full(double v) {
  std::ostringstream out;
  out.precision(std::numeric_limits<double>::max_digits10);
  out << v;
  return out.str();
}

std::string fixed4(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

Matrix features_of(const std::vector<data::LabeledExample>& examples) {
  if (examples.empty()) return Matrix(0, 0);
  Matrix x(examples.size(), examples.front().features.size());
  for (std::size_t i = 0; i < examples.size(); ++i) {
    if (examples[i].features.size() != x.cols())
      throw Error(ErrorKind::Shape, "example '" + examples[i].id + "' feature width mismatch");
    for (std::size_t j = 0; j < x.cols(); ++j) x(i, j) = examples[i].features[j];
  }
  return x;
}

double get_double(const json& doc, const char* key, const std::string& context) {
  if (!doc.contains(key) || !doc.at(key).is_number())
    throw Error(ErrorKind::Config, context + " is missing numeric key '" + key + "'");
  return doc.at(key).get<double>();
}

json load_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open '" + path.string() + "'");
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Format, "'" + path.string() + "' is not valid JSON: " + e.what());
  }
}

}  // namespace

void cmd_sketchify(const std::filesystem::path& in_dir, const std::filesystem::path& out_dir,
                   sketch::SketchMode mode, const GlobalOpts& opts) {
  sketch::SketchParams params;
  if (opts.config) params = load_config(*opts.config).sketch_params;
  const sketch::SketchifyResult result = sketchify_dataset(in_dir, out_dir, params, mode);
  print_notes(result.warnings, opts);
  std::cout << result.converted << " converted, " << result.failed << " failed; manifest at "
            << result.manifest_path.string() << '\n';
}

void cmd_train(const GlobalOpts& opts, const std::optional<std::filesystem::path>& out_override) {
  if (!opts.config) throw Error(ErrorKind::Config, "train requires --config");
  ExperimentConfig cfg = load_config(*opts.config);
  if (opts.seed) cfg.seed = *opts.seed;
  const std::uint64_t hash = config_hash(cfg);
  const std::string hash_str = hash_hex(hash);

  if (cfg.manifest.empty())
    throw Error(ErrorKind::Config, "train requires a dataset manifest in the config");
  data::ManifestSpec spec;
  spec.label_attr = cfg.label_attr;
  spec.z_rule = cfg.z_attr;
  spec.z_positive_values = cfg.z_positive_values;
  spec.id_attr = cfg.id_attr;
  spec.feature_columns = cfg.feature_columns;

  std::vector<std::string> notes;
  std::vector<data::LabeledExample> examples =
      data::load_attribute_manifest(cfg.resolve(cfg.manifest), spec, &notes);
  print_notes(notes, opts);
  examples = featurize(std::move(examples),
                       cfg.images_dir.empty() ? std::filesystem::path{}
                                              : cfg.resolve(cfg.images_dir),
                       cfg.image_size);

  const data::SplitSet splits = data::balanced_split(examples, cfg.seed, cfg.ratios);
  if (splits.train.empty())
    throw Error(ErrorKind::Config, "balanced split left an empty training set");

  model::TrainConfig train_cfg;
  train_cfg.layer_dims.push_back(splits.train.front().features.size());
  for (std::size_t d : cfg.hidden_dims) train_cfg.layer_dims.push_back(d);
  train_cfg.layer_dims.push_back(
      cfg.activation == model::Activation::ReluHiddenSigmoidOut
          ? 1
          : static_cast<std::size_t>(cfg.num_classes));
  train_cfg.activation = cfg.activation;
  train_cfg.optimizer = cfg.optimizer;
  train_cfg.learning_rate = cfg.learning_rate;
  train_cfg.batch_size = std::min(cfg.batch_size, splits.train.size());
  train_cfg.epochs = cfg.epochs;
  train_cfg.seed = cfg.seed;
  train_cfg.lambda = cfg.lambda;
  train_cfg.spd_ideal = cfg.spd_ideal;
  train_cfg.positive_class = cfg.positive_class;

  const auto [params, history] = model::train(splits, train_cfg);

  const std::filesystem::path out_dir =
      out_override ? *out_override : cfg.resolve(cfg.out_dir);
  std::filesystem::create_directories(out_dir);

  {
    std::ofstream out(out_dir / "config.json");
    if (!out) throw Error(ErrorKind::Io, "cannot write '" + (out_dir / "config.json").string() + "'");
    out << canonical_json(cfg) << '\n';
  }
  model::save_checkpoint(out_dir / "checkpoint.bin", params, cfg.seed, hash);
  {
    std::ofstream out(out_dir / "history.csv");
    if (!out) throw Error(ErrorKind::Io, "cannot write '" + (out_dir / "history.csv").string() + "'");
    csv::write_row(out, {"epoch", "train_loss", "train_ce", "train_fair", "val_accuracy",
                         "val_spd", "config_hash", "seed"});
    for (const auto& stats : history)
      csv::write_row(out, {std::to_string(stats.epoch), full(stats.train_loss),
                           full(stats.train_ce), full(stats.train_fair),
                           stats.val_accuracy ? full(*stats.val_accuracy) : std::string{},
                           stats.val_spd ? full(*stats.val_spd) : std::string{}, hash_str,
                           std::to_string(cfg.seed)});
  }

  // Score the held-out test split so `audit` can run on a standard log.
  std::size_t test_correct = 0;
  {
    std::ofstream out(out_dir / "test_predictions.csv");
    if (!out)
      throw Error(ErrorKind::Io,
                  "cannot write '" + (out_dir / "test_predictions.csv").string() + "'");
    csv::write_row(out, {"id", "y_true", "y_pred", "score", "z", "config_hash", "seed"});
    if (!splits.test.empty()) {
      const auto [probs, cache] = model::forward(params, features_of(splits.test));
      const std::vector<int> preds = model::hard_predictions(probs);
      for (std::size_t i = 0; i < splits.test.size(); ++i) {
        const auto& ex = splits.test[i];
        std::string score;
        if (probs.cols() == 1)
          score = full(probs(i, 0));
        else if (probs.cols() == 2)
          score = full(probs(i, 1));
        csv::write_row(out, {ex.id, std::to_string(ex.label), std::to_string(preds[i]), score,
                             std::to_string(ex.z), hash_str, std::to_string(cfg.seed)});
        if (preds[i] == ex.label) ++test_correct;
      }
    }
  }

  std::cout << "trained " << history.size() << " epoch(s) on " << splits.train.size()
            << " examples (val " << splits.val.size() << ", test " << splits.test.size()
            << ", discarded " << splits.discarded.size() << ")\n";
  if (!history.empty()) {
    const auto& last = history.back();
    std::cout << "final train loss " << fixed4(last.train_loss) << " (ce "
              << fixed4(last.train_ce) << ", fairness " << fixed4(last.train_fair) << ")\n";
    if (last.val_accuracy) {
      std::cout << "val accuracy " << fixed4(*last.val_accuracy);
      if (last.val_spd) std::cout << ", val spd " << fixed4(*last.val_spd);
      std::cout << '\n';
    }
  }
  if (!splits.test.empty())
    std::cout << "test accuracy "
              << fixed4(static_cast<double>(test_correct) /
                        static_cast<double>(splits.test.size()))
              << '\n';
  std::cout << "wrote " << out_dir.string() << " (config hash " << hash_str << ")\n";
}

void cmd_audit(const std::filesystem::path& log_path, std::optional<int> positive_class,
               std::optional<metrics::FprMode> fpr_mode,
               const std::optional<std::filesystem::path>& report_out, const GlobalOpts& opts) {
  std::optional<ExperimentConfig> cfg;
  if (opts.config) {
    cfg = load_config(*opts.config);
    if (opts.seed) cfg->seed = *opts.seed;
  }
  const int pos = positive_class ? *positive_class : (cfg ? cfg->positive_class : 1);
  const metrics::FprMode mode =
      fpr_mode ? *fpr_mode : (cfg ? cfg->fpr_mode : metrics::FprMode::Standard);

  std::vector<std::string> notes;
  const std::vector<metrics::PredictionRecord> records =
      data::load_prediction_log(log_path, &notes);
  print_notes(notes, opts);

  const metrics::FairnessReport report = metrics::audit(records, pos, mode);
  for (const auto& warning : report.warnings) std::cerr << "warning: " << warning << '\n';

  std::cout << "records " << records.size() << ", classes " << report.num_classes
            << ", positive class " << report.positive_class << ", fpr mode "
            << metrics::to_string(report.fpr_mode) << '\n';
  std::cout << "ACC ↑   SPD ↓   EOD ↓   DEO ↓   AOD ↓\n";
  std::cout << fixed4(report.accuracy) << "  " << fixed4(report.spd) << "  "
            << fixed4(report.eod) << "  " << fixed4(report.deo) << "  " << fixed4(report.aod)
            << '\n';
  std::cout << "\ngroup  precision  recall  f1\n";
  for (const int z : {1, 0}) {
    const auto it = report.per_group.find(z);
    if (it == report.per_group.end()) continue;
    std::cout << "z=" << z << "    " << fixed4(it->second.precision) << "     "
              << fixed4(it->second.recall) << "  " << fixed4(it->second.f1) << '\n';
  }

  if (report_out) {
    json doc;
    doc["record_count"] = records.size();
    doc["accuracy"] = report.accuracy;
    doc["spd"] = report.spd;
    doc["eod"] = report.eod;
    doc["deo"] = report.deo;
    doc["aod"] = report.aod;
    doc["num_classes"] = report.num_classes;
    doc["positive_class"] = report.positive_class;
    doc["fpr_mode"] = metrics::to_string(report.fpr_mode);
    json groups = json::object();
    for (const auto& [z, prf] : report.per_group)
      groups[std::to_string(z)] = {{"precision", prf.precision},
                                   {"recall", prf.recall},
                                   {"f1", prf.f1},
                                   {"degenerate", prf.degenerate}};
    doc["per_group"] = groups;
    doc["warnings"] = report.warnings;
    if (cfg) {
      doc["config_hash"] = hash_hex(config_hash(*cfg));
      doc["seed"] = cfg->seed;
    }
    if (report_out->has_parent_path())
      std::filesystem::create_directories(report_out->parent_path());
    std::ofstream out(*report_out);
    if (!out) throw Error(ErrorKind::Io, "cannot write '" + report_out->string() + "'");
    out << doc.dump(2) << '\n';
    std::cout << "\nwrote " << report_out->string() << '\n';
  }
}

void cmd_report(const std::vector<std::filesystem::path>& run_dirs,
                const std::filesystem::path& table_out, const GlobalOpts& opts) {
  std::vector<RunSummary> runs;
  for (const auto& dir : run_dirs) {
    const std::filesystem::path report_path = dir / "report.json";
    const std::filesystem::path config_path = dir / "config.json";
    if (!std::filesystem::exists(report_path))
      throw Error(ErrorKind::Config, "run dir '" + dir.string() + "' has no report.json");
    if (!std::filesystem::exists(config_path))
      throw Error(ErrorKind::Config, "run dir '" + dir.string() + "' has no config.json");

    const json report = load_json_file(report_path);
    std::ifstream cfg_in(config_path);
    std::ostringstream cfg_buf;
    cfg_buf << cfg_in.rdbuf();
    const ExperimentConfig cfg = parse_config(cfg_buf.str());

    RunSummary run;
    run.condition = cfg.condition;
    run.lambda = cfg.lambda;
    run.seed = cfg.seed;
    run.config_hash = hash_hex(config_hash(cfg));
    const std::string context = "'" + report_path.string() + "'";
    run.num_classes = static_cast<int>(get_double(report, "num_classes", context));
    run.accuracy = get_double(report, "accuracy", context);
    run.spd = get_double(report, "spd", context);
    run.eod = get_double(report, "eod", context);
    run.deo = get_double(report, "deo", context);
    run.aod = get_double(report, "aod", context);
    runs.push_back(std::move(run));
  }

  const ResultTable table = build_table(std::move(runs));
  std::cout << render_text(table);
  std::ofstream out(table_out);
  if (!out) throw Error(ErrorKind::Io, "cannot write '" + table_out.string() + "'");
  out << render_csv(table);
  std::cout << "wrote " << table_out.string() << '\n';
  if (opts.verbose) std::cerr << "note: tabulated " << table.runs.size() << " run(s)\n";
}

}  // namespace fairsketch::cli
