#include "config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "fairsketch/error.hpp"

namespace fairsketch::cli {
namespace {

using nlohmann::json;

const std::set<std::string> kKnownKeys = {
    "manifest",      "images_dir",   "id_attr",        "label_attr",
    "z_attr",        "z_positive_values",              "feature_columns",
    "image_size",    "condition",    "sigma",          "k",
    "tau",           "epsilon",      "phi",            "hidden_dims",
    "num_classes",   "activation",   "optimizer",      "learning_rate",
    "batch_size",    "epochs",       "seed",           "lambda",
    "spd_ideal",     "positive_class",                 "ratios",
    "fpr_mode",      "out_dir"};

template <typename T>
void read_key(const json& doc, const char* key, T& slot) {
  if (!doc.contains(key)) return;
  try {
    slot = doc.at(key).get<T>();
  } catch (const json::exception&) {
    throw Error(ErrorKind::Config, std::string("config key '") + key + "' has the wrong type");
  }
}

}  // namespace

std::filesystem::path ExperimentConfig::resolve(const std::string& path) const {
  const std::filesystem::path p(path);
  if (p.is_absolute() || base_dir.empty()) return p;
  return base_dir / p;
}

ExperimentConfig parse_config(const std::string& json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Config, std::string("config is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw Error(ErrorKind::Config, "config root must be a JSON object");
  for (const auto& [key, value] : doc.items())
    if (!kKnownKeys.count(key))
      throw Error(ErrorKind::Config, "unknown config key '" + key + "'");

  ExperimentConfig cfg;
  read_key(doc, "manifest", cfg.manifest);
  read_key(doc, "images_dir", cfg.images_dir);
  read_key(doc, "id_attr", cfg.id_attr);
  read_key(doc, "label_attr", cfg.label_attr);
  read_key(doc, "z_attr", cfg.z_attr);
  read_key(doc, "z_positive_values", cfg.z_positive_values);
  read_key(doc, "feature_columns", cfg.feature_columns);
  read_key(doc, "image_size", cfg.image_size);
  read_key(doc, "condition", cfg.condition);
  read_key(doc, "sigma", cfg.sketch_params.sigma);
  read_key(doc, "k", cfg.sketch_params.k);
  read_key(doc, "tau", cfg.sketch_params.tau);
  read_key(doc, "epsilon", cfg.sketch_params.epsilon);
  read_key(doc, "phi", cfg.sketch_params.phi);
  read_key(doc, "hidden_dims", cfg.hidden_dims);
  read_key(doc, "num_classes", cfg.num_classes);
  if (doc.contains("activation"))
    cfg.activation = model::activation_from_string(doc.at("activation").get<std::string>());
  if (doc.contains("optimizer"))
    cfg.optimizer = model::optimizer_from_string(doc.at("optimizer").get<std::string>());
  read_key(doc, "learning_rate", cfg.learning_rate);
  read_key(doc, "batch_size", cfg.batch_size);
  read_key(doc, "epochs", cfg.epochs);
  read_key(doc, "seed", cfg.seed);
  read_key(doc, "lambda", cfg.lambda);
  read_key(doc, "spd_ideal", cfg.spd_ideal);
  read_key(doc, "positive_class", cfg.positive_class);
  if (doc.contains("ratios")) {
    const auto r = doc.at("ratios");
    if (!r.is_array() || r.size() != 3)
      throw Error(ErrorKind::Config, "config key 'ratios' must be a 3-element array");
    for (std::size_t i = 0; i < 3; ++i) cfg.ratios[i] = r.at(i).get<double>();
  }
  if (doc.contains("fpr_mode"))
    cfg.fpr_mode = metrics::fpr_mode_from_string(doc.at("fpr_mode").get<std::string>());
  read_key(doc, "out_dir", cfg.out_dir);

  validate(cfg);
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open config '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  ExperimentConfig cfg = parse_config(buf.str());
  cfg.base_dir = path.parent_path();
  return cfg;
}

void validate(const ExperimentConfig& cfg) {
  if (cfg.condition != "original" && cfg.condition != "grayscale" && cfg.condition != "sketch")
    throw Error(ErrorKind::Config, "condition must be original, grayscale, or sketch");
  sketch::validate(cfg.sketch_params);
  if (cfg.num_classes < 2) throw Error(ErrorKind::Config, "num_classes must be at least 2");
  if (cfg.activation == model::Activation::ReluHiddenSigmoidOut && cfg.num_classes != 2)
    throw Error(ErrorKind::Config, "sigmoid output requires num_classes = 2");
  for (std::size_t d : cfg.hidden_dims)
    if (d == 0) throw Error(ErrorKind::Config, "hidden_dims entries must be positive");
  if (cfg.image_size == 0) throw Error(ErrorKind::Config, "image_size must be positive");
  if (cfg.learning_rate <= 0.0) throw Error(ErrorKind::Config, "learning_rate must be positive");
  if (cfg.batch_size == 0) throw Error(ErrorKind::Config, "batch_size must be positive");
  if (cfg.epochs == 0) throw Error(ErrorKind::Config, "epochs must be at least 1");
  if (cfg.lambda < 0.0) throw Error(ErrorKind::Config, "lambda must be non-negative");
  if (cfg.positive_class < 0 || cfg.positive_class >= cfg.num_classes)
    throw Error(ErrorKind::Config, "positive_class must name a valid class");
  double sum = 0.0;
  for (double r : cfg.ratios) {
    if (r < 0.0) throw Error(ErrorKind::Config, "ratios must be non-negative");
    sum += r;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw Error(ErrorKind::Config, "ratios must sum to 1");
}

std::string canonical_json(const ExperimentConfig& cfg) {
  json doc;
  doc["manifest"] = cfg.manifest;
  doc["images_dir"] = cfg.images_dir;
  doc["id_attr"] = cfg.id_attr;
  doc["label_attr"] = cfg.label_attr;
  doc["z_attr"] = cfg.z_attr;
  doc["z_positive_values"] = cfg.z_positive_values;
  doc["feature_columns"] = cfg.feature_columns;
  doc["image_size"] = cfg.image_size;
  doc["condition"] = cfg.condition;
  doc["sigma"] = cfg.sketch_params.sigma;
  doc["k"] = cfg.sketch_params.k;
  doc["tau"] = cfg.sketch_params.tau;
  doc["epsilon"] = cfg.sketch_params.epsilon;
  doc["phi"] = cfg.sketch_params.phi;
  doc["hidden_dims"] = cfg.hidden_dims;
  doc["num_classes"] = cfg.num_classes;
  doc["activation"] = model::to_string(cfg.activation);
  doc["optimizer"] = model::to_string(cfg.optimizer);
  doc["learning_rate"] = cfg.learning_rate;
  doc["batch_size"] = cfg.batch_size;
  doc["epochs"] = cfg.epochs;
  doc["seed"] = cfg.seed;
  doc["lambda"] = cfg.lambda;
  doc["spd_ideal"] = cfg.spd_ideal;
  doc["positive_class"] = cfg.positive_class;
  doc["ratios"] = cfg.ratios;
  doc["fpr_mode"] = metrics::to_string(cfg.fpr_mode);
  doc["out_dir"] = cfg.out_dir;
  return doc.dump(2);
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t hash = 14695981039346656037ULL;
  for (unsigned char c : bytes) {
    hash ^= c;
    hash *= 1099511628211ULL;
  }
  return hash;
}

std::uint64_t config_hash(const ExperimentConfig& cfg) { return fnv1a64(canonical_json(cfg)); }

std::string hash_hex(std::uint64_t hash) {
  static const char* digits = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[i] = digits[hash & 0xF];
    hash >>= 4;
  }
  return out;
}

}  // namespace fairsketch::cli
