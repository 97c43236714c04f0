#include "fairsketch/data.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "fairsketch/csv.hpp"
#include "fairsketch/error.hpp"
#include "fairsketch/rng.hpp"

namespace fairsketch::data {
namespace {

using json = nlohmann::json;

[[noreturn]] void malformed(std::size_t line, const std::string& what) {
  throw Error(ErrorKind::MalformedRecord, "line " + std::to_string(line) + ": " + what);
}

int parse_int(const std::string& s, std::size_t line, const char* field) {
  int value = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc{} || ptr != s.data() + s.size())
    malformed(line, std::string("field '") + field + "' is not an integer: '" + s + "'");
  return value;
}

double parse_double(const std::string& s, std::size_t line, const char* field) {
  try {
    std::size_t consumed = 0;
    const double value = std::stod(s, &consumed);
    if (consumed != s.size()) throw std::invalid_argument(s);
    return value;
  } catch (const std::exception&) {
    malformed(line, std::string("field '") + field + "' is not a number: '" + s + "'");
  }
}

void validate_record(PredictionRecord& r, std::size_t line) {
  if (r.y_true < 0) malformed(line, "y_true must be a non-negative class index");
  if (r.y_pred < 0) malformed(line, "y_pred must be a non-negative class index");
  if (r.z != 0 && r.z != 1) malformed(line, "z must be 0 or 1");
  if (r.score && (*r.score < 0.0 || *r.score > 1.0)) malformed(line, "score outside [0,1]");
}

std::vector<PredictionRecord> load_log_csv(const std::filesystem::path& path,
                                           std::vector<std::string>* notes) {
  const csv::Table table = csv::read_file(path);
  const std::set<std::string> known = {"id", "y_true", "y_pred", "score", "z"};
  for (const auto& col : table.header)
    if (notes && !known.count(col)) notes->push_back("ignoring unknown column '" + col + "'");

  auto require = [&](const char* name) {
    const auto idx = table.column(name);
    if (!idx) malformed(1, std::string("missing required column '") + name + "'");
    return *idx;
  };
  const std::size_t id_col = require("id");
  const std::size_t yt_col = require("y_true");
  const std::size_t yp_col = require("y_pred");
  const std::size_t z_col = require("z");
  const auto score_col = table.column("score");

  std::vector<PredictionRecord> records;
  records.reserve(table.rows.size());
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const auto& row = table.rows[i];
    const std::size_t line = table.line_numbers[i];
    if (row.size() != table.header.size())
      malformed(line, "expected " + std::to_string(table.header.size()) + " fields, got " +
                          std::to_string(row.size()));
    PredictionRecord r;
    r.id = row[id_col];
    r.y_true = parse_int(row[yt_col], line, "y_true");
    r.y_pred = parse_int(row[yp_col], line, "y_pred");
    r.z = parse_int(row[z_col], line, "z");
    if (score_col && !row[*score_col].empty())
      r.score = parse_double(row[*score_col], line, "score");
    validate_record(r, line);
    records.push_back(std::move(r));
  }
  return records;
}

std::vector<PredictionRecord> load_log_jsonl(const std::filesystem::path& path,
                                             std::vector<std::string>* notes) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open '" + path.string() + "'");

  std::vector<PredictionRecord> records;
  std::set<std::string> noted;
  std::string line_text;
  for (std::size_t line = 1; std::getline(in, line_text); ++line) {
    if (line_text.find_first_not_of(" \t\r") == std::string::npos) continue;
    json obj;
    try {
      obj = json::parse(line_text);
    } catch (const json::parse_error& e) {
      malformed(line, std::string("invalid JSON: ") + e.what());
    }
    if (!obj.is_object()) malformed(line, "expected a JSON object");

    PredictionRecord r;
    auto fetch = [&](const char* key) -> const json& {
      auto it = obj.find(key);
      if (it == obj.end()) malformed(line, std::string("missing key '") + key + "'");
      return *it;
    };
    const json& id = fetch("id");
    r.id = id.is_string() ? id.get<std::string>() : id.dump();
    auto as_int = [&](const char* key) {
      const json& v = fetch(key);
      if (!v.is_number_integer()) malformed(line, std::string("key '") + key + "' must be an integer");
      return v.get<int>();
    };
    r.y_true = as_int("y_true");
    r.y_pred = as_int("y_pred");
    r.z = as_int("z");
    if (auto it = obj.find("score"); it != obj.end() && !it->is_null()) {
      if (!it->is_number()) malformed(line, "key 'score' must be a number");
      r.score = it->get<double>();
    }
    if (notes)
      for (auto& [key, value] : obj.items())
        if (key != "id" && key != "y_true" && key != "y_pred" && key != "z" && key != "score" &&
            noted.insert(key).second)
          notes->push_back("ignoring unknown key '" + key + "'");
    validate_record(r, line);
    records.push_back(std::move(r));
  }
  return records;
}

bool looks_like_jsonl(const std::filesystem::path& path) {
  const auto ext = path.extension().string();
  if (ext == ".jsonl" || ext == ".ndjson") return true;
  if (ext == ".csv") return false;
  std::ifstream in(path, std::ios::binary);
  char c = 0;
  while (in.get(c))
    if (!std::isspace(static_cast<unsigned char>(c))) return c == '{';
  return false;
}

/// Splits "name>=threshold" group rules; plain names pass through.
struct GroupRule {
  std::string attr;
  bool thresholded = false;
  double threshold = 0.0;
};

GroupRule parse_group_rule(const std::string& z_rule) {
  GroupRule rule;
  const auto pos = z_rule.find(">=");
  if (pos == std::string::npos) {
    rule.attr = z_rule;
    return rule;
  }
  rule.attr = z_rule.substr(0, pos);
  while (!rule.attr.empty() && rule.attr.back() == ' ') rule.attr.pop_back();
  rule.thresholded = true;
  rule.threshold = parse_double(z_rule.substr(pos + 2), 0, "z threshold");
  return rule;
}

int apply_group_rule(const GroupRule& rule, const std::string& value,
                     const std::vector<std::string>& positive_values, std::size_t line) {
  if (rule.thresholded) return parse_double(value, line, "z") >= rule.threshold ? 1 : 0;
  return std::find(positive_values.begin(), positive_values.end(), value) !=
                 positive_values.end()
             ? 1
             : 0;
}

/// +-1 attribute flags map to 1/0; anything else must be a class index.
int parse_label_value(const std::string& value, std::size_t line) {
  if (value == "1" || value == "+1") return 1;
  if (value == "-1") return 0;
  const int label = parse_int(value, line, "label");
  if (label < 0) malformed(line, "label must be a non-negative class index");
  return label;
}

std::vector<std::string> split_whitespace(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream in(s);
  std::string token;
  while (in >> token) out.push_back(token);
  return out;
}

std::vector<LabeledExample> load_manifest_celeba(std::ifstream& in, const ManifestSpec& spec) {
  std::string line_text;
  if (!std::getline(in, line_text)) throw Error(ErrorKind::Format, "empty manifest");
  const std::size_t declared = static_cast<std::size_t>(parse_int(
      line_text.substr(0, line_text.find_last_not_of(" \r") + 1), 1, "count"));

  if (!std::getline(in, line_text)) throw Error(ErrorKind::Format, "missing attribute name row");
  const std::vector<std::string> attrs = split_whitespace(line_text);

  auto attr_index = [&](const std::string& name) -> std::size_t {
    const auto it = std::find(attrs.begin(), attrs.end(), name);
    if (it == attrs.end())
      throw Error(ErrorKind::UnknownAttribute, "attribute '" + name + "' not in manifest");
    return static_cast<std::size_t>(it - attrs.begin());
  };
  const GroupRule rule = parse_group_rule(spec.z_rule);
  const std::size_t label_idx = attr_index(spec.label_attr);
  const std::size_t z_idx = attr_index(rule.attr);

  std::vector<LabeledExample> out;
  for (std::size_t line = 3; std::getline(in, line_text); ++line) {
    const std::vector<std::string> tokens = split_whitespace(line_text);
    if (tokens.empty()) continue;
    if (tokens.size() != attrs.size() + 1)
      malformed(line, "expected filename plus " + std::to_string(attrs.size()) + " values, got " +
                          std::to_string(tokens.size()) + " tokens");
    LabeledExample ex;
    ex.id = tokens[0];
    ex.image_path = tokens[0];
    ex.label = parse_label_value(tokens[1 + label_idx], line);
    ex.z = apply_group_rule(rule, tokens[1 + z_idx], spec.z_positive_values, line);
    out.push_back(std::move(ex));
  }
  if (out.size() != declared)
    throw Error(ErrorKind::CountMismatch, "manifest declares " + std::to_string(declared) +
                                              " rows but contains " + std::to_string(out.size()));
  return out;
}

std::vector<LabeledExample> load_manifest_csv(const std::filesystem::path& path,
                                              const ManifestSpec& spec,
                                              std::vector<std::string>* notes) {
  const csv::Table table = csv::read_file(path);
  auto attr_index = [&](const std::string& name) -> std::size_t {
    const auto idx = table.column(name);
    if (!idx) throw Error(ErrorKind::UnknownAttribute, "attribute '" + name + "' not in manifest");
    return *idx;
  };
  const GroupRule rule = parse_group_rule(spec.z_rule);
  const std::size_t label_idx = attr_index(spec.label_attr);
  const std::size_t z_idx = attr_index(rule.attr);
  const std::size_t id_idx = spec.id_attr.empty() ? 0 : attr_index(spec.id_attr);
  std::vector<std::size_t> feature_idx;
  for (const auto& name : spec.feature_columns) feature_idx.push_back(attr_index(name));

  if (notes) {
    std::set<std::size_t> used{label_idx, z_idx, id_idx};
    used.insert(feature_idx.begin(), feature_idx.end());
    for (std::size_t i = 0; i < table.header.size(); ++i)
      if (!used.count(i)) notes->push_back("ignoring unknown column '" + table.header[i] + "'");
  }

  std::vector<LabeledExample> out;
  out.reserve(table.rows.size());
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const auto& row = table.rows[i];
    const std::size_t line = table.line_numbers[i];
    if (row.size() != table.header.size())
      malformed(line, "expected " + std::to_string(table.header.size()) + " fields, got " +
                          std::to_string(row.size()));
    LabeledExample ex;
    ex.id = row[id_idx];
    ex.image_path = row[id_idx];
    ex.label = parse_label_value(row[label_idx], line);
    ex.z = apply_group_rule(rule, row[z_idx], spec.z_positive_values, line);
    for (std::size_t f : feature_idx)
      ex.features.push_back(parse_double(row[f], line, table.header[f].c_str()));
    out.push_back(std::move(ex));
  }
  return out;
}

/// Largest-remainder apportionment of `total` into shares of `ratios`.
/// Remainder ties break toward the earlier split (train, val, test).
std::array<std::size_t, 3> largest_remainder(std::size_t total,
                                             const std::array<double, 3>& ratios) {
  std::array<std::size_t, 3> sizes{};
  std::array<double, 3> fractional{};
  std::size_t assigned = 0;
  for (int i = 0; i < 3; ++i) {
    const double ideal = static_cast<double>(total) * ratios[i];
    sizes[i] = static_cast<std::size_t>(ideal);
    fractional[i] = ideal - static_cast<double>(sizes[i]);
    assigned += sizes[i];
  }
  std::array<int, 3> order{0, 1, 2};
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return fractional[a] > fractional[b]; });
  for (std::size_t left = total - assigned, i = 0; left > 0; --left, ++i) ++sizes[order[i % 3]];
  return sizes;
}

}  // namespace

std::vector<PredictionRecord> load_prediction_log(const std::filesystem::path& path,
                                                  std::vector<std::string>* notes) {
  if (!std::filesystem::exists(path))
    throw Error(ErrorKind::Io, "no such file '" + path.string() + "'");
  auto records =
      looks_like_jsonl(path) ? load_log_jsonl(path, notes) : load_log_csv(path, notes);
  if (records.empty()) throw Error(ErrorKind::EmptyLog, "'" + path.string() + "' has no records");
  return records;
}

std::vector<LabeledExample> load_attribute_manifest(const std::filesystem::path& path,
                                                    const ManifestSpec& spec,
                                                    std::vector<std::string>* notes) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open '" + path.string() + "'");
  if (spec.label_attr.empty()) throw Error(ErrorKind::Config, "label attribute not set");
  if (spec.z_rule.empty()) throw Error(ErrorKind::Config, "z attribute not set");

  // CelebA manifests start with a bare integer count.
  std::string first_line;
  std::getline(in, first_line);
  const auto tokens = split_whitespace(first_line);
  in.clear();
  in.seekg(0);
  int dummy = 0;
  const bool celeba =
      tokens.size() == 1 &&
      std::from_chars(tokens[0].data(), tokens[0].data() + tokens[0].size(), dummy).ec ==
          std::errc{};
  return celeba ? load_manifest_celeba(in, spec) : load_manifest_csv(path, spec, notes);
}

SplitSet balanced_split(std::span<const LabeledExample> examples, std::uint64_t seed,
                        std::array<double, 3> ratios) {
  double ratio_sum = 0.0;
  for (double r : ratios) {
    if (r < 0.0) throw Error(ErrorKind::Config, "split ratios must be non-negative");
    ratio_sum += r;
  }
  if (std::abs(ratio_sum - 1.0) > 1e-9)
    throw Error(ErrorKind::Config, "split ratios must sum to 1");

  std::array<std::vector<LabeledExample>, 2> groups;
  for (const auto& ex : examples) {
    if (ex.z != 0 && ex.z != 1)
      throw Error(ErrorKind::MalformedRecord, "example '" + ex.id + "': z must be 0 or 1");
    groups[static_cast<std::size_t>(ex.z)].push_back(ex);
  }
  if (groups[0].empty()) throw Error(ErrorKind::MissingGroup, "no examples with z=0");
  if (groups[1].empty()) throw Error(ErrorKind::MissingGroup, "no examples with z=1");

  SplitSet out;
  out.seed = seed;
  out.ratios = ratios;

  // Sort by id first so the outcome depends only on (input multiset, seed),
  // then shuffle; the kept prefix is the seeded sample without replacement.
  rng::SeededRng gen(rng::derive(seed, 0xB5));
  for (int z : {1, 0}) {
    auto& g = groups[static_cast<std::size_t>(z)];
    std::stable_sort(g.begin(), g.end(),
                     [](const LabeledExample& a, const LabeledExample& b) { return a.id < b.id; });
    gen.shuffle(g);
  }
  const std::size_t per_group = std::min(groups[0].size(), groups[1].size());
  for (int z : {1, 0}) {
    auto& g = groups[static_cast<std::size_t>(z)];
    out.discarded.insert(out.discarded.end(), g.begin() + static_cast<std::ptrdiff_t>(per_group),
                         g.end());
    g.resize(per_group);
  }

  // Alternating groups means any contiguous block of the sequence has a
  // per-group count difference of at most one.
  std::vector<LabeledExample> interleaved;
  interleaved.reserve(2 * per_group);
  for (std::size_t i = 0; i < per_group; ++i) {
    interleaved.push_back(std::move(groups[1][i]));
    interleaved.push_back(std::move(groups[0][i]));
  }

  const auto sizes = largest_remainder(interleaved.size(), ratios);
  std::array<std::vector<LabeledExample>*, 3> parts{&out.train, &out.val, &out.test};
  auto cursor = interleaved.begin();
  for (int i = 0; i < 3; ++i) {
    const auto count = static_cast<std::ptrdiff_t>(sizes[static_cast<std::size_t>(i)]);
    parts[static_cast<std::size_t>(i)]->assign(std::make_move_iterator(cursor),
                                               std::make_move_iterator(cursor + count));
    cursor += count;
  }
  return out;
}

std::vector<std::vector<std::size_t>> minibatches(std::size_t split_size, std::size_t batch_size,
                                                  std::uint64_t epoch_seed) {
  if (batch_size == 0) throw Error(ErrorKind::Config, "batch size must be at least 1");
  std::vector<std::size_t> order(split_size);
  for (std::size_t i = 0; i < split_size; ++i) order[i] = i;
  rng::SeededRng gen(epoch_seed);
  gen.shuffle(order);

  std::vector<std::vector<std::size_t>> batches;
  for (std::size_t start = 0; start < split_size; start += batch_size) {
    const std::size_t end = std::min(split_size, start + batch_size);
    batches.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(start),
                         order.begin() + static_cast<std::ptrdiff_t>(end));
  }
  return batches;
}

}  // namespace fairsketch::data
