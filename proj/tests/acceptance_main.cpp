// Acceptance driver for the headline guarantees. Each criterion prints one
// [PASS]/[FAIL] line with a short factual detail and its runtime; the process
// exits 0 only when every criterion passes. The CLI binary under test is
// given with --cli PATH (falls back to the FAIRSKETCH_BIN environment
// variable).

#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <numeric>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "fairsketch/csv.hpp"
#include "fairsketch/data.hpp"
#include "fairsketch/error.hpp"
#include "fairsketch/image.hpp"
#include "fairsketch/loss.hpp"
#include "fairsketch/metrics.hpp"
#include "fairsketch/model.hpp"
#include "fairsketch/rng.hpp"
#include "fairsketch/sketch.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace fairsketch;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

// ---- criterion 1: metric oracle equivalence -------------------------------

/// Compares one library metric against the oracle: defined values must agree
/// within 1e-12, undefined oracle values must surface as typed errors.
bool agree(const std::optional<double>& expected, const std::function<double()>& call,
           double& worst) {
  if (expected) {
    double got = 0.0;
    try {
      got = call();
    } catch (const Error&) {
      return false;  // library refused a value the oracle could compute
    }
    const double err = std::abs(got - *expected);
    worst = std::max(worst, err);
    return err <= 1e-12;
  }
  try {
    call();
    return false;  // library produced a value where the rate is undefined
  } catch (const Error&) {
    return true;
  }
}

Outcome criterion_metrics() {
  rng::SeededRng gen(0xACC1);
  const std::size_t kLogs = 1000;
  double worst = 0.0;
  std::size_t undefined_cases = 0;

  for (std::size_t t = 0; t < kLogs; ++t) {
    const std::size_t n = 1 + gen.bounded(16);
    const auto records = oracle::random_log(gen, n, 2);
    const std::span<const metrics::PredictionRecord> view(records);

    struct Probe {
      std::optional<double> expected;
      std::function<double()> call;
    };
    const std::vector<Probe> probes = {
        {oracle::spd(records, 1),
         [&] { return metrics::statistical_parity_difference(view, 1); }},
        {oracle::eod(records, 1), [&] { return metrics::equal_opportunity_difference(view, 1); }},
        {oracle::deo(records, 1), [&] { return metrics::equalized_odds_difference(view, 1); }},
        {oracle::aod_standard(records, 1),
         [&] { return metrics::average_odds_difference(view, 1, metrics::FprMode::Standard); }},
        {oracle::aod_as_written(records, 1),
         [&] { return metrics::average_odds_difference(view, 1, metrics::FprMode::AsWritten); }},
    };
    for (const auto& probe : probes) {
      if (!probe.expected) ++undefined_cases;
      if (!agree(probe.expected, probe.call, worst)) {
        std::ostringstream detail;
        detail << "log " << t << " (n=" << n << ") disagreed with the oracle";
        return {false, detail.str()};
      }
    }

    // Per-group precision/recall/F1 for every group present in the log.
    const auto prf = metrics::per_group_prf(view, 1);
    for (const int z : {0, 1}) {
      if (!oracle::group_present(records, z)) continue;
      const auto it = prf.find(z);
      if (it == prf.end()) return {false, "per-group scores missing a present group"};
      const oracle::Prf expected = oracle::prf(records, z, 1);
      for (const auto [got, want] :
           {std::pair{it->second.precision, expected.precision},
            std::pair{it->second.recall, expected.recall}, std::pair{it->second.f1, expected.f1}}) {
        const double err = std::abs(got - want);
        worst = std::max(worst, err);
        if (err > 1e-12) return {false, "per-group P/R/F1 drifted beyond 1e-12"};
      }
      if (it->second.degenerate != expected.degenerate)
        return {false, "degenerate-rate flag disagrees with the oracle"};
    }
  }

  std::ostringstream detail;
  detail << kLogs << " random logs, worst defined-value error " << worst << ", "
         << undefined_cases << " undefined-rate cases matched by typed errors";
  return {true, detail.str()};
}

// ---- criterion 2: gradient correctness ------------------------------------

Outcome criterion_gradients() {
  const std::vector<std::vector<std::size_t>> archs = {{4, 8, 1}, {6, 4, 4, 2}};
  const std::vector<double> lambdas = {0.0, 0.5, 1.0};
  double worst = 0.0;
  std::size_t checks = 0;

  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    for (const auto& arch : archs) {
      const bool sigmoid = arch.back() == 1;
      const auto activation = sigmoid ? model::Activation::ReluHiddenSigmoidOut
                                      : model::Activation::ReluHiddenSoftmaxOut;
      const std::size_t classes = sigmoid ? 2 : arch.back();
      rng::SeededRng gen(rng::derive(seed, 0xACC2));
      const auto params = model::init_params(arch, gen.next_u64(), activation);

      // Central differences only estimate a derivative where the objective is
      // smooth, and every zero hidden pre-activation sits on a ReLU kink.
      // Zero-initialized biases make exact zeros reachable (a fully dead row
      // feeds zeros forward), so redraw the probe features until each hidden
      // pre-activation clears the kink by a margin much wider than the step.
      const std::size_t batch = 6;
      Matrix x(batch, arch.front());
      bool clear = false;
      for (int attempt = 0; attempt < 1000 && !clear; ++attempt) {
        for (auto& v : x.values()) v = gen.uniform(-1.0, 1.0);
        const auto fwd = model::forward(params, x);
        clear = true;
        for (std::size_t l = 0; clear && l + 1 < fwd.second.preacts.size(); ++l)
          for (const double pre : fwd.second.preacts[l].values())
            if (std::abs(pre) < 1e-3) {
              clear = false;
              break;
            }
      }
      if (!clear)
        return {false, "seed " + std::to_string(seed) +
                           ": no probe batch clear of ReLU kinks after 1000 draws"};
      std::vector<int> labels, z;
      for (std::size_t i = 0; i < batch; ++i) {
        labels.push_back(static_cast<int>(gen.bounded(classes)));
        z.push_back(i < 2 ? static_cast<int>(i) : static_cast<int>(gen.bounded(2)));
      }

      for (const double lambda : lambdas) {
        loss::LossWeights weights;
        weights.lambda = lambda;
        const double err = model::gradient_check(params, x, labels, z, weights);
        worst = std::max(worst, err);
        ++checks;
        if (!(err < 1e-5)) {
          std::ostringstream detail;
          detail << "seed " << seed << ", " << arch.size() << "-layer arch, lambda " << lambda
                 << ": relative error " << err;
          return {false, detail.str()};
        }
      }
    }
  }
  std::ostringstream detail;
  detail << checks << " gradient checks, worst relative error " << worst;
  return {true, detail.str()};
}

// ---- criterion 3: bias mitigation on a synthetic proxy task ---------------

/// Synthetic population: z ~ Bernoulli(1/2); the label leans towards z
/// (P(y=1|z=1) = 0.7, P(y=1|z=0) = 0.3); feature 0 is a noisy readout of z
/// itself, features 1..3 are noisy readouts of y. A model free to use
/// feature 0 inherits the group gap; the fairness term prices that shortcut.
std::vector<data::LabeledExample> proxy_dataset(std::uint64_t seed, std::size_t n) {
  rng::SeededRng gen(rng::derive(seed, 0xACC3));
  std::vector<data::LabeledExample> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    data::LabeledExample ex;
    ex.id = "p" + std::to_string(i);
    ex.z = gen.next_unit() < 0.5 ? 1 : 0;
    ex.label = gen.next_unit() < (ex.z == 1 ? 0.7 : 0.3) ? 1 : 0;
    const double y = ex.label;
    ex.features = {static_cast<double>(ex.z) + 0.3 * gen.next_gaussian(),
                   y + 0.8 * gen.next_gaussian(), y + 1.0 * gen.next_gaussian(),
                   y + 1.2 * gen.next_gaussian()};
    out.push_back(std::move(ex));
  }
  return out;
}

struct TestScore {
  double accuracy = 0.0;
  double spd = 0.0;
};

TestScore score_on_test(const model::ModelParams& params,
                        const std::vector<data::LabeledExample>& test) {
  Matrix x(test.size(), test.front().features.size());
  for (std::size_t i = 0; i < test.size(); ++i)
    for (std::size_t j = 0; j < x.cols(); ++j) x(i, j) = test[i].features[j];
  const auto [probs, cache] = model::forward(params, x);
  const std::vector<int> preds = model::hard_predictions(probs);

  std::vector<metrics::PredictionRecord> records;
  std::size_t correct = 0;
  for (std::size_t i = 0; i < test.size(); ++i) {
    metrics::PredictionRecord r;
    r.id = test[i].id;
    r.y_true = test[i].label;
    r.y_pred = preds[i];
    r.z = test[i].z;
    records.push_back(std::move(r));
    if (preds[i] == test[i].label) ++correct;
  }
  TestScore score;
  score.accuracy = static_cast<double>(correct) / static_cast<double>(test.size());
  score.spd = metrics::statistical_parity_difference(records, 1);
  return score;
}

Outcome criterion_mitigation() {
  const std::size_t kSeeds = 10;
  std::size_t improved = 0;
  double acc_drop_sum = 0.0;
  std::ostringstream rows;

  for (std::uint64_t seed = 0; seed < kSeeds; ++seed) {
    const auto examples = proxy_dataset(seed, 4000);
    const data::SplitSet splits = data::balanced_split(examples, seed);

    model::TrainConfig cfg;
    cfg.layer_dims = {4, 8, 1};
    cfg.learning_rate = 1e-3;
    cfg.batch_size = 64;
    cfg.epochs = 200;
    cfg.seed = seed;

    cfg.lambda = 0.0;
    const auto [base_params, base_history] = model::train(splits, cfg);
    cfg.lambda = 1.0;
    const auto [fair_params, fair_history] = model::train(splits, cfg);

    const TestScore base = score_on_test(base_params, splits.test);
    const TestScore fair = score_on_test(fair_params, splits.test);
    if (fair.spd < base.spd) ++improved;
    acc_drop_sum += base.accuracy - fair.accuracy;
    rows << "\n    seed " << seed << ": spd " << base.spd << " -> " << fair.spd << ", acc "
         << base.accuracy << " -> " << fair.accuracy;
  }

  const double mean_drop = acc_drop_sum / static_cast<double>(kSeeds);
  std::ostringstream detail;
  detail << improved << "/" << kSeeds << " seeds lowered hard test SPD, mean accuracy drop "
         << mean_drop << rows.str();
  return {improved >= 9 && mean_drop <= 0.10, detail.str()};
}

// ---- criterion 4: sketch color invariance ---------------------------------

Outcome criterion_sketch() {
  rng::SeededRng gen(0xACC4);
  const sketch::SketchParams params{};
  for (int pair = 0; pair < 100; ++pair) {
    const auto [gray, colored] = support::luma_equal_pair(gen, 24, 24);
    const auto a = sketch::xdog_sketch(gray, params);
    const auto b = sketch::xdog_sketch(colored, params);
    if (a.pixels != b.pixels) {
      return {false, "pair " + std::to_string(pair) + ": sketches differ across equal-luma images"};
    }
    const auto once = sketch::to_grayscale(colored);
    if (sketch::to_grayscale(once).pixels != once.pixels)
      return {false, "grayscale conversion is not idempotent"};
  }
  for (const double sigma : {0.5, 1.0, 1.6, 2.3, 4.0}) {
    const auto kernel = sketch::gaussian_kernel(sigma);
    const double sum = std::accumulate(kernel.begin(), kernel.end(), 0.0);
    if (std::abs(sum - 1.0) > 1e-9) {
      std::ostringstream detail;
      detail << "kernel for sigma " << sigma << " sums to " << sum;
      return {false, detail.str()};
    }
  }
  return {true, "100 luma-equal pairs bitwise identical; grayscale idempotent; kernels normalized"};
}

// ---- criterion 5: balanced split protocol ---------------------------------

Outcome criterion_splits() {
  rng::SeededRng gen(0xACC5);
  std::size_t datasets = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 20 + gen.bounded(280);
    std::vector<data::LabeledExample> examples;
    for (std::size_t i = 0; i < n; ++i) {
      data::LabeledExample ex;
      ex.id = "d" + std::to_string(trial) + "_" + std::to_string(i);
      ex.z = static_cast<int>(gen.bounded(2));
      examples.push_back(std::move(ex));
    }
    bool has[2] = {false, false};
    for (const auto& ex : examples) has[ex.z] = true;
    if (!has[0] || !has[1]) continue;
    ++datasets;

    const std::uint64_t seed = gen.next_u64();
    const data::SplitSet splits = data::balanced_split(examples, seed);
    const data::SplitSet again = data::balanced_split(examples, seed);

    const std::array<const std::vector<data::LabeledExample>*, 3> parts{&splits.train, &splits.val,
                                                                        &splits.test};
    const std::array<const std::vector<data::LabeledExample>*, 3> parts2{&again.train, &again.val,
                                                                         &again.test};
    std::size_t kept = 0;
    for (const auto* part : parts) kept += part->size();

    for (std::size_t p = 0; p < 3; ++p) {
      std::size_t z1 = 0;
      for (const auto& ex : *parts[p])
        if (ex.z == 1) ++z1;
      const std::size_t z0 = parts[p]->size() - z1;
      if (std::max(z1, z0) - std::min(z1, z0) > 1)
        return {false, "group counts differ by more than one inside a split"};

      const double share = p == 0 ? 0.7 : 0.15;
      if (std::abs(static_cast<double>(parts[p]->size()) - share * static_cast<double>(kept)) >
          1.0)
        return {false, "split size strayed more than one example from its ratio"};

      if (parts[p]->size() != parts2[p]->size()) return {false, "re-split changed a split size"};
      for (std::size_t i = 0; i < parts[p]->size(); ++i)
        if ((*parts[p])[i].id != (*parts2[p])[i].id)
          return {false, "same seed produced different split membership"};
    }

    std::multiset<std::string> seen;
    for (const auto* part : parts)
      for (const auto& ex : *part) seen.insert(ex.id);
    for (const auto& ex : splits.discarded) seen.insert(ex.id);
    std::multiset<std::string> expected;
    for (const auto& ex : examples) expected.insert(ex.id);
    if (seen != expected) return {false, "kept plus discarded is not the input id multiset"};
  }
  std::ostringstream detail;
  detail << datasets << " random datasets satisfied balance, ratio, conservation, determinism";
  return {true, detail.str()};
}

// ---- criterion 6: end-to-end pipeline fixture -----------------------------

Outcome criterion_pipeline() {
  if (support::cli_path().empty())
    return {false, "CLI binary not given (use --cli PATH or FAIRSKETCH_BIN)"};

  support::TempDir tmp("acceptance_e2e");
  const auto corpus = tmp / "corpus";
  support::write_synthetic_corpus(corpus, 60, 2026);

  std::string out, err;
  auto run = [&](const std::string& args) { return support::run_cli(args, &out, &err); };
  auto fail = [&](const std::string& stage) {
    std::string trimmed = err;
    if (trimmed.size() > 160) trimmed.resize(160);
    while (!trimmed.empty() && (trimmed.back() == '\n' || trimmed.back() == '\r'))
      trimmed.pop_back();
    return Outcome{false, stage + " failed: " + trimmed};
  };

  const auto gray_dir = tmp / "grayscale";
  const auto sketch_dir = tmp / "sketch";
  if (run("sketchify --in \"" + corpus.string() + "\" --out \"" + gray_dir.string() +
          "\" --mode grayscale") != 0)
    return fail("sketchify (grayscale)");
  if (run("sketchify --in \"" + corpus.string() + "\" --out \"" + sketch_dir.string() +
          "\" --mode sketch") != 0)
    return fail("sketchify (sketch)");

  const std::vector<std::pair<std::string, std::filesystem::path>> conditions = {
      {"original", corpus}, {"grayscale", gray_dir}, {"sketch", sketch_dir}};
  std::vector<std::filesystem::path> run_dirs;
  for (const auto& [condition, images] : conditions) {
    std::ostringstream config;
    config << "{\n"
           << "  \"manifest\": \"corpus/manifest.csv\",\n"
           << "  \"images_dir\": \"" << images.filename().string() << "\",\n"
           << "  \"image_size\": 12,\n"
           << "  \"label_attr\": \"label\",\n"
           << "  \"z_attr\": \"z\",\n"
           << "  \"condition\": \"" << condition << "\",\n"
           << "  \"hidden_dims\": [8],\n"
           << "  \"epochs\": 3,\n"
           << "  \"batch_size\": 16,\n"
           << "  \"seed\": 11,\n"
           << "  \"lambda\": 1.0,\n"
           << "  \"ratios\": [0.5, 0.1, 0.4],\n"
           << "  \"out_dir\": \"run_" << condition << "\"\n"
           << "}\n";
    const auto config_path = tmp / ("exp_" + condition + ".json");
    support::spit(config_path, config.str());

    if (run("train --config \"" + config_path.string() + "\"") != 0)
      return fail("train (" + condition + ")");
    const auto run_dir = tmp / ("run_" + condition);
    if (run("audit --log \"" + (run_dir / "test_predictions.csv").string() + "\" --config \"" +
            config_path.string() + "\" --out \"" + (run_dir / "report.json").string() + "\"") != 0)
      return fail("audit (" + condition + ")");
    run_dirs.push_back(run_dir);
  }

  const auto table_path = tmp / "table.csv";
  std::string report_cmd = "report";
  for (const auto& dir : run_dirs) report_cmd += " \"" + dir.string() + "\"";
  report_cmd += " --out \"" + table_path.string() + "\"";
  if (run(report_cmd) != 0) return fail("report");

  const csv::Table table = csv::read_file(table_path);
  const std::vector<std::string> expected_header{"condition", "lambda", "seed", "config_hash",
                                                 "acc",       "spd",    "deo"};
  if (table.header != expected_header) return {false, "table.csv is missing required columns"};
  if (table.rows.size() != 3) return {false, "expected one table row per condition"};
  for (std::size_t i = 0; i < 3; ++i)
    if (table.rows[i][0] != conditions[i].first)
      return {false, "table rows do not cover all three conditions"};

  return {true, "sketchify, 3x train, 3x audit, report all exited 0; 3-condition table written"};
}

}  // namespace

int main(int argc, char** argv) {
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--cli" && i + 1 < argc) {
      support::cli_path() = argv[++i];
    } else if (arg == "--help") {
      std::printf("usage: %s [--cli PATH]\n", argv[0]);
      return 0;
    }
  }

  struct Criterion {
    const char* name;
    double budget_seconds;
    Outcome (*check)();
  };
  const std::vector<Criterion> criteria = {
      {"metric oracle equivalence", 5.0, criterion_metrics},
      {"gradient correctness", 30.0, criterion_gradients},
      {"bias mitigation on the synthetic proxy task", 120.0, criterion_mitigation},
      {"sketch color invariance", 10.0, criterion_sketch},
      {"balanced split protocol", 5.0, criterion_splits},
      {"end-to-end pipeline fixture", 60.0, criterion_pipeline},
  };

  int passed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto& criterion = criteria[i];
    const auto start = std::chrono::steady_clock::now();
    Outcome outcome;
    try {
      outcome = criterion.check();
    } catch (const std::exception& e) {
      outcome = {false, std::string("unexpected exception: ") + e.what()};
    }
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (outcome.pass && seconds > criterion.budget_seconds) {
      std::ostringstream detail;
      detail << "checks passed but runtime " << seconds << "s exceeds the "
             << criterion.budget_seconds << "s budget";
      outcome = {false, detail.str()};
    }
    if (outcome.pass) ++passed;
    std::printf("[%s] criterion %zu: %s — %s (%.2fs)\n", outcome.pass ? "PASS" : "FAIL", i + 1,
                criterion.name, outcome.detail.c_str(), seconds);
  }
  std::printf("%d/%zu criteria passed\n", passed, criteria.size());
  return passed == static_cast<int>(criteria.size()) ? 0 : 1;
}
