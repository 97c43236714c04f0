#include <string>
#include <vector>

#include <benchmark/benchmark.h>

#include "fairsketch/data.hpp"
#include "fairsketch/metrics.hpp"
#include "fairsketch/model.hpp"
#include "fairsketch/rng.hpp"
#include "fairsketch/sketch.hpp"

using namespace fairsketch;

namespace {

image::ImageBuffer random_gray(std::size_t side) {
  rng::SeededRng gen(1);
  image::ImageBuffer img;
  img.width = img.height = side;
  img.channels = 1;
  img.pixels.resize(side * side);
  for (auto& p : img.pixels) p = static_cast<std::uint8_t>(gen.bounded(256));
  return img;
}

void BM_GaussianBlur256(benchmark::State& state) {
  const image::ImageBuffer img = random_gray(256);
  const sketch::Plane plane = sketch::to_plane(img);
  for (auto _ : state) benchmark::DoNotOptimize(sketch::gaussian_blur(plane, 1.6));
}
BENCHMARK(BM_GaussianBlur256);

void BM_XdogSketch256(benchmark::State& state) {
  const image::ImageBuffer img = random_gray(256);
  const sketch::SketchParams params{};
  for (auto _ : state) benchmark::DoNotOptimize(sketch::xdog_sketch(img, params));
}
BENCHMARK(BM_XdogSketch256);

void BM_Audit10k(benchmark::State& state) {
  rng::SeededRng gen(2);
  std::vector<metrics::PredictionRecord> records;
  for (int i = 0; i < 10000; ++i) {
    metrics::PredictionRecord r;
    r.id = "r" + std::to_string(i);
    r.y_true = static_cast<int>(gen.bounded(2));
    r.y_pred = static_cast<int>(gen.bounded(2));
    r.z = static_cast<int>(gen.bounded(2));
    records.push_back(std::move(r));
  }
  for (auto _ : state) benchmark::DoNotOptimize(metrics::audit(records));
}
BENCHMARK(BM_Audit10k);

void BM_TrainEpoch(benchmark::State& state) {
  rng::SeededRng gen(3);
  data::SplitSet splits;
  for (int i = 0; i < 1000; ++i) {
    data::LabeledExample ex;
    ex.id = "e" + std::to_string(i);
    ex.z = i % 2;
    ex.label = static_cast<int>(gen.bounded(2));
    for (int j = 0; j < 8; ++j) ex.features.push_back(gen.uniform(-1.0, 1.0));
    splits.train.push_back(std::move(ex));
  }
  model::TrainConfig cfg;
  cfg.layer_dims = {8, 16, 1};
  cfg.epochs = 1;
  cfg.batch_size = 64;
  cfg.seed = 7;
  for (auto _ : state) benchmark::DoNotOptimize(model::train(splits, cfg));
}
BENCHMARK(BM_TrainEpoch);

}  // namespace

BENCHMARK_MAIN();
