// Parallel kernels against their serial references.

#include <benchmark/benchmark.h>

#include <random>

#include "acd/detectors.hpp"
#include "acd/kernels.hpp"

namespace {

acd::PixelMatrix random_rows(Eigen::Index n, Eigen::Index d, std::uint64_t seed) {
  acd::Rng rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  acd::PixelMatrix m(n, d);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = normal(rng);
  return m;
}

void BM_Gram(benchmark::State& state) {
  const acd::PixelMatrix m = random_rows(state.range(0), 8, 1);
  const acd::KernelSpec spec{acd::KernelKind::Rbf, 2.0};
  for (auto _ : state) benchmark::DoNotOptimize(acd::gram(m, spec));
}

void BM_GramSerial(benchmark::State& state) {
  const acd::PixelMatrix m = random_rows(state.range(0), 8, 1);
  const acd::KernelSpec spec{acd::KernelKind::Rbf, 2.0};
  for (auto _ : state) benchmark::DoNotOptimize(acd::gram_serial(m, spec));
}

struct ScoreFixture {
  acd::FittedDetector det;
  acd::PixelMatrix x, y;
  explicit ScoreFixture(Eigen::Index n_pixels) {
    const auto cfg = acd::DetectorConfig::make(acd::Family::Hacd, acd::Distribution::Elliptical, acd::Mode::Kernel);
    det = acd::fit(random_rows(300, 4, 2), random_rows(300, 4, 3), cfg);
    x = random_rows(n_pixels, 4, 4);
    y = random_rows(n_pixels, 4, 5);
  }
};

void BM_Score(benchmark::State& state) {
  const ScoreFixture f(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(acd::score_pixels(f.det, f.x, f.y));
}

void BM_ScoreSerial(benchmark::State& state) {
  const ScoreFixture f(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(acd::score_pixels_serial(f.det, f.x, f.y));
}

}  // namespace

BENCHMARK(BM_Gram)->Arg(500)->Arg(1000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_GramSerial)->Arg(500)->Arg(1000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Score)->Arg(4096)->Arg(16384)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ScoreSerial)->Arg(4096)->Arg(16384)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
