// Serial reference vs OpenMP kernels on synthetic data.
//
//   ./build/bench/sfadapt_bench --benchmark_filter=Components

#include <benchmark/benchmark.h>

#include <random>

#include "sfadapt/components.hpp"
#include "sfadapt/imgproc.hpp"
#include "sfadapt/metrics.hpp"

namespace {

sfa::Exec exec_of(const benchmark::State& state) {
  return state.range(1) == 0 ? sfa::Exec::kSerial : sfa::Exec::kParallel;
}

sfa::LabelMask random_blobs(std::size_t n, double density, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution fg(density);
  sfa::Grid g{{n, n, n}, {1.0, 1.0, 1.0}};
  std::vector<sfa::Label> labels(g.voxel_count());
  for (auto& l : labels) l = fg(rng) ? 1 : 0;
  return sfa::LabelMask(g, std::move(labels), {{1, "organ"}});
}

void BM_Components(benchmark::State& state) {
  const auto mask = random_blobs(static_cast<std::size_t>(state.range(0)), 0.3, 1);
  for (auto _ : state) {
    auto set = sfa::extract_components(mask, sfa::Connectivity::kFull, exec_of(state));
    benchmark::DoNotOptimize(set);
  }
  state.SetItemsProcessed(state.iterations() * static_cast<long>(mask.labels().size()));
}

void BM_DistanceTransform(benchmark::State& state) {
  const auto mask = random_blobs(static_cast<std::size_t>(state.range(0)), 0.01, 2);
  std::vector<unsigned char> feature(mask.labels().size());
  for (std::size_t i = 0; i < feature.size(); ++i) feature[i] = mask.labels()[i] != 0;
  for (auto _ : state) {
    auto d2 = sfa::squared_distance_transform(mask.grid(), feature, exec_of(state));
    benchmark::DoNotOptimize(d2);
  }
  state.SetItemsProcessed(state.iterations() * static_cast<long>(feature.size()));
}

void BM_Histogram(benchmark::State& state) {
  const std::size_t n = static_cast<std::size_t>(state.range(0));
  std::mt19937_64 rng(3);
  std::vector<std::uint32_t> q(n * n * n);
  for (auto& v : q) v = static_cast<std::uint32_t>(rng() % 256);
  for (auto _ : state) {
    auto h = sfa::compute_histogram(q, 256, exec_of(state));
    benchmark::DoNotOptimize(h);
  }
  state.SetItemsProcessed(state.iterations() * static_cast<long>(q.size()));
}

}  // namespace

BENCHMARK(BM_Components)->ArgsProduct({{64, 128}, {0, 1}})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_DistanceTransform)->ArgsProduct({{64, 128}, {0, 1}})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Histogram)->ArgsProduct({{64, 128}, {0, 1}})->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
