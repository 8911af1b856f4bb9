// Serial reference vs OpenMP kernel throughput.

#include <benchmark/benchmark.h>

#include <vector>

#include "beamsense/geometry.hpp"
#include "beamsense/random.hpp"
#include "beamsense/vision.hpp"

namespace {

using namespace beamsense;

std::vector<UncertainPoint> random_points(std::size_t n) {
  Rng rng = make_rng(7);
  std::vector<UncertainPoint> pts(n);
  for (auto& p : pts) p = {{uniform(rng, 0.0, 500.0), uniform(rng, 0.0, 500.0)}, uniform(rng, 0.0, 30.0)};
  return pts;
}

RgbImage random_image(std::size_t side) {
  Rng rng = make_rng(11);
  RgbImage img(side, side);
  for (std::size_t y = 0; y < side; ++y)
    for (std::size_t x = 0; x < side; ++x) {
      const auto c = static_cast<std::uint32_t>(rng());
      img.set(x, y, {static_cast<std::uint8_t>(c), static_cast<std::uint8_t>(c >> 8), static_cast<std::uint8_t>(c >> 16)});
    }
  return img;
}

template <auto Fill>
void BM_DistanceMatrix(benchmark::State& state) {
  const auto pts = random_points(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(Fill(pts, QuadratureSpec{}));
  state.SetItemsProcessed(state.iterations() * state.range(0) * (state.range(0) + 1) / 2);
}

template <auto Count>
void BM_CountFeatures(benchmark::State& state) {
  const auto img = random_image(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(Count(img));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(img.pixel_count()));
}

}  // namespace

BENCHMARK(BM_DistanceMatrix<uncertain_distance_matrix_serial>)->Arg(32)->Arg(96)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_DistanceMatrix<uncertain_distance_matrix>)->Arg(32)->Arg(96)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_CountFeatures<count_features_serial>)->Arg(256)->Arg(1024)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_CountFeatures<count_features>)->Arg(256)->Arg(1024)->Unit(benchmark::kMicrosecond);

BENCHMARK_MAIN();
