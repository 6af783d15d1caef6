#include "gblr/gaudi.hpp"
#include "gblr/mask.hpp"
#include "gblr/random.hpp"

#include <benchmark/benchmark.h>

using namespace gblr;

namespace {

// args: n, blocks, width
void BM_GblrMvp(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  Rng rng(1);
  const GblrMatrix m = planted_gblr(n, n, static_cast<int>(state.range(1)), static_cast<int>(state.range(2)), rng);
  const RealVector x = random_vector(n, rng);
  for (auto _ : state) benchmark::DoNotOptimize(m.mvp(x));
  state.counters["flops"] = static_cast<double>(m.flops());
}
BENCHMARK(BM_GblrMvp)->Args({256, 16, 8})->Args({256, 16, 32})->Args({256, 16, 128})->Args({1024, 32, 32});

void BM_DenseMvp(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  Rng rng(1);
  const DenseMatrix m = random_dense(n, n, rng);
  const RealVector x = random_vector(n, rng);
  for (auto _ : state) benchmark::DoNotOptimize(RealVector(m * x));
  state.counters["flops"] = static_cast<double>(n) * n;
}
BENCHMARK(BM_DenseMvp)->Arg(256)->Arg(1024);

void BM_GaudiMask(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const MaskParams p{n / 3.0, n / 5.0, n};
  for (auto _ : state) benchmark::DoNotOptimize(gaudi_mask(p, Smoothing(10.0)));
}
BENCHMARK(BM_GaudiMask)->Arg(64)->Arg(256)->Arg(1000)->Arg(1024);

void BM_GaudiMaterialize(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  Rng rng(2);
  const GaudiGblrMatrix theta = GaudiGblrMatrix::from_frozen(planted_gblr(n, n, 8, n / 8, rng), Smoothing(10.0));
  for (auto _ : state) benchmark::DoNotOptimize(materialize(theta, StructureMode::continuous));
}
BENCHMARK(BM_GaudiMaterialize)->Arg(64)->Arg(256);

}  // namespace

BENCHMARK_MAIN();
