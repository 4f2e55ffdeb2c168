#include "randrand/rng.hpp"
#include "randrand/sketch.hpp"

#include <benchmark/benchmark.h>

using namespace randrand;

static void BM_fwht(benchmark::State& state) {
  const Index n = state.range(0);
  Vector v = gaussian_vector(n, 1);
  for (auto _ : state) {
    Vector w = v;
    fwht(w);
    benchmark::DoNotOptimize(w.data());
  }
  state.SetComplexityN(n);
}
BENCHMARK(BM_fwht)->RangeMultiplier(4)->Range(256, 65536)->Complexity();

static void BM_sketch_apply(benchmark::State& state, SketchKind kind) {
  const Index n = 8192, l = 128;
  SketchParams params;
  params.gamma = 8;
  auto s = draw_sketch(kind, l, n, 7, params);
  Vector v = gaussian_vector(n, 2);
  for (auto _ : state) {
    Vector w = s.apply(v);
    benchmark::DoNotOptimize(w.data());
  }
}
BENCHMARK_CAPTURE(BM_sketch_apply, gaussian, SketchKind::gaussian);
BENCHMARK_CAPTURE(BM_sketch_apply, srht, SketchKind::srht);
BENCHMARK_CAPTURE(BM_sketch_apply, sparse, SketchKind::sparse);
BENCHMARK_CAPTURE(BM_sketch_apply, multilevel, SketchKind::multilevel);

static void BM_sketch_transpose_apply(benchmark::State& state, SketchKind kind) {
  const Index n = 8192, l = 128;
  SketchParams params;
  params.gamma = 8;
  auto s = draw_sketch(kind, l, n, 7, params);
  Vector u = gaussian_vector(l, 3);
  for (auto _ : state) {
    Vector w = s.apply_transpose(u);
    benchmark::DoNotOptimize(w.data());
  }
}
BENCHMARK_CAPTURE(BM_sketch_transpose_apply, srht, SketchKind::srht);
BENCHMARK_CAPTURE(BM_sketch_transpose_apply, sparse, SketchKind::sparse);

BENCHMARK_MAIN();
