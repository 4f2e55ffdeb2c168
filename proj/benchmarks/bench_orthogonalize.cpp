#include "randrand/orthogonalize.hpp"
#include "randrand/rng.hpp"

#include <benchmark/benchmark.h>

using namespace randrand;

namespace {

Matrix tall_gaussian(Index n, Index l, std::uint64_t seed) {
  Matrix m(n, l);
  for (Index j = 0; j < l; ++j)
    m.col(j) = gaussian_vector(n, seed, static_cast<std::uint64_t>(j));
  return m;
}

ShiftedOperator diag_op(Index n) {
  Vector d = Vector::LinSpaced(n, 1.0, 100.0);
  return ShiftedOperator(LinearOperator::diagonal(d), 0.5);
}

}  // namespace

static void BM_explicit_qr(benchmark::State& state) {
  const Index n = state.range(0), l = 64;
  auto op = diag_op(n);
  Matrix omega = tall_gaussian(n, l, 3);
  for (auto _ : state) {
    auto basis = make_explicit_basis(op, omega);
    benchmark::DoNotOptimize(basis.r.data());
  }
}
BENCHMARK(BM_explicit_qr)->Arg(2048)->Arg(8192);

static void BM_qless_chol_qr(benchmark::State& state) {
  const Index n = state.range(0), l = 64;
  auto op = diag_op(n);
  Matrix omega = tall_gaussian(n, l, 3);
  for (auto _ : state) {
    Matrix r = qless_chol_qr(op, omega);
    benchmark::DoNotOptimize(r.data());
  }
}
BENCHMARK(BM_qless_chol_qr)->Arg(2048)->Arg(8192);

static void BM_qless_precond_chol_qr(benchmark::State& state) {
  const Index n = state.range(0), l = 64;
  auto op = diag_op(n);
  Matrix omega = tall_gaussian(n, l, 3);
  SketchParams params;
  params.gamma = 8;
  auto theta = draw_sketch(SketchKind::sparse, 4 * l + 8, n, 11, params);
  for (auto _ : state) {
    auto res = qless_precond_chol_qr(op, omega, theta);
    benchmark::DoNotOptimize(res.r.data());
  }
}
BENCHMARK(BM_qless_precond_chol_qr)->Arg(2048)->Arg(8192);

static void BM_recycle_factor(benchmark::State& state) {
  const Index n = 4096, l = 64;
  Vector d = Vector::LinSpaced(n, 1.0, 100.0);
  auto a = LinearOperator::diagonal(d);
  Matrix omega = tall_gaussian(n, l, 3);
  auto pack = make_recycle_pack(a, omega, true, 5);
  double mu = 0.1;
  for (auto _ : state) {
    Matrix r = recycle_factor(pack, mu);
    benchmark::DoNotOptimize(r.data());
    mu *= 1.0000001;
  }
}
BENCHMARK(BM_recycle_factor);

BENCHMARK_MAIN();
