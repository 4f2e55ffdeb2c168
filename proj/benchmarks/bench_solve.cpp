#include "randrand/rng.hpp"
#include "randrand/solvers.hpp"
#include "randrand/spectrum.hpp"

#include <benchmark/benchmark.h>

using namespace randrand;

namespace {

LinearOperator make_test_operator(Index n) {
  SpectrumModel model;
  model.n = n;
  model.head = exponential_head(20, 1e6, 1.0);
  model.tail_law = TailLaw::poly;
  model.tail_alpha = 0.5;
  model.seed = 13;
  return LinearOperator::dense(gen_spectrum(model).a, Definiteness::spd);
}

}  // namespace

static void BM_deflated_solve(benchmark::State& state, PrecondKind kind,
                              BasisRoute route) {
  const Index n = 1024;
  auto a = make_test_operator(n);
  Vector b = gaussian_vector(n, 17);
  b /= b.norm();
  SolveConfig cfg;
  cfg.precond = kind;
  cfg.basis = route;
  cfg.l = 80;
  cfg.seed = 19;
  cfg.tol = 1e-10;
  cfg.max_iters = 4000;
  for (auto _ : state) {
    auto [x, rep] = randrand_solve(cfg, a, 0.1, b);
    benchmark::DoNotOptimize(x.data());
    state.counters["iters"] = static_cast<double>(rep.iters);
    state.counters["matvecs"] = static_cast<double>(rep.matvecs_A);
  }
}
BENCHMARK_CAPTURE(BM_deflated_solve, r_right_explicit, PrecondKind::r_right,
                  BasisRoute::explicit_qr);
BENCHMARK_CAPTURE(BM_deflated_solve, r_right_qless, PrecondKind::r_right,
                  BasisRoute::qless_precond);
BENCHMARK_CAPTURE(BM_deflated_solve, c_explicit, PrecondKind::c,
                  BasisRoute::explicit_qr);

static void BM_plain_minres(benchmark::State& state) {
  const Index n = 1024;
  auto a = make_test_operator(n);
  Vector b = gaussian_vector(n, 17);
  b /= b.norm();
  SolveConfig cfg;
  cfg.precond = std::nullopt;
  cfg.tol = 1e-10;
  cfg.max_iters = 20000;
  for (auto _ : state) {
    auto [x, rep] = randrand_solve(cfg, a, 0.1, b);
    benchmark::DoNotOptimize(x.data());
    state.counters["iters"] = static_cast<double>(rep.iters);
  }
}
BENCHMARK(BM_plain_minres);

BENCHMARK_MAIN();
