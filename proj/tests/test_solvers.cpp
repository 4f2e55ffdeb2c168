#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "randrand/harness.hpp"
#include "randrand/rng.hpp"
#include "randrand/solvers.hpp"
#include "randrand/spectrum.hpp"

#include <cmath>

using namespace randrand;

namespace {

SolveConfig base_config(PrecondKind kind, Index l, std::uint64_t seed) {
  SolveConfig cfg;
  cfg.precond = kind;
  cfg.l = l;
  cfg.seed = seed;
  cfg.tol = 1e-10;
  cfg.max_iters = 2000;
  return cfg;
}

}  // namespace

TEST_CASE("cg solves trivial systems") {
  auto id = ShiftedOperator(LinearOperator::identity(5), 0.0);
  Vector b = gaussian_vector(5, 1);
  auto [x, rep] = cg(id, b, 1e-12, 100);
  CHECK(rep.converged);
  CHECK(rep.iters == 1);
  CHECK(x.isApprox(b, 1e-12));

  Vector d(3);
  d << 1, 2, 3;
  auto diag = ShiftedOperator(LinearOperator::diagonal(d), 0.0);
  Vector ones = Vector::Ones(3);
  auto [x2, rep2] = cg(diag, ones, 1e-12, 100);
  CHECK(rep2.converged);
  CHECK(rep2.iters <= 3);  // three distinct eigenvalues
  Vector expect(3);
  expect << 1.0, 0.5, 1.0 / 3.0;
  CHECK((x2 - expect).norm() <= 1e-12 * expect.norm());
}

TEST_CASE("cg matches the dense solve on diag(1..100)") {
  Vector d = Vector::LinSpaced(100, 1.0, 100.0);
  auto op = ShiftedOperator(LinearOperator::diagonal(d), 0.0);
  Vector b = gaussian_vector(100, 3);
  auto [x, rep] = cg(op, b, 1e-10, 1000);
  CHECK(rep.converged);
  Vector oracle = b.cwiseQuotient(d);
  CHECK((x - oracle).norm() <= 1e-8 * oracle.norm());
}

TEST_CASE("cg flags breakdown on indefinite operators") {
  Vector d(2);
  d << 1, -1;
  auto op = ShiftedOperator(
      LinearOperator::diagonal(d, Definiteness::symmetric_indefinite), 0.0);
  Vector b(2);
  b << 0.1, 1.0;
  auto [x, rep] = cg(op, b, 1e-12, 50);
  CHECK(rep.breakdown);
  CHECK_FALSE(rep.converged);
}

TEST_CASE("minres solves trivial and indefinite systems") {
  auto id = ShiftedOperator(LinearOperator::identity(4), 0.0);
  Vector b = gaussian_vector(4, 2);
  auto [x, rep] = minres(id, b, 1e-12, 100);
  CHECK(rep.converged);
  CHECK(rep.iters == 1);
  CHECK(x.isApprox(b, 1e-12));

  Vector d(2);
  d << -1, 2;
  auto op = ShiftedOperator(
      LinearOperator::diagonal(d, Definiteness::symmetric_indefinite), 0.0);
  Vector ones = Vector::Ones(2);
  auto [x2, rep2] = minres(op, ones, 1e-12, 100);
  CHECK(rep2.converged);
  CHECK(rep2.iters <= 2);  // two distinct eigenvalues
  Vector expect(2);
  expect << -1.0, 0.5;
  CHECK((x2 - expect).norm() <= 1e-12);
}

TEST_CASE("unpreconditioned minres residual history is non-increasing") {
  SpectrumModel model;
  model.n = 80;
  model.head = exponential_head(6, 100.0, 1.0);
  model.tail_law = TailLaw::poly;
  model.tail_alpha = 0.5;
  model.flip_begin = 10;
  model.flip_end = 12;
  model.seed = 5;
  auto gen = gen_spectrum(model);
  auto op = ShiftedOperator(
      LinearOperator::dense(gen.a, Definiteness::symmetric_indefinite), 0.0);
  Vector b = gaussian_vector(80, 6);
  auto [x, rep] = minres(op, b, 1e-10, 500);
  for (std::size_t i = 1; i < rep.residual_history.size(); ++i)
    CHECK(rep.residual_history[i] <= rep.residual_history[i - 1] * (1.0 + 1e-12));
}

TEST_CASE("randrand_solve on the shifted zero operator finishes in one iteration") {
  auto zero = LinearOperator::zero(20);
  Vector b = gaussian_vector(20, 7);
  struct Case {
    PrecondKind kind;
    TauPolicy policy;
    SolverKind solver;
  };
  std::vector<Case> cases = {
      {PrecondKind::r_right, {TauPolicy::Type::r_enorm, 1.0}, SolverKind::minres},
      {PrecondKind::r_split, {TauPolicy::Type::r_enorm, 1.0}, SolverKind::minres},
      {PrecondKind::r_left, {TauPolicy::Type::r_enorm, 1.0}, SolverKind::minres},
      {PrecondKind::c, {TauPolicy::Type::c_fixed_rho, 1.0}, SolverKind::cg},
      {PrecondKind::g, {TauPolicy::Type::g_fixed_rho, 1.0}, SolverKind::minres},
      {PrecondKind::nystrom, {TauPolicy::Type::c_fixed_rho, 1.0}, SolverKind::minres},
  };
  for (const auto& c : cases) {
    SolveConfig cfg = base_config(c.kind, 4, 11);
    cfg.solver = c.solver;
    cfg.tau_policy = c.policy;
    cfg.tol = 1e-12;
    auto [x, rep] = randrand_solve(cfg, zero, 1.0, b);
    CAPTURE(to_string(c.kind));
    CHECK(rep.converged);
    CHECK(rep.iters == 1);
    CHECK((x - b).norm() <= 1e-10 * b.norm());
  }
}

TEST_CASE("randrand_solve converges in two inner iterations on diag(10,1)") {
  Vector d(2);
  d << 10, 1;
  auto a = LinearOperator::diagonal(d);
  Vector b(2);
  b << 10, 1;
  SolveConfig cfg = base_config(PrecondKind::r_right, 1, 3);
  cfg.tol = 1e-12;
  auto [x, rep] = randrand_solve(cfg, a, 0.0, b);
  CHECK(rep.converged);
  CHECK(rep.iters <= 2);  // the deflated map has at most two eigenvalues
  CHECK((x - Vector(Vector::Ones(2))).norm() <= 1e-10);
}

TEST_CASE("deflation beats unpreconditioned minres by 10x on the synthetic spd system") {
  SpectrumModel model;
  model.n = 500;
  model.head = exponential_head(20, 1e6, 1.0);
  model.tail_law = TailLaw::poly;
  model.tail_alpha = 0.5;
  model.seed = 13;
  auto gen = gen_spectrum(model);
  auto a = LinearOperator::dense(gen.a, Definiteness::spd);
  const double mu = 0.1;
  Vector b = gaussian_vector(500, 17);
  b /= b.norm();

  SolveConfig plain;
  plain.precond = std::nullopt;
  plain.tol = 1e-10;
  plain.max_iters = 20000;
  plain.seed = 1;
  auto [xp, rp] = randrand_solve(plain, a, mu, b);

  SolveConfig cfg = base_config(PrecondKind::c, 100, 19);
  cfg.tol = 1e-10;
  auto [xc, rc] = randrand_solve(cfg, a, mu, b);
  CHECK(rc.converged);
  CHECK(rc.iters * 10 <= rp.iters);
}

TEST_CASE("split and right variants produce the same solution") {
  SpectrumModel model;
  model.n = 150;
  model.head = exponential_head(10, 1e4, 1.0);
  model.tail_law = TailLaw::poly;
  model.tail_alpha = 0.5;
  model.seed = 23;
  auto gen = gen_spectrum(model);
  auto a = LinearOperator::dense(gen.a, Definiteness::spd);
  const double mu = 0.05;
  Vector b = gaussian_vector(150, 29);

  SolveConfig right = base_config(PrecondKind::r_right, 24, 31);
  right.tol = 1e-11;
  auto [xr, rr] = randrand_solve(right, a, mu, b);
  SolveConfig split = base_config(PrecondKind::r_split, 24, 31);
  split.tol = 1e-11;
  auto [xs, rs] = randrand_solve(split, a, mu, b);
  CHECK(rr.converged);
  CHECK(rs.converged);
  CHECK((xr - xs).norm() <= 1e-9 * xr.norm());
}

TEST_CASE("restart soundness: true residual honored across restarts") {
  SpectrumModel model;
  model.n = 300;
  model.head = exponential_head(20, 1e5, 1.0);
  model.tail_law = TailLaw::poly;
  model.tail_alpha = 0.5;
  model.seed = 37;
  auto gen = gen_spectrum(model);
  auto a = LinearOperator::dense(gen.a, Definiteness::spd);
  const double mu = 1e-3;
  Vector b = gaussian_vector(300, 41);
  SolveConfig cfg = base_config(PrecondKind::r_right, 60, 43);
  cfg.tol = 1e-9;
  cfg.restart_eta = 1e-2;
  auto [x, rep] = randrand_solve(cfg, a, mu, b);
  CHECK(rep.converged);
  CHECK_FALSE(rep.restarts.empty());  // eta = 1e-2 forces restarts before 1e-12
  // Recompute the true residual independently.
  Vector r = b - (gen.a * x + mu * x);
  CHECK(r.norm() / b.norm() <= cfg.tol);
}

TEST_CASE("identical config and seed reproduce the residual history exactly") {
  SpectrumModel model;
  model.n = 120;
  model.head = exponential_head(8, 1e4, 1.0);
  model.tail_law = TailLaw::poly;
  model.tail_alpha = 0.25;
  model.seed = 47;
  auto gen = gen_spectrum(model);
  auto a = LinearOperator::dense(gen.a, Definiteness::spd);
  Vector b = gaussian_vector(120, 53);
  SolveConfig cfg = base_config(PrecondKind::c, 30, 59);
  auto [x1, r1] = randrand_solve(cfg, a, 0.05, b);
  auto [x2, r2] = randrand_solve(cfg, a, 0.05, b);
  REQUIRE(r1.residual_history.size() == r2.residual_history.size());
  for (std::size_t i = 0; i < r1.residual_history.size(); ++i)
    CHECK(r1.residual_history[i] == r2.residual_history[i]);
  CHECK((x1 - x2).norm() == 0.0);
}

TEST_CASE("reported matvecs match the instrumented counter") {
  SpectrumModel model;
  model.n = 90;
  model.head = exponential_head(6, 1e3, 1.0);
  model.tail_law = TailLaw::flat;
  model.seed = 61;
  auto gen = gen_spectrum(model);
  auto a = LinearOperator::dense(gen.a, Definiteness::spd);
  Vector b = gaussian_vector(90, 67);
  SolveConfig cfg = base_config(PrecondKind::r_right, 16, 71);
  a.reset_matvec_count();
  auto [x, rep] = randrand_solve(cfg, a, 0.1, b);
  CHECK(rep.matvecs_A == a.matvec_count());
  CHECK(rep.build_matvecs > 0);
}

TEST_CASE("adaptive threshold arithmetic and stopping modes") {
  // f (n / l_max)^{1/(2q+2)} |mu| = 100 * (4096/256)^{1/2} * |mu| = 400 |mu|.
  {
    auto zero = LinearOperator::zero(4096);
    ShiftedOperator op(zero, 0.5);
    auto res = adaptive_sketch_dim(op, 100.0, 8, 2.0, 256, 0, 3);
    // A = 0 means proj_err = |mu| * ||(I - Pi)|| = 0.5 <= 400 * 0.5.
    CHECK(res.met_threshold);
    CHECK(res.l_final == 8);
    CHECK(res.proj_err <= 400.0 * 0.5);
  }

  // Exact rank-l0 operator stops at l0.
  {
    SpectrumModel model;
    model.n = 200;
    model.head = exponential_head(8, 1e3, 1e2);
    model.tail_law = TailLaw::flat;
    model.flat_value = 0.0;
    model.seed = 73;
    auto gen = gen_spectrum(model);
    auto a = LinearOperator::dense(gen.a, Definiteness::spd);
    ShiftedOperator op(a, 0.3);
    auto res = adaptive_sketch_dim(op, 100.0, 16, 2.0, 128, 0, 5);
    CHECK(res.met_threshold);
    CHECK(res.l_final == 16);
  }

  // Flat spectrum has nothing to deflate: stagnation flag, threshold unmet.
  {
    auto id = LinearOperator::identity(256);
    ShiftedOperator op(id, 0.01);
    auto res = adaptive_sketch_dim(op, 1.0, 8, 2.0, 64, 0, 7);
    CHECK_FALSE(res.met_threshold);
    CHECK(res.stagnated);
  }

  // mu = 0 degenerates the criterion: warning + stagnation-only stopping.
  {
    auto id = LinearOperator::identity(128);
    ShiftedOperator op(id, 0.0);
    auto res = adaptive_sketch_dim(op, 100.0, 8, 2.0, 32, 0, 9);
    CHECK(res.mu_zero_warning);
    CHECK_FALSE(res.met_threshold);
  }
}

TEST_CASE("adaptive growth reuses previously drawn sketch columns") {
  SpectrumModel model;
  model.n = 300;
  model.head = exponential_head(24, 1e5, 1.0);
  model.tail_law = TailLaw::poly;
  model.tail_alpha = 1.5;
  model.seed = 79;
  auto gen = gen_spectrum(model);
  auto a = LinearOperator::dense(gen.a, Definiteness::spd);
  ShiftedOperator op(a, 0.05);
  a.reset_matvec_count();
  auto res = adaptive_sketch_dim(op, 10.0, 8, 2.0, 64, 1, 11);
  CHECK(res.l_final >= 8);
  // Budget per round: 2l for the Gram factorization plus at most 60 for the
  // projection-error power iteration. Subspace-iterated columns (q = 1) cost
  // one matvec each and are computed once across all rounds, never redrawn.
  long budget = res.l_final;  // q * l_final distinct column matvecs
  for (const auto& [l_round, err] : res.trace) budget += 2 * l_round + 60;
  CHECK(a.matvec_count() <= budget);
}

TEST_CASE("multi_shift_solve closed form and recycling consistency") {
  Vector d(2);
  d << 1, 2;
  auto a = LinearOperator::diagonal(d);
  Vector b = Vector::Ones(2);
  auto sketch = draw_sketch(SketchKind::gaussian, 2, 2, 3);
  SolveConfig cfg;
  cfg.precond = PrecondKind::r_right;
  cfg.tol = 1e-12;
  cfg.max_iters = 50;
  cfg.seed = 3;
  auto res = multi_shift_solve(a, b, {0.0, 1.0}, sketch, 0, cfg);
  REQUIRE(res.entries.size() == 2);
  Vector x0(2), x1(2);
  x0 << 1.0, 0.5;
  x1 << 0.5, 1.0 / 3.0;
  CHECK(res.entries[0].report.converged);
  CHECK((res.entries[0].x - x0).norm() <= 1e-10);
  CHECK((res.entries[1].x - x1).norm() <= 1e-10);
}

TEST_CASE("recycled solves match fresh builds and basis matvecs stay flat") {
  SpectrumModel model;
  model.n = 200;
  model.head = exponential_head(12, 1e4, 1.0);
  model.tail_law = TailLaw::poly;
  model.tail_alpha = 0.5;
  model.seed = 83;
  auto gen = gen_spectrum(model);
  auto a = LinearOperator::dense(gen.a, Definiteness::spd);
  Vector b = gaussian_vector(200, 89);
  const Index l = 32;
  auto sketch = draw_sketch(SketchKind::gaussian, l, 200, 97);
  SolveConfig cfg;
  cfg.precond = PrecondKind::r_right;
  cfg.tol = 1e-10;
  cfg.max_iters = 3000;
  cfg.seed = 97;

  std::vector<double> shifts = {0.01, 0.1, 1.0, 10.0};
  auto res = multi_shift_solve(a, b, shifts, sketch, 0, cfg);
  for (std::size_t i = 0; i < shifts.size(); ++i) {
    REQUIRE(res.entries[i].built);
    CHECK(res.entries[i].report.converged);
    // Fresh build at this shift with the same sketch.
    SolveConfig fresh = cfg;
    fresh.basis = BasisRoute::qless;
    fresh.sketch_kind = SketchKind::gaussian;
    fresh.l = l;
    auto [xf, rf] = randrand_solve(fresh, a, shifts[i], b);
    CHECK(rf.converged);
    CHECK((res.entries[i].x - xf).norm() <= 1e-8 * xf.norm());
  }

  // Basis construction cost is independent of the number of shifts.
  auto res2 = multi_shift_solve(a, b, {0.01, 10.0}, sketch, 0, cfg);
  CHECK(res.basis_matvecs == res2.basis_matvecs);
  CHECK(res.basis_matvecs == res.pack.build_matvecs);
}

TEST_CASE("iteration_bound_report closed forms") {
  auto b1 = iteration_bound_report(100, 10.0, 0, 2.0, 2.0);
  CHECK(b1.t == doctest::Approx(1.0));

  auto b2 = iteration_bound_report(1000, 10.0, 0, 1.0, 1.0);  // n/d = 100
  CHECK(b2.t_bound_expect ==
        doctest::Approx(1.0 + std::pow(14800.0, 0.25)).epsilon(1e-12));
  CHECK(b2.t_bound_expect == doctest::Approx(12.03).epsilon(1e-3));

  // Larger q strictly decreases the high-probability term when 3240 n/d > 1.
  double prev = iteration_bound_report(1000, 10.0, 0, 1.0, 1.0).t_bound_hp;
  for (int q = 1; q <= 3; ++q) {
    const double cur = iteration_bound_report(1000, 10.0, q, 1.0, 1.0).t_bound_hp;
    CHECK(cur < prev);
    prev = cur;
  }
  CHECK_THROWS_AS(iteration_bound_report(0, 1.0, 0, 1.0, 1.0), ConfigError);
}

TEST_CASE("solve config json round trip and validation") {
  const std::string text = R"({
    "solver": "minres",
    "precond": "c",
    "sketch": {"kind": "sparse", "l": 24, "gamma": 4, "seed": 7},
    "q": 1,
    "tau_policy": {"type": "c_fixed_rho", "rho": 0.5},
    "basis": "qless_precond",
    "tol": 1e-9,
    "max_iters": 500,
    "restart_eta": 0.01
  })";
  SolveConfig cfg = solve_config_from_json_text(text);
  CHECK(cfg.solver == SolverKind::minres);
  REQUIRE(cfg.precond.has_value());
  CHECK(*cfg.precond == PrecondKind::c);
  CHECK(cfg.sketch_kind == SketchKind::sparse);
  CHECK(cfg.l == 24);
  CHECK(cfg.gamma == 4);
  CHECK(cfg.q == 1);
  CHECK(cfg.basis == BasisRoute::qless_precond);
  REQUIRE(cfg.tau_policy.has_value());
  CHECK(cfg.tau_policy->rho == 0.5);

  CHECK_THROWS_AS(solve_config_from_json_text(R"({"tol": 2.0})"), ConfigError);
  CHECK_THROWS_AS(
      solve_config_from_json_text(R"({"precond": "g", "solver": "cg"})"),
      ConfigError);
}

TEST_CASE("residual trace csv has the documented schema") {
  SolveReport rep;
  rep.residual_history = {1.0, 0.5, 0.01};
  rep.restarts = {2};
  const std::string path = "trace_test.csv";
  write_residual_trace_csv(path, rep);
  std::ifstream in(path);
  std::string header;
  std::getline(in, header);
  CHECK(header == "iter,rel_residual,restarted");
  std::string row;
  std::getline(in, row);
  CHECK(row.rfind("0,1", 0) == 0);
  std::getline(in, row);
  std::getline(in, row);
  CHECK(row.find(",1") != std::string::npos);  // restart marker on iteration 2
  std::remove(path.c_str());
}
