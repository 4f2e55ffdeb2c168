#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "randrand/operator.hpp"
#include "randrand/rng.hpp"
#include "randrand/spectrum.hpp"

#include <cmath>

using namespace randrand;

namespace {

Vector vec2(double a, double b) {
  Vector v(2);
  v << a, b;
  return v;
}

}  // namespace

TEST_CASE("apply_shifted on diagonal operators") {
  auto a = LinearOperator::diagonal(vec2(1.0, 2.0));
  CHECK(apply_shifted(ShiftedOperator(a, 0.0), vec2(1, 1)).isApprox(vec2(1, 2)));
  CHECK(apply_shifted(ShiftedOperator(a, 3.0), vec2(1, 1)).isApprox(vec2(4, 5)));

  auto zero = LinearOperator::zero(2);
  CHECK(apply_shifted(ShiftedOperator(zero, 1.0), vec2(7, -2)).isApprox(vec2(7, -2)));
}

TEST_CASE("apply_shifted rejects mismatched dimensions") {
  auto a = LinearOperator::diagonal(vec2(1.0, 2.0));
  ShiftedOperator op(a, 1.0);
  CHECK_THROWS_AS(op.apply(Vector(Vector::Ones(3))), DimensionError);
}

TEST_CASE("operator linearity invariant") {
  SpectrumModel model;
  model.n = 40;
  model.tail_law = TailLaw::poly;
  model.tail_alpha = 0.5;
  model.seed = 7;
  auto gen = gen_spectrum(model);
  auto a = LinearOperator::dense(gen.a, Definiteness::spd);
  Prng rng(3);
  for (int t = 0; t < 5; ++t) {
    Vector u = gaussian_vector(40, 11, static_cast<std::uint64_t>(t));
    Vector v = gaussian_vector(40, 12, static_cast<std::uint64_t>(t));
    const double alpha = rng.normal(), beta = rng.normal();
    Vector lhs = a.apply(Vector(alpha * u + beta * v));
    Vector rhs = alpha * a.apply(u) + beta * a.apply(v);
    CHECK((lhs - rhs).norm() <=
          1e-12 * (std::abs(alpha) * u.norm() + std::abs(beta) * v.norm()) *
              gen.a.norm());
  }
}

TEST_CASE("symmetry probes pass for harness-built operators") {
  SpectrumModel model;
  model.n = 60;
  model.head = exponential_head(5, 100.0, 1.0);
  model.tail_law = TailLaw::flat;
  model.seed = 21;
  auto gen = gen_spectrum(model);
  auto a = LinearOperator::dense(gen.a, Definiteness::spd);
  const double norm = 100.0;
  for (int t = 0; t < 20; ++t) {
    Vector u = gaussian_vector(60, 31, static_cast<std::uint64_t>(t));
    Vector v = gaussian_vector(60, 32, static_cast<std::uint64_t>(t));
    const double lhs = u.dot(a.apply(v));
    const double rhs = a.apply(u).dot(v);
    CHECK(std::abs(lhs - rhs) <= 1e-12 * u.norm() * v.norm() * norm);
  }
}

TEST_CASE("estimate_spectral_norm examples") {
  auto d51 = LinearOperator::diagonal(vec2(5.0, 1.0));
  CHECK(estimate_spectral_norm(d51, 0, 50, 1e-10) == doctest::Approx(5.0).epsilon(1e-8));

  auto id3 = LinearOperator::identity(3);
  CHECK(estimate_spectral_norm(id3, 0, 1, 1e-10) == 1.0);  // exact after one iteration

  auto d22 = LinearOperator::diagonal(vec2(2.0, 2.0));
  CHECK(estimate_spectral_norm(d22, 0, 50, 1e-10) == doctest::Approx(2.0).epsilon(1e-8));

  auto zero = LinearOperator::zero(4);
  CHECK(estimate_spectral_norm(zero, 0) == 0.0);

  CHECK_THROWS_AS(estimate_spectral_norm(id3, 0, 0, 1e-2), ConfigError);
}

TEST_CASE("estimate_spectral_norm is a tight lower bound on gapped spectra") {
  SpectrumModel model;
  model.n = 50;
  model.head = {1.1};
  model.tail_law = TailLaw::flat;
  model.flat_value = 1.0;  // gap lambda1/lambda2 = 1.1
  model.seed = 5;
  auto gen = gen_spectrum(model);
  auto a = LinearOperator::dense(gen.a, Definiteness::spd);
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const double v = estimate_spectral_norm(a, seed, 200, 1e-12);
    CHECK(v <= 1.1 + 1e-12);
    CHECK(v >= (1.0 - 1e-6) * 1.1);
  }
}

TEST_CASE("subspace_iterate powers") {
  auto a = LinearOperator::diagonal(vec2(2.0, 3.0));

  Matrix x = Matrix::Random(2, 2);
  CHECK(subspace_iterate(a, x, 0).isApprox(x));  // zero power

  CHECK(subspace_iterate(a, Matrix(Matrix::Identity(2, 2)), 1)
            .isApprox(Matrix(vec2(2, 3).asDiagonal())));

  Matrix col(2, 1);
  col << 1, 1;
  Matrix expect(2, 1);
  expect << 4, 9;
  CHECK(subspace_iterate(a, col, 2).isApprox(expect));

  CHECK_THROWS_AS(subspace_iterate(a, x, 3), ConfigError);
  CHECK_THROWS_AS(subspace_iterate(a, x, -1), ConfigError);
}

TEST_CASE("subspace_iterate matches dense product for q=1") {
  SpectrumModel model;
  model.n = 150;
  model.tail_law = TailLaw::poly;
  model.tail_alpha = 0.25;
  model.seed = 9;
  auto gen = gen_spectrum(model);
  auto a = LinearOperator::dense(gen.a, Definiteness::spd);
  Matrix x(150, 6);
  for (Index j = 0; j < 6; ++j)
    x.col(j) = gaussian_vector(150, 77, static_cast<std::uint64_t>(j));
  Matrix omega = subspace_iterate(a, x, 1);
  Matrix oracle = gen.a * x;
  CHECK((omega - oracle).norm() <= 1e-12 * oracle.norm());
}

TEST_CASE("matvec counter is shared across copies and counts shifts") {
  auto a = LinearOperator::diagonal(vec2(1.0, 2.0));
  a.reset_matvec_count();
  ShiftedOperator op(a, 0.5);
  op.apply(vec2(1, 1));
  LinearOperator copy = a;
  copy.apply(vec2(1, 0));
  CHECK(a.matvec_count() == 2);
}

TEST_CASE("general operators use the normal-equations power") {
  Matrix m(2, 2);
  m << 0, 1, 0, 0;  // nilpotent, non-symmetric
  auto a = LinearOperator::dense(m, Definiteness::general);
  Matrix x = Matrix::Identity(2, 2);
  // (A^T A)^1 = diag(0, 1)
  Matrix omega = subspace_iterate(a, x, 1);
  Matrix expect(2, 2);
  expect << 0, 0, 0, 1;
  CHECK(omega.isApprox(expect));
}
