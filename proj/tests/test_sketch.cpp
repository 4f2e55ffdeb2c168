#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "randrand/rng.hpp"
#include "randrand/sketch.hpp"

#include <cmath>
#include <set>

using namespace randrand;

TEST_CASE("fwht matches the Hadamard matrix and is an involution up to scale") {
  Vector v(4);
  v << 1, 0, 0, 0;
  fwht(v);
  CHECK(v.isApprox(Vector(Vector::Ones(4))));

  Vector w(4);
  w << 1, 1, 1, 1;
  fwht(w);
  Vector expect(4);
  expect << 4, 0, 0, 0;
  CHECK(w.isApprox(expect));

  Vector r = gaussian_vector(4, 3);
  Vector r2 = r;
  fwht(r2);
  fwht(r2);
  CHECK(r2.isApprox(Vector(4.0 * r)));

  Vector bad(3);
  CHECK_THROWS_AS(fwht(bad), ConfigError);
}

TEST_CASE("column_sample rows are distinct basis vectors") {
  auto s = draw_sketch(SketchKind::column_sample, 2, 4, 0);
  Matrix x = s.materialize();
  std::set<Index> picked;
  for (Index i = 0; i < 2; ++i) {
    Index hot = -1;
    for (Index j = 0; j < 4; ++j) {
      if (x(i, j) == 1.0) {
        CHECK(hot == -1);
        hot = j;
      } else {
        CHECK(x(i, j) == 0.0);
      }
    }
    REQUIRE(hot >= 0);
    picked.insert(hot);
  }
  CHECK(picked.size() == 2);  // without replacement
}

TEST_CASE("sparse sketch has exactly gamma entries of +-1/sqrt(gamma) per column") {
  SketchParams params;
  params.gamma = 2;
  auto s = draw_sketch(SketchKind::sparse, 4, 3, 0, params);
  Matrix x = s.materialize();
  const double val = 1.0 / std::sqrt(2.0);
  for (Index j = 0; j < 3; ++j) {
    int nnz = 0;
    for (Index i = 0; i < 4; ++i) {
      if (x(i, j) != 0.0) {
        ++nnz;
        CHECK(std::abs(x(i, j)) == doctest::Approx(val).epsilon(1e-15));
      }
    }
    CHECK(nnz == 2);
    CHECK(x.col(j).norm() == doctest::Approx(1.0).epsilon(1e-15));  // exactly unit
  }
}

TEST_CASE("gaussian entries follow the variance-1/l law") {
  // Monte-Carlo check over the 10,000 drawn entries.
  const Index l = 100, n = 100;
  auto s = draw_sketch(SketchKind::gaussian, l, n, 0);
  Matrix x = s.materialize();
  const double mean = x.mean();
  const double bound = 3.0 / std::sqrt(static_cast<double>(l * n * l));
  CHECK(std::abs(mean) <= bound);
  double colnorm2 = 0.0;
  for (Index j = 0; j < n; ++j) colnorm2 += x.col(j).squaredNorm();
  colnorm2 /= static_cast<double>(n);
  CHECK(colnorm2 == doctest::Approx(1.0).epsilon(0.10));
}

TEST_CASE("sketch_apply left_X on the identity returns sampled rows") {
  // Find a seed that samples rows {0, 2} of I3 (the spec's rows {1,3}).
  std::uint64_t seed = 0;
  for (; seed < 1000; ++seed) {
    auto s = draw_sketch(SketchKind::column_sample, 2, 3, seed);
    Matrix x = s.materialize();
    std::set<Index> rows;
    for (Index i = 0; i < 2; ++i)
      for (Index j = 0; j < 3; ++j)
        if (x(i, j) == 1.0) rows.insert(j);
    if (rows == std::set<Index>{0, 2}) break;
  }
  REQUIRE(seed < 1000);
  auto s = draw_sketch(SketchKind::column_sample, 2, 3, seed);
  Matrix got = sketch_apply(s, Matrix(Matrix::Identity(3, 3)), SketchSide::left_X);
  CHECK(got.isApprox(s.materialize()));
  for (Index i = 0; i < 2; ++i) CHECK(got.row(i).sum() == 1.0);
}

TEST_CASE("sparse apply to a basis vector returns the materialized column") {
  SketchParams params;
  params.gamma = 3;
  auto s = draw_sketch(SketchKind::sparse, 8, 5, 17, params);
  Matrix x = s.materialize();
  for (Index j = 0; j < 5; ++j) {
    Vector e = Vector::Zero(5);
    e[j] = 1.0;
    CHECK(s.apply(e).isApprox(Vector(x.col(j))));
  }
}

TEST_CASE("srht on n=2 realizes the scaled H2 transform") {
  // Find a seed with D = diag(+1,+1) and rows in natural order, matching the
  // hand-computed value 2^{-1/2} H2 v.
  std::uint64_t seed = 0;
  bool found = false;
  for (; seed < 5000; ++seed) {
    auto s = draw_sketch(SketchKind::srht, 2, 2, seed);
    Matrix x = s.materialize();
    Matrix expect(2, 2);
    const double c = 1.0 / std::sqrt(2.0);
    expect << c, c, c, -c;
    if (x.isApprox(expect, 1e-14)) {
      found = true;
      break;
    }
  }
  REQUIRE(found);
  auto s = draw_sketch(SketchKind::srht, 2, 2, seed);
  Vector v(2);
  v << 1, 0;
  Vector out = s.apply(v);
  CHECK(out[0] == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-14));
  CHECK(out[1] == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-14));
  CHECK(s.padded_len() == 2);
}

TEST_CASE("srht pads to the smallest power of two above n") {
  auto s = draw_sketch(SketchKind::srht, 4, 5, 1);
  CHECK(s.padded_len() == 8);
  // Structural check against the materialization for a non-power-of-two n.
  Matrix x = s.materialize();
  Vector v = gaussian_vector(5, 2);
  CHECK(s.apply(v).isApprox(Vector(x * v), 1e-13));
}

TEST_CASE("adjoint consistency across kinds") {
  SketchParams params;
  params.gamma = 3;
  const Index n = 50;
  for (auto kind : {SketchKind::gaussian, SketchKind::srht, SketchKind::sparse,
                    SketchKind::multilevel, SketchKind::column_sample}) {
    auto s = draw_sketch(kind, 12, n, 99, params);
    for (int t = 0; t < 3; ++t) {
      Vector u = gaussian_vector(n, 4, static_cast<std::uint64_t>(t));
      Vector w = gaussian_vector(12, 5, static_cast<std::uint64_t>(t));
      const double lhs = s.apply(u).dot(w);
      const double rhs = u.dot(s.apply_transpose(w));
      CHECK(std::abs(lhs - rhs) <=
            1e-12 * std::max(1.0, std::abs(lhs)));
    }
  }
}

TEST_CASE("seed determinism is bit-identical") {
  SketchParams params;
  params.gamma = 4;
  for (auto kind : {SketchKind::gaussian, SketchKind::srht, SketchKind::sparse,
                    SketchKind::multilevel, SketchKind::column_sample}) {
    auto s1 = draw_sketch(kind, 10, 33, 123, params);
    auto s2 = draw_sketch(kind, 10, 33, 123, params);
    Vector v = gaussian_vector(33, 6);
    Vector a = s1.apply(v);
    Vector b = s2.apply(v);
    for (Index i = 0; i < a.size(); ++i) CHECK(a[i] == b[i]);  // bitwise
  }
}

TEST_CASE("srht is an isometry on average") {
  const Index n = 64, l = 16;
  Vector v = gaussian_vector(n, 1234);
  const double target = v.squaredNorm();
  double acc = 0.0;
  for (std::uint64_t seed = 0; seed < 500; ++seed)
    acc += draw_sketch(SketchKind::srht, l, n, seed).apply(v).squaredNorm();
  acc /= 500.0;
  CHECK(acc == doctest::Approx(target).epsilon(0.05));
}

TEST_CASE("draw_sketch precondition errors") {
  SketchParams params;
  params.gamma = 9;
  CHECK_THROWS_AS(draw_sketch(SketchKind::sparse, 4, 10, 0, params), ConfigError);
  SketchParams small_inner;
  small_inner.l1 = 3;
  CHECK_THROWS_AS(draw_sketch(SketchKind::multilevel, 8, 40, 0, small_inner),
                  ConfigError);
  CHECK_THROWS_AS(draw_sketch(SketchKind::gaussian, 11, 10, 0), ConfigError);
  CHECK_THROWS_AS(draw_sketch(SketchKind::column_sample, 11, 10, 0), ConfigError);
}

TEST_CASE("check_epsilon_embedding trivial cases") {
  const Index n = 12;
  Matrix b = Matrix::Identity(n, n);
  // Sampler of all rows: an exact isometry.
  auto all_rows = draw_sketch(SketchKind::column_sample, n, n, 3);
  auto check = check_epsilon_embedding(all_rows, b, 20, 7, 0.25);
  CHECK(check.pass);
  CHECK(check.epsilon_observed <= 1e-14);

  // A sampler that misses the only direction B spans: all ratios are 0 and
  // any epsilon < 1 fails.
  auto one_row = draw_sketch(SketchKind::column_sample, 1, n, 5);
  Matrix xr = one_row.materialize();
  Index sampled = -1;
  for (Index j = 0; j < n; ++j)
    if (xr(0, j) == 1.0) sampled = j;
  const Index missed = sampled == 0 ? 1 : 0;
  Matrix b2 = Matrix::Zero(n, 1);
  b2(missed, 0) = 1.0;
  auto fail = check_epsilon_embedding(one_row, b2, 10, 7, 0.999);
  CHECK_FALSE(fail.pass);
  for (double r : fail.sampled_ratios) CHECK(r == 0.0);
}

TEST_CASE("gaussian embedding with 20x oversampling passes at epsilon 0.5") {
  const Index n = 512, l = 8;
  Matrix b(n, l);
  for (Index j = 0; j < l; ++j)
    b.col(j) = gaussian_vector(n, 1000, static_cast<std::uint64_t>(j));
  int passes = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    auto theta = draw_sketch(SketchKind::gaussian, 20 * l, n, seed);
    if (check_epsilon_embedding(theta, b, 20, seed + 1, 0.5).pass) ++passes;
  }
  CHECK(passes >= 99);
}

TEST_CASE("multilevel composes a sparse inner with a gaussian outer") {
  auto s = draw_sketch(SketchKind::multilevel, 6, 40, 11);
  CHECK(s.rows() == 6);
  CHECK(s.cols() == 40);
  Matrix x = s.materialize();
  Vector v = gaussian_vector(40, 8);
  CHECK(s.apply(v).isApprox(Vector(x * v), 1e-12));
}

TEST_CASE("prefix extension keeps existing gaussian rows up to rescale") {
  auto s8 = draw_sketch(SketchKind::gaussian, 8, 30, 77);
  auto s16 = s8.extend_rows(16);
  Matrix x8 = s8.materialize() * std::sqrt(8.0);
  Matrix x16 = s16.materialize() * std::sqrt(16.0);
  CHECK(x16.topRows(8).isApprox(x8, 1e-14));
}
