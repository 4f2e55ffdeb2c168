#include "randrand/operator.hpp"

#include "randrand/rng.hpp"

#include <cmath>
#include <utility>

namespace randrand {

LinearOperator::LinearOperator(Index n, bool symmetric,
                               Definiteness definiteness, ApplyFn apply,
                               ApplyFn apply_transpose, double matvec_cost_hint) {
  if (n <= 0) throw ConfigError("LinearOperator: dimension must be positive");
  auto impl = std::make_shared<Impl>();
  impl->n = n;
  impl->symmetric = symmetric;
  impl->definiteness = definiteness;
  impl->apply = std::move(apply);
  impl->apply_transpose = std::move(apply_transpose);
  impl->cost_hint = matvec_cost_hint;
  impl_ = std::move(impl);
}

Vector LinearOperator::apply(const Vector& v) const {
  require_dim(v.size(), impl_->n, "LinearOperator::apply");
  impl_->counter.fetch_add(1, std::memory_order_relaxed);
  return impl_->apply(v);
}

Vector LinearOperator::apply_transpose(const Vector& v) const {
  require_dim(v.size(), impl_->n, "LinearOperator::apply_transpose");
  if (impl_->symmetric) {
    impl_->counter.fetch_add(1, std::memory_order_relaxed);
    return impl_->apply(v);
  }
  if (!impl_->apply_transpose)
    throw ConfigError("LinearOperator: transpose apply not available");
  impl_->counter.fetch_add(1, std::memory_order_relaxed);
  return impl_->apply_transpose(v);
}

Matrix LinearOperator::columns(const std::vector<Index>& cols) const {
  if (!impl_->columns)
    throw ConfigError("LinearOperator: column extraction not available");
  return impl_->columns(cols);
}

LinearOperator LinearOperator::with_columns(ColumnsFn columns) const {
  LinearOperator out = *this;
  auto impl = std::make_shared<Impl>();
  impl->n = impl_->n;
  impl->symmetric = impl_->symmetric;
  impl->definiteness = impl_->definiteness;
  impl->apply = impl_->apply;
  impl->apply_transpose = impl_->apply_transpose;
  impl->columns = std::move(columns);
  impl->cost_hint = impl_->cost_hint;
  out.impl_ = std::move(impl);
  return out;
}

LinearOperator LinearOperator::dense(Matrix a, Definiteness definiteness) {
  if (a.rows() != a.cols()) throw ConfigError("dense operator must be square");
  auto m = std::make_shared<Matrix>(std::move(a));
  const bool sym = definiteness != Definiteness::general ||
                   m->isApprox(m->transpose(), 1e-14);
  return LinearOperator(
      m->rows(), sym, definiteness, [m](const Vector& v) { return Vector(*m * v); },
      [m](const Vector& v) { return Vector(m->transpose() * v); },
      static_cast<double>(m->rows()) * static_cast<double>(m->cols()));
}

LinearOperator LinearOperator::diagonal(Vector d, Definiteness definiteness) {
  auto dv = std::make_shared<Vector>(std::move(d));
  return LinearOperator(
      dv->size(), true, definiteness,
      [dv](const Vector& v) { return Vector(dv->cwiseProduct(v)); }, nullptr,
      static_cast<double>(dv->size()));
}

LinearOperator LinearOperator::identity(Index n) {
  return LinearOperator(
      n, true, Definiteness::spd, [](const Vector& v) { return v; });
}

LinearOperator LinearOperator::zero(Index n) {
  return LinearOperator(
      n, true, Definiteness::spd,
      [n](const Vector&) { return Vector(Vector::Zero(n)); });
}

Vector ShiftedOperator::apply(const Vector& v) const {
  if (mu_ == 0.0) return base_.apply(v);
  Vector y = base_.apply(v);
  y += mu_ * v;
  return y;
}

Matrix ShiftedOperator::apply(const Matrix& m) const {
  require_dim(m.rows(), n(), "ShiftedOperator::apply");
  Matrix out(m.rows(), m.cols());
  for (Index j = 0; j < m.cols(); ++j) out.col(j) = apply(Vector(m.col(j)));
  return out;
}

double estimate_spectral_norm(const std::function<Vector(const Vector&)>& op,
                              Index n, std::uint64_t seed, int max_iters,
                              double rel_tol) {
  if (max_iters < 1) throw ConfigError("estimate_spectral_norm: max_iters >= 1");
  Vector v = gaussian_vector(n, seed, /*stream=*/0x9d5f);
  double nv = v.norm();
  if (nv == 0.0) v.setOnes(), nv = v.norm();
  v /= nv;
  double lambda_prev = 0.0;
  double lambda = 0.0;
  for (int it = 0; it < max_iters; ++it) {
    Vector w = op(v);
    lambda = v.dot(w) / v.squaredNorm();  // Rayleigh quotient
    const double wn = w.norm();
    if (wn == 0.0) return 0.0;
    v = w / wn;
    if (it > 0 && std::abs(lambda - lambda_prev) < rel_tol * std::abs(lambda))
      break;
    lambda_prev = lambda;
  }
  return std::abs(lambda);
}

double estimate_spectral_norm(const LinearOperator& op, std::uint64_t seed,
                              int max_iters, double rel_tol) {
  return estimate_spectral_norm(
      [&op](const Vector& v) { return op.apply(v); }, op.n(), seed, max_iters,
      rel_tol);
}

double estimate_spectral_norm(const ShiftedOperator& op, std::uint64_t seed,
                              int max_iters, double rel_tol) {
  return estimate_spectral_norm(
      [&op](const Vector& v) { return op.apply(v); }, op.n(), seed, max_iters,
      rel_tol);
}

Matrix subspace_iterate(const LinearOperator& base, const Matrix& x_t, int q) {
  if (q < 0 || q > 2)
    throw ConfigError("subspace_iterate: q must be in {0, 1, 2}");
  require_dim(x_t.rows(), base.n(), "subspace_iterate");
  Matrix omega = x_t;
  for (Index j = 0; j < omega.cols(); ++j) {
    Vector col = omega.col(j);
    for (int p = 0; p < q; ++p) {
      if (base.symmetric()) {
        col = base.apply(col);
      } else {
        col = base.apply_transpose(base.apply(col));
      }
    }
    omega.col(j) = col;
  }
  return omega;
}

Matrix subspace_iterate(const ShiftedOperator& op, const Matrix& x_t, int q) {
  return subspace_iterate(op.base(), x_t, q);
}

}  // namespace randrand
