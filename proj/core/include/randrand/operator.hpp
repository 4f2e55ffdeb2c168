#pragma once

#include "randrand/types.hpp"

#include <atomic>
#include <functional>
#include <memory>
#include <optional>

namespace randrand {

enum class Definiteness { spd, symmetric_indefinite, general };

/// Matrix-free linear operator of dimension n, exposed only through matvecs.
/// Immutable after construction; apply() is reentrant. Copies share the
/// underlying implementation and the matvec counter.
class LinearOperator {
 public:
  using ApplyFn = std::function<Vector(const Vector&)>;
  using ColumnsFn = std::function<Matrix(const std::vector<Index>&)>;

  LinearOperator(Index n, bool symmetric, Definiteness definiteness,
                 ApplyFn apply, ApplyFn apply_transpose = nullptr,
                 double matvec_cost_hint = 0.0);

  Index n() const { return impl_->n; }
  bool symmetric() const { return impl_->symmetric; }
  Definiteness definiteness() const { return impl_->definiteness; }
  double matvec_cost_hint() const { return impl_->cost_hint; }

  /// y = A v. Counts one matvec.
  Vector apply(const Vector& v) const;
  /// y = A^T v. Counts one matvec. Falls back to apply() for symmetric operators.
  Vector apply_transpose(const Vector& v) const;

  /// Column extraction for operators that can serve A(:, j) cheaper than a
  /// matvec (kernel matrices); lets column-sampling sketches build A_mu Omega
  /// without any full matvecs.
  bool has_columns() const { return static_cast<bool>(impl_->columns); }
  Matrix columns(const std::vector<Index>& cols) const;
  LinearOperator with_columns(ColumnsFn columns) const;

  long matvec_count() const { return impl_->counter.load(); }
  void reset_matvec_count() const { impl_->counter.store(0); }

  // Factories.
  static LinearOperator dense(Matrix a,
                              Definiteness definiteness = Definiteness::general);
  static LinearOperator diagonal(Vector d,
                                 Definiteness definiteness = Definiteness::spd);
  static LinearOperator identity(Index n);
  static LinearOperator zero(Index n);

 private:
  struct Impl {
    Index n;
    bool symmetric;
    Definiteness definiteness;
    ApplyFn apply;
    ApplyFn apply_transpose;
    ColumnsFn columns;
    double cost_hint;
    mutable std::atomic<long> counter{0};
  };
  std::shared_ptr<const Impl> impl_;
};

/// A + mu*I, applied as one fused add-scale on top of the base matvec.
class ShiftedOperator {
 public:
  ShiftedOperator(LinearOperator base, double mu)
      : base_(std::move(base)), mu_(mu) {}

  Index n() const { return base_.n(); }
  double mu() const { return mu_; }
  const LinearOperator& base() const { return base_; }
  bool symmetric() const { return base_.symmetric(); }

  Vector apply(const Vector& v) const;
  /// Dense n x l product (A + mu I) * M, one matvec per column.
  Matrix apply(const Matrix& m) const;

 private:
  LinearOperator base_;
  double mu_;
};

inline Vector apply_shifted(const ShiftedOperator& op, const Vector& v) {
  return op.apply(v);
}

struct PowerIterOptions {
  int max_iters = 30;
  double rel_tol = 1e-2;
};

/// Dominant-eigenvalue estimate of a symmetric operator by power iteration
/// with a seeded random start. Returns the magnitude of the last Rayleigh
/// quotient, a lower bound on the spectral norm. Zero operator returns 0.
double estimate_spectral_norm(const std::function<Vector(const Vector&)>& op,
                              Index n, std::uint64_t seed,
                              int max_iters = 30, double rel_tol = 1e-2);

double estimate_spectral_norm(const LinearOperator& op, std::uint64_t seed,
                              int max_iters = 30, double rel_tol = 1e-2);
double estimate_spectral_norm(const ShiftedOperator& op, std::uint64_t seed,
                              int max_iters = 30, double rel_tol = 1e-2);

/// Omega = A^q X^T for symmetric base, (A^T A)^q X^T otherwise, applied
/// column by column with no intermediate orthogonalization. q in {0, 1, 2}.
Matrix subspace_iterate(const LinearOperator& base, const Matrix& x_t, int q);
Matrix subspace_iterate(const ShiftedOperator& op, const Matrix& x_t, int q);

}  // namespace randrand
