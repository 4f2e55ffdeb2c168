#include "randrand/projector.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include <cmath>

namespace randrand {

ProjectionEngine::ProjectionEngine(ShiftedOperator op_mu, DeflationBasis basis,
                                   EngineConfig config,
                                   std::optional<Matrix> cached_basis_product)
    : op_(std::move(op_mu)), basis_(std::move(basis)), config_(config) {
  require_dim(basis_.omega.rows(), op_.n(), "ProjectionEngine");
  if (basis_.r.rows() != basis_.r.cols() || basis_.r.cols() != basis_.omega.cols())
    throw ConfigError("ProjectionEngine: R must be square and match omega");
  if (cached_basis_product) {
    require_dim(cached_basis_product->rows(), op_.n(), "ProjectionEngine cache");
    basis_product_ = std::move(*cached_basis_product);
    product_cached_ = true;
  }
}

Vector ProjectionEngine::solve_r(const Vector& u) const {
  return basis_.r.triangularView<Eigen::Upper>().solve(u);
}

Vector ProjectionEngine::solve_rt(const Vector& u) const {
  return basis_.r.transpose().triangularView<Eigen::Lower>().solve(u);
}

Vector ProjectionEngine::basis_apply(const Vector& u) const {
  require_dim(u.size(), l(), "basis_apply");
  if (basis_.mode == BasisMode::explicit_q)
    return *basis_.q_factor * (basis_.r * u);
  if (product_cached_) return basis_product_ * u;
  return op_.apply(Vector(basis_.omega * u));
}

Vector ProjectionEngine::basis_apply_transpose(const Vector& v) const {
  require_dim(v.size(), n(), "basis_apply_transpose");
  if (basis_.mode == BasisMode::explicit_q)
    return basis_.r.transpose() * (basis_.q_factor->transpose() * v);
  if (product_cached_) return basis_product_.transpose() * v;
  return basis_.omega.transpose() * op_.apply(v);
}

Vector ProjectionEngine::q_apply(const Vector& u) const {
  require_dim(u.size(), l(), "q_apply");
  if (basis_.mode == BasisMode::explicit_q) return *basis_.q_factor * u;
  return basis_apply(solve_r(u));
}

Vector ProjectionEngine::qt_apply(const Vector& v) const {
  require_dim(v.size(), n(), "qt_apply");
  if (basis_.mode == BasisMode::explicit_q)
    return basis_.q_factor->transpose() * v;
  return solve_rt(basis_apply_transpose(v));
}

const Matrix& ProjectionEngine::gram_q() const {
  std::call_once(gram_once_, [this] {
    Matrix q(n(), l());
    Vector e = Vector::Zero(l());
    for (Index j = 0; j < l(); ++j) {
      e[j] = 1.0;
      q.col(j) = q_apply(e);
      e[j] = 0.0;
    }
    gram_q_ = q.transpose() * q;
    gram_q_ = 0.5 * (gram_q_ + gram_q_.transpose());
  });
  return gram_q_;
}

const Matrix& ProjectionEngine::basis_product() const {
  std::call_once(product_once_, [this] {
    if (product_cached_) return;
    if (basis_.mode == BasisMode::explicit_q) {
      basis_product_ = *basis_.q_factor * basis_.r;
    } else {
      basis_product_ = op_.apply(basis_.omega);
    }
  });
  return basis_product_;
}

double ProjectionEngine::orthogonality_measure() const {
  std::call_once(measure_once_, [this] {
    const Matrix& g = gram_q();
    Eigen::SelfAdjointEigenSolver<Matrix> es(
        Matrix(Matrix::Identity(l(), l()) - g), Eigen::EigenvaluesOnly);
    measure_ = es.eigenvalues().cwiseAbs().maxCoeff();
  });
  return measure_;
}

Vector ProjectionEngine::coeffs(const Vector& u) const {
  Vector c = qt_apply(u);
  switch (config_.refinement) {
    case Refinement::none:
      return c;
    case Refinement::neumann:
      // T = 2I - Q^T Q.
      return Vector(2.0 * c - gram_q() * c);
    case Refinement::iterative: {
      Vector v = c;
      for (int i = 1; i < std::max(1, config_.refine_iters); ++i)
        v += qt_apply(Vector(u - q_apply(v)));
      return v;
    }
  }
  return c;
}

Vector ProjectionEngine::project(const Vector& u) const {
  require_dim(u.size(), n(), "project");
  return q_apply(coeffs(u));
}

Vector ProjectionEngine::complement(const Vector& u) const {
  return complement(u, config_.reorthogonalize);
}

Vector ProjectionEngine::complement(const Vector& u, bool reorthogonalize) const {
  Vector w = u - project(u);
  if (reorthogonalize) w -= project(w);
  return w;
}

Vector ProjectionEngine::ainv_project(const Vector& u) const {
  require_dim(u.size(), n(), "ainv_project");
  return basis_.omega * solve_r(coeffs(u));
}

Vector ProjectionEngine::ainv_project_refined(const Vector& u) const {
  Vector c = qt_apply(u);
  c = 2.0 * c - gram_q() * c;
  return basis_.omega * solve_r(c);
}

LsqConfig make_newton_sketch_config(const ProjectionEngine& engine,
                                    const SketchOp& theta) {
  LsqConfig cfg;
  cfg.mode = LsqConfig::Mode::newton_sketch;
  Matrix s(theta.rows(), engine.l());
  Vector e = Vector::Zero(engine.l());
  for (Index j = 0; j < engine.l(); ++j) {
    e[j] = 1.0;
    s.col(j) = theta.apply(engine.basis_apply(e));
    e[j] = 0.0;
  }
  cfg.d_matrix = s.transpose() * s;
  cfg.d_matrix = 0.5 * (cfg.d_matrix + cfg.d_matrix.transpose());
  return cfg;
}

namespace {

/// Plain CG on the l x l system D z = g; the factorization-free inner route.
Vector inner_cg_solve(const Matrix& d, const Vector& g, int max_iters,
                      double tol) {
  Vector z = Vector::Zero(g.size());
  Vector r = g;
  Vector p = r;
  double rr = r.squaredNorm();
  const double stop = tol * tol * rr;
  for (int it = 0; it < max_iters && rr > stop; ++it) {
    Vector q = d * p;
    const double pq = p.dot(q);
    if (pq <= 0.0) break;
    const double alpha = rr / pq;
    z += alpha * p;
    r -= alpha * q;
    const double rr_new = r.squaredNorm();
    p = r + (rr_new / rr) * p;
    rr = rr_new;
  }
  return z;
}

}  // namespace

LsqResult newton_sketch_lstsq(const ProjectionEngine& engine,
                              const LsqConfig& lsq, const Vector& u) {
  require_dim(u.size(), engine.n(), "newton_sketch_lstsq");
  LsqResult out;
  out.v = Vector::Zero(engine.l());
  const Vector g0 = engine.basis_apply_transpose(u);
  const double g0n = g0.norm();
  if (g0n == 0.0) {
    out.converged = true;
    return out;
  }
  Matrix d = lsq.d_matrix;
  if (lsq.mode == LsqConfig::Mode::second_level_preconditioned) {
    // D from the second-level factor: R_sk^T R_sk (or R^T R when absent).
    const Matrix& r = engine.basis().r_sk ? *engine.basis().r_sk : engine.basis().r;
    d = r.transpose() * r;
  }
  if (d.rows() != engine.l())
    throw ConfigError("newton_sketch_lstsq: d_matrix has wrong dimension");
  int fallback = 0;
  Matrix d_chol;
  if (!lsq.inner_cg) d_chol = cholesky_with_fallback(d, &fallback);

  for (int it = 0; it < lsq.max_refine_iters; ++it) {
    Vector residual = u - engine.basis_apply(out.v);
    Vector g = engine.basis_apply_transpose(residual);
    out.achieved_tol = g.norm() / g0n;
    if (out.achieved_tol <= lsq.tol) {
      out.converged = true;
      break;
    }
    Vector step;
    if (lsq.inner_cg) {
      step = inner_cg_solve(d, g, lsq.inner_cg_iters, 1e-12);
    } else {
      step = d_chol.transpose().triangularView<Eigen::Lower>().solve(g);
      step = d_chol.triangularView<Eigen::Upper>().solve(step);
    }
    // Exact quadratic line search along the sketched direction; keeps the
    // iteration contracting for any distortion below 1 and makes the
    // exact-Gram case terminate in a single step.
    Vector w = engine.basis_apply(step);
    const double wn2 = w.squaredNorm();
    if (wn2 == 0.0) break;
    out.v += (g.dot(step) / wn2) * step;
    ++out.iters;
  }
  if (!out.converged) {
    Vector g = engine.basis_apply_transpose(Vector(u - engine.basis_apply(out.v)));
    out.achieved_tol = g.norm() / g0n;
    out.converged = out.achieved_tol <= lsq.tol;
  }
  return out;
}

}  // namespace randrand
