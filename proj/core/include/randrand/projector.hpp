#pragma once

#include "randrand/operator.hpp"
#include "randrand/orthogonalize.hpp"
#include "randrand/types.hpp"

#include <memory>
#include <mutex>
#include <optional>

namespace randrand {

enum class Refinement { none, neumann, iterative };

struct EngineConfig {
  Refinement refinement = Refinement::none;
  int refine_iters = 2;       // steps of the coefficient recurrence
  bool reorthogonalize = false;
  int reorth_stride = 1;      // apply the doubled complement every k-th call
};

/// Orthogonal projector onto range(A_mu * Omega) and the companion map
/// A_mu^{-1} * Pi realized through (Omega, R); immutable and reentrant.
class ProjectionEngine {
 public:
  ProjectionEngine(ShiftedOperator op_mu, DeflationBasis basis,
                   EngineConfig config = {},
                   std::optional<Matrix> cached_basis_product = std::nullopt);

  Index n() const { return op_.n(); }
  Index l() const { return basis_.r.cols(); }
  const ShiftedOperator& op() const { return op_; }
  const DeflationBasis& basis() const { return basis_; }
  const EngineConfig& config() const { return config_; }

  /// Q u for coefficient vectors u (length l).
  Vector q_apply(const Vector& u) const;
  /// Q^T v for full vectors v (length n).
  Vector qt_apply(const Vector& v) const;
  /// (A_mu Omega) u.
  Vector basis_apply(const Vector& u) const;
  /// (A_mu Omega)^T v.
  Vector basis_apply_transpose(const Vector& v) const;

  /// Pi u, with the configured refinement.
  Vector project(const Vector& u) const;
  /// (I - Pi) u; doubled when reorthogonalization is requested.
  Vector complement(const Vector& u) const;
  Vector complement(const Vector& u, bool reorthogonalize) const;

  /// Omega R^{-1} Q^T u; satisfies A_mu * ainv_project(u) = Pi u without ever
  /// forming an inverse of A_mu.
  Vector ainv_project(const Vector& u) const;
  /// ainv_project with the Neumann-refined coefficient transform, used once at
  /// solution recovery.
  Vector ainv_project_refined(const Vector& u) const;

  /// ||I - Q^T Q||_2 of the realized factor (computed once, cached).
  double orthogonality_measure() const;

  /// A_mu * Omega as a dense block (computed once, cached). Explicit bases
  /// reconstruct it as Q * R without matvecs.
  const Matrix& basis_product() const;

 private:
  Vector coeffs(const Vector& u) const;          // refinement-aware Q^† u
  const Matrix& gram_q() const;                  // Q^T Q, cached
  Vector solve_r(const Vector& u) const;         // R^{-1} u
  Vector solve_rt(const Vector& u) const;        // R^{-T} u

  ShiftedOperator op_;
  DeflationBasis basis_;
  EngineConfig config_;

  mutable std::once_flag gram_once_;
  mutable Matrix gram_q_;
  mutable std::once_flag product_once_;
  mutable Matrix basis_product_;
  mutable std::once_flag measure_once_;
  mutable double measure_ = -1.0;
  bool product_cached_ = false;
};

struct LsqConfig {
  enum class Mode { second_level_preconditioned, newton_sketch };
  Mode mode = Mode::newton_sketch;
  Matrix d_matrix;            // (Theta A_mu Omega)^T (Theta A_mu Omega)
  int max_refine_iters = 100;
  double tol = 1e-12;
  bool inner_cg = false;      // factorization-free route for D^{-1}
  int inner_cg_iters = 200;
};

/// Builds the Gram of the sketched basis for the Newton-sketch iteration.
LsqConfig make_newton_sketch_config(const ProjectionEngine& engine,
                                    const SketchOp& theta);

struct LsqResult {
  Vector v;
  int iters = 0;
  bool converged = false;
  double achieved_tol = 0.0;  // relative gradient norm at exit
};

/// Iteratively refined least-squares solve v ~ (A_mu Omega)^† u:
/// v <- v + D^{-1} (A_mu Omega)^T (u - A_mu Omega v).
LsqResult newton_sketch_lstsq(const ProjectionEngine& engine, const LsqConfig& lsq,
                              const Vector& u);

}  // namespace randrand
