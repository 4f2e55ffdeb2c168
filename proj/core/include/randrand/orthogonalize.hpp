#pragma once

#include "randrand/operator.hpp"
#include "randrand/sketch.hpp"
#include "randrand/types.hpp"

#include <functional>
#include <optional>
#include <stdexcept>

namespace randrand {

/// Cholesky hit a non-positive pivot; carries the failing pivot index.
class BreakdownError : public std::runtime_error {
 public:
  BreakdownError(int pivot, double value)
      : std::runtime_error("cholesky breakdown at pivot " + std::to_string(pivot) +
                           " (value " + std::to_string(value) + ")"),
        pivot_index(pivot),
        pivot_value(value) {}
  int pivot_index;
  double pivot_value;
};

/// Upper-triangular R with W = R^T R and non-negative diagonal.
/// Throws BreakdownError on a non-positive pivot.
Matrix cholesky_upper(const Matrix& w);

/// Appendix-style rescue: chol(W), retried with W + alpha*I for the smallest
/// alpha in {1e-14, ..., 1e-1} * ||W|| that factorizes. A zero W yields the
/// identity transform. Reports the exponent used (0 if no shift was needed).
Matrix cholesky_with_fallback(const Matrix& w, int* fallback_exponent = nullptr);

struct QrFactors {
  Matrix q;
  Matrix r;                    // non-negative diagonal
  bool rank_deficient = false; // near-zero diagonal entries observed
};

/// Householder QR of a tall matrix with the diagonal-sign convention fixed.
QrFactors explicit_qr(const Matrix& b);

/// R = chol(Omega^T A_mu^2 Omega), Gram assembled column by column from right
/// to left: exactly 2l shifted matvecs.
Matrix qless_chol_qr(const ShiftedOperator& op_mu, const Matrix& omega);

struct PrecondQlessResult {
  Matrix r;      // transform for A_mu * Omega * t (t = identity when not truncated)
  Matrix r_sk;   // R factor of the sketched basis
  Matrix t;      // l x rank right-singular-vector block
  bool truncated = false;
  Index rank = 0;
};

/// Second-level preconditioned Q-less Cholesky QR. Sketches A_mu*Omega with
/// theta, orthogonalizes the sketch, then factorizes the preconditioned Gram.
/// Sketched singular values below 1e-12 * sigma_max trigger truncation.
PrecondQlessResult qless_precond_chol_qr(const ShiftedOperator& op_mu,
                                         const Matrix& omega,
                                         const SketchOp& theta);

/// Shift-independent Gram blocks of (A, Omega); R factors for any mu derive
/// from these without further matvecs.
struct RecyclePack {
  Matrix g_aa;  // Omega^T A^T A Omega
  Matrix g_a;   // Omega^T A Omega
  Matrix g_i;   // Omega^T Omega
  double alpha = 0.0;
  std::optional<Matrix> r_alpha;  // factor at shift alpha (stabilized path)
  long build_matvecs = 0;
};

RecyclePack make_recycle_pack(const LinearOperator& a, const Matrix& omega,
                              bool with_alpha = true, std::uint64_t seed = 0);

/// R = chol(g_aa + 2 mu g_a + mu^2 g_i); no matvecs with A. When r_alpha is
/// present and 0 <= mu <= alpha, the shifted-Cholesky route
/// R = chol(R_a^{-T} W R_a^{-1}) * R_a is used instead.
Matrix recycle_factor(const RecyclePack& pack, double mu);

/// ||I - Q^T Q||_2 for Q given through coefficient->vector applications.
/// probes = 0 computes the exact l x l eigenvalue; probes > 0 runs that many
/// power iterations on the defect matrix instead.
double orthogonality_measure(const std::function<Vector(const Vector&)>& q_apply,
                             Index n, Index l, int probes = 0);
double orthogonality_measure(const Matrix& q);

enum class BasisMode { explicit_q, basisless };

/// The pair (Omega, R) defining range(A_mu * Omega), with an optional explicit
/// orthonormal factor and recycling precomputations.
struct DeflationBasis {
  Matrix omega;
  Matrix r;
  std::optional<Matrix> q_factor;
  std::optional<Matrix> r_sk;
  BasisMode mode = BasisMode::explicit_q;
  bool truncated = false;
  std::optional<RecyclePack> recycle;
};

DeflationBasis make_explicit_basis(const ShiftedOperator& op_mu, Matrix omega);
DeflationBasis make_basisless_basis(const ShiftedOperator& op_mu, Matrix omega);
DeflationBasis make_basisless_precond_basis(const ShiftedOperator& op_mu,
                                            Matrix omega, const SketchOp& theta);

}  // namespace randrand
