#pragma once

#include "randrand/projector.hpp"

#include <memory>
#include <string>

namespace randrand {

enum class PrecondKind { r_right, r_left, r_split, c, g, nystrom };

/// Spectral quantities estimated at build time; negative entries are unset.
struct NormEstimates {
  double e_norm = -1.0;      // ||(I-Pi) A_mu (I-Pi)||
  double f_est = -1.0;       // estimate of 1/lambda_min(A_mu)
  double pi_a_pia = -1.0;    // lambda_max(Pi A_mu Pi A_mu^{-1} Pi)
  double ia_pi_a = -1.0;     // ||A_mu^{-1} Pi A_mu||
  double proj_err = -1.0;    // ||(I-Pi) A_mu||
  double c1 = -1.0;          // refined-bound cross term (upper bound)
  double c2 = -1.0;
  double ainv_pi = -1.0;     // ||A_mu^{-1} Pi||
  double pi_ainv_pi = -1.0;  // ||Pi A_mu^{-1} Pi||
};

struct TauPolicy {
  enum class Type {
    r_enorm,
    c_fixed_rho,
    c_optimal_rho,
    c_bound_min_d2,
    c_nys_inv_norm,
    c_nys_smallest_eig,
    g_fixed_rho,
    g_optimal_rho,
  };
  Type type = Type::r_enorm;
  double rho = 1.0;  // used by the fixed-rho policies
};

struct TauSelection {
  double tau = 0.0;
  double rho = 0.0;
};

/// Applies the cited coefficient formula for the chosen policy. Missing
/// estimate fields raise ConfigError naming the field.
TauSelection select_tau(PrecondKind kind, const TauPolicy& policy,
                        const NormEstimates& est);

enum class BoundFormula { r_eq34, c_eq38, c_refined_d2, g_eq312 };

double cond_bound_formula(BoundFormula formula, const NormEstimates& est,
                          double tau, double rho);
/// Default bound per kind: r -> Prop 3.1 form, c -> the eigen-band bound
/// (refined form when the cross terms are available), g -> the sigma-band bound.
double cond_bound(PrecondKind kind, const NormEstimates& est, double tau,
                  double rho);

struct BuildOptions {
  PowerIterOptions power;          // norm-estimation power iterations
  NormEstimates overrides;         // preset fields (>= 0) skip estimation
  bool compute_cross_terms = false;  // c1/c2 upper bounds (forced for bound-min)
};

/// One of the deflation preconditioners, immutable after build.
struct Preconditioner {
  PrecondKind kind = PrecondKind::r_right;
  std::shared_ptr<const ProjectionEngine> engine;  // unset for nystrom
  double tau = 1.0;
  double rho = 1.0;
  Matrix g_core;  // c: R^{-T}(Omega^T A_mu Omega)R^{-1}; g: its sqrt sibling
  NormEstimates estimates;
  long build_matvecs = 0;

  // nystrom baseline state
  Matrix nys_y;    // A * Omega
  Matrix nys_c;    // upper Cholesky factor of Omega^T A^2 Omega + mu Omega^T A Omega
  double nys_mu = 0.0;

  Index n() const { return engine ? engine->n() : nys_y.rows(); }
};

Preconditioner build_preconditioner(PrecondKind kind,
                                    std::shared_ptr<const ProjectionEngine> engine,
                                    const TauPolicy& policy, std::uint64_t seed,
                                    const BuildOptions& options = {});

/// Basis-less Nystrom baseline P = mu^{-1}(I - A Omega C^{-1} C^{-T} Omega^T A),
/// the inverse of the mu-regularized Nystrom approximation of A. Requires mu > 0.
Preconditioner build_nystrom_baseline(const LinearOperator& a, const Matrix& omega,
                                      double mu);

/// P u for kinds {c, g, nystrom}; P^T b for r_left.
Vector apply_preconditioner(const Preconditioner& p, const Vector& u);
Vector apply_preconditioner(const Preconditioner& p, const Vector& u,
                            bool reorthogonalize);

/// The deflated operator for the R variants: (I-Pi) A_mu (I-Pi) u + tau Pi u
/// for r_right, (I-Pi) A_mu u for r_split (valid when u = (I-Pi) u).
Vector apply_preconditioned_operator(const Preconditioner& p, const Vector& u);
Vector apply_preconditioned_operator(const Preconditioner& p, const Vector& u,
                                     bool reorthogonalize);

/// Maps the deflated-system solution y back to x with A_mu x ~ b. The refined
/// coefficient transform is applied once here. For kinds solved in place
/// (c, g, nystrom, r_left) this returns y unchanged.
Vector recover_solution(const Preconditioner& p, const Vector& y, const Vector& b);

/// Split-variant recovery needs the right-hand side of the original system.
Vector recover_solution_split(const Preconditioner& p, const Vector& y,
                              const Vector& b);

const char* to_string(PrecondKind kind);
PrecondKind precond_kind_from_string(const std::string& s);
const char* to_string(TauPolicy::Type type);
TauPolicy::Type tau_policy_from_string(const std::string& s);

/// Symmetric psd square root with negative eigenvalues clipped to zero.
Matrix sqrt_psd(const Matrix& m);

}  // namespace randrand
