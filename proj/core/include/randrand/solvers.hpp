#pragma once

#include "randrand/preconditioner.hpp"

#include <functional>
#include <optional>
#include <utility>
#include <vector>

namespace randrand {

enum class SolverKind { cg, minres };
enum class BasisRoute { explicit_qr, qless, qless_precond };

struct SolveConfig {
  SolverKind solver = SolverKind::minres;
  std::optional<PrecondKind> precond = PrecondKind::r_right;  // nullopt: plain solver
  SketchKind sketch_kind = SketchKind::gaussian;
  Index l = 0;
  int gamma = 0;                 // sparse sketches
  std::uint64_t seed = 0;
  int q = 0;
  std::optional<TauPolicy> tau_policy;  // default policy per kind when unset
  BasisRoute basis = BasisRoute::explicit_qr;
  SketchKind theta_kind = SketchKind::gaussian;
  Index theta_l = 0;             // 0 picks min(n, 4l + 8)
  double tol = 1e-10;
  long max_iters = 1000;
  double restart_eta = 1e-2;
  std::optional<Refinement> refinement;  // unset: route-dependent default
  int refine_iters = 2;
  std::optional<bool> reorthogonalize;   // unset: on for r_split only
  int reorth_stride = 1;
  int power_max_iters = 30;
  double power_rel_tol = 1e-2;

  void validate() const;
};

struct SolveReport {
  long iters = 0;
  std::vector<double> residual_history;  // solver-tracked ||r||/||b|| per iteration
  std::vector<long> restarts;            // iteration indices of restarts
  long matvecs_A = 0;
  bool converged = false;
  bool stagnated = false;
  bool breakdown = false;
  double final_relative_residual = -1.0;  // true residual, recomputed
  double t_bound = -1.0;                  // high-probability iteration bound
  double tau = -1.0;
  double rho = -1.0;
  long build_matvecs = 0;
  double wall_ms = 0.0;
};

using OpFn = std::function<Vector(const Vector&)>;

/// Standard (preconditioned) CG. Stops at relative recurrence residual <= tol.
/// A non-positive curvature p'Ap flags breakdown.
std::pair<Vector, SolveReport> cg(const OpFn& op, const Vector& b,
                                  const std::optional<OpFn>& precond,
                                  const Vector& x0, double tol, long max_iters);

/// Lanczos-based MINRES with an spd preconditioner; the tracked residual norm
/// is monotone. Same stopping contract as cg.
std::pair<Vector, SolveReport> minres(const OpFn& op, const Vector& b,
                                      const std::optional<OpFn>& precond,
                                      const Vector& x0, double tol,
                                      long max_iters);

std::pair<Vector, SolveReport> cg(const ShiftedOperator& op, const Vector& b,
                                  double tol, long max_iters);
std::pair<Vector, SolveReport> minres(const ShiftedOperator& op, const Vector& b,
                                      double tol, long max_iters);

/// Sketch, basis, engine and preconditioner for one solve, built once and
/// reusable across right-hand sides or for condition-number diagnostics.
struct PreparedSystem {
  std::shared_ptr<const ProjectionEngine> engine;  // unset for nystrom / none
  std::optional<Preconditioner> precond;
  long build_matvecs = 0;
};

PreparedSystem prepare_deflated_system(const SolveConfig& config,
                                       const LinearOperator& a, double mu);

/// Full deflation-preconditioned solve: sketch, basis, preconditioner, Krylov
/// iterations with restarting every restart_eta residual reduction, recovery.
/// On success ||A_mu x - b|| / ||b|| <= tol with the true residual.
std::pair<Vector, SolveReport> randrand_solve(const SolveConfig& config,
                                              const LinearOperator& a, double mu,
                                              const Vector& b);
std::pair<Vector, SolveReport> randrand_solve(const SolveConfig& config,
                                              const LinearOperator& a, double mu,
                                              const Vector& b,
                                              const PreparedSystem& system);

struct AdaptiveResult {
  DeflationBasis basis;
  Index l_final = 0;
  double proj_err = -1.0;
  bool met_threshold = false;
  bool stagnated = false;
  bool mu_zero_warning = false;
  std::vector<std::pair<Index, double>> trace;  // (l, proj_err) per round
};

/// Grows the sketch dimension by `growth` until the estimated projection error
/// ||(I - Pi) A_mu|| falls below f * (n / l_max)^(1/(2q+2)) * |mu|, stagnates
/// (< 10% relative improvement), or l reaches l_max. Previously drawn sketch
/// columns and their subspace-iterated images are reused, not redrawn.
AdaptiveResult adaptive_sketch_dim(const ShiftedOperator& op_mu, double f,
                                   Index l0, double growth, Index l_max, int q,
                                   std::uint64_t seed,
                                   SketchKind kind = SketchKind::gaussian);

struct ShiftSolveEntry {
  double mu = 0.0;
  bool built = false;       // preconditioner construction succeeded
  std::string error;        // per-shift failure description
  Vector x;
  SolveReport report;
};

struct MultiShiftResult {
  std::vector<ShiftSolveEntry> entries;
  long basis_matvecs = 0;   // A-matvecs spent on sketch + Gram pack, shift-independent
  RecyclePack pack;
};

/// Solves (A + mu I) x = b for every shift with one sketch and one Gram pack;
/// per-shift factors come from recycle_factor with zero additional A-matvecs.
MultiShiftResult multi_shift_solve(const LinearOperator& a, const Vector& b,
                                   const std::vector<double>& shifts,
                                   const SketchOp& sketch, int q,
                                   const SolveConfig& config);

struct IterationBound {
  double t = 0.0;             // sqrt(proj_err / lambda_min_mu)
  double t_bound_hp = 0.0;    // 1 + (3240 n/d)^(1/(4q+4))
  double t_bound_expect = 0.0;  // 1 + (148 n/d)^(1/(4q+4))
};

IterationBound iteration_bound_report(Index n, double d, int q, double proj_err,
                                      double lambda_min_mu);

/// Default tau policy for a kind: R uses the ||E|| estimate with rho = 1,
/// C minimizes the refined bound, G fixes rho = 0.5.
TauPolicy default_tau_policy(PrecondKind kind);

const char* to_string(SolverKind kind);
SolverKind solver_kind_from_string(const std::string& s);
const char* to_string(BasisRoute route);
BasisRoute basis_route_from_string(const std::string& s);

/// JSON (de)serialization for the CLI surfaces.
SolveConfig solve_config_from_json_text(const std::string& text);
std::string solve_report_to_json_text(const SolveReport& report);
/// CSV residual trace: "iter,rel_residual,restarted".
void write_residual_trace_csv(const std::string& path, const SolveReport& report);

}  // namespace randrand
