#pragma once

#include "randrand/solvers.hpp"
#include "randrand/spectrum.hpp"

#include <optional>
#include <string>
#include <vector>

namespace randrand {

/// Dense realization of the map a Krylov solver would see: the deflated
/// operator for the R variants, the preconditioner itself for the others.
Matrix materialize_preconditioned_operator(const Preconditioner& p);
Matrix materialize_preconditioner(const Preconditioner& p);

/// cond(A_mu) of the unpreconditioned operator (ratio of extreme singular values).
double exact_cond(const Matrix& a_dense, double mu);

/// Exact condition number of the realized preconditioned system: eigenvalue
/// ratio of the materialized deflated map for R kinds; eigenvalue ratio of
/// P^{1/2} A_mu P^{1/2} (eigen square root of the materialized P) for the spd
/// kinds; singular-value ratio of P A_mu for G on indefinite operators.
/// A materialized P that is not numerically psd raises an error naming the
/// defect magnitude.
double exact_cond(const Matrix& a_dense, double mu, const Preconditioner& p);

struct MatrixSource {
  std::string name;
  std::optional<SpectrumModel> spectrum;
  std::string mtx_path;         // Matrix Market input
  std::string points_path;      // RBF kernel input
  double kernel_gamma = 1.0;
  Index block_size = 256;
};

struct MethodSpec {
  std::string kind = "r_right";  // preconditioner kind or "none"
  std::optional<TauPolicy> policy;
  SolverKind solver = SolverKind::minres;
  BasisRoute basis = BasisRoute::explicit_qr;
  SketchKind sketch = SketchKind::gaussian;
  int gamma = 0;
};

struct ExperimentConfig {
  std::vector<MatrixSource> matrices;
  std::vector<MethodSpec> methods;
  std::vector<Index> l_values;
  std::vector<int> q_values;
  int seeds = 1;
  std::uint64_t seed = 0;
  double mu = 0.0;
  double tol = 1e-10;
  long max_iters = 2000;
  Index dense_cap = 2000;
  int threads = 1;
  bool emit_traces = false;
};

struct ExperimentRow {
  std::string matrix;
  std::string kind;
  std::string policy;
  std::string solver;
  std::string basis;
  Index l = 0;
  int q = 0;
  int seed_index = 0;
  double mu = 0.0;
  Index n = 0;
  double cond_unprec = -1.0;
  double cond_exact = -1.0;
  double cond_bound = -1.0;
  double proj_err = -1.0;
  double e_norm = -1.0;
  double tau = -1.0;
  double rho = -1.0;
  long iters = 0;
  long matvecs = 0;
  long build_matvecs = 0;
  bool converged = false;
  std::string status = "ok";  // per-cell failures recorded, not fatal
  double wall_ms = 0.0;
};

struct ExperimentReport {
  ExperimentConfig config;
  std::vector<ExperimentRow> rows;
  std::vector<std::string> output_files;
  int failed_cells = 0;
};

/// The stable results.csv header (golden-file tested).
std::string experiment_csv_header();

ExperimentConfig experiment_config_from_json_text(const std::string& text);

struct InstantiatedMatrix {
  LinearOperator op;
  std::optional<Matrix> dense;  // present when n fits under the dense cap
  Index n = 0;
};

/// Realizes a matrix source: synthetic spectrum, Matrix Market file, or an
/// RBF kernel operator over a points file.
InstantiatedMatrix instantiate_matrix_source(const MatrixSource& src,
                                             Index dense_cap);
MatrixSource matrix_source_from_json_text(const std::string& text);

/// Runs every (matrix, method, l, q, seed) cell, deterministically per cell
/// seed and optionally across a thread pool, and writes results.csv plus
/// report.json under out_dir.
ExperimentReport run_experiment(const ExperimentConfig& config,
                                const std::string& out_dir);

std::string experiment_report_to_json_text(const ExperimentReport& report);

}  // namespace randrand
