// bench_cli: experiment harness around the deflation-preconditioned solvers.
//
// Subcommands:
//   solve           one system: build, solve, report JSON + residual CSV
//   sweep           grid experiment over (matrix, method, l, q, seed) cells
//   spectrum        emit the eigenvalues (and optionally the matrix) of a model
//   precond-report  build-only diagnostics for one preconditioner

#include "randrand/harness.hpp"
#include "randrand/matrix_market.hpp"
#include "randrand/rng.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace fs = std::filesystem;
using namespace randrand;

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Vector make_rhs(const nlohmann::json& j, Index n, std::uint64_t seed) {
  const std::string kind = j.value("rhs", "gaussian");
  if (kind == "ones") return Vector::Ones(n);
  if (kind == "gaussian") {
    Vector b = gaussian_vector(n, mix_keys(seed, 0xb0b), 0);
    return b / b.norm();
  }
  // Anything else is a Matrix Market vector path.
  Matrix m = read_matrix_market(kind);
  if (m.cols() != 1 || m.rows() != n)
    throw ConfigError("rhs file must be an n x 1 matrix");
  return m.col(0);
}

void export_basis(const fs::path& dir, const DeflationBasis& basis) {
  fs::create_directories(dir);
  write_matrix_market((dir / "omega.mtx").string(), basis.omega);
  write_matrix_market((dir / "r.mtx").string(), basis.r);
}

PreparedSystem import_basis(const fs::path& dir, const SolveConfig& cfg,
                            const LinearOperator& a, double mu) {
  DeflationBasis basis;
  basis.omega = read_matrix_market((dir / "omega.mtx").string());
  basis.r = read_matrix_market((dir / "r.mtx").string());
  basis.mode = BasisMode::basisless;
  ShiftedOperator op_mu(a, mu);
  EngineConfig ecfg;
  ecfg.refinement = cfg.refinement ? *cfg.refinement : Refinement::neumann;
  ecfg.refine_iters = cfg.refine_iters;
  ecfg.reorthogonalize = cfg.reorthogonalize
                             ? *cfg.reorthogonalize
                             : (cfg.precond && *cfg.precond == PrecondKind::r_split);
  PreparedSystem sys;
  sys.engine =
      std::make_shared<const ProjectionEngine>(op_mu, std::move(basis), ecfg);
  if (!cfg.precond || *cfg.precond == PrecondKind::nystrom)
    throw ConfigError("--import-basis requires an engine-backed kind");
  BuildOptions opts;
  opts.power.max_iters = cfg.power_max_iters;
  opts.power.rel_tol = cfg.power_rel_tol;
  const long mv0 = a.matvec_count();
  sys.precond = build_preconditioner(
      *cfg.precond, sys.engine,
      cfg.tau_policy ? *cfg.tau_policy : default_tau_policy(*cfg.precond),
      mix_keys(cfg.seed, 0xb11d), opts);
  sys.build_matvecs = a.matvec_count() - mv0;
  return sys;
}

nlohmann::json estimates_to_json(const NormEstimates& est) {
  nlohmann::json j;
  auto put = [&](const char* key, double v) {
    if (v >= 0.0) j[key] = v;
  };
  put("e_norm", est.e_norm);
  put("f_est", est.f_est);
  put("pi_a_pia", est.pi_a_pia);
  put("ia_pi_a", est.ia_pi_a);
  put("proj_err", est.proj_err);
  put("c1", est.c1);
  put("c2", est.c2);
  put("ainv_pi", est.ainv_pi);
  put("pi_ainv_pi", est.pi_ainv_pi);
  return j;
}

int run_solve(const std::string& config_path, const std::string& out_dir,
              std::uint64_t seed_override, bool has_seed, Index dense_cap,
              const std::string& export_dir, const std::string& import_dir) {
  const std::string text = read_file(config_path);
  nlohmann::json j = nlohmann::json::parse(text);
  SolveConfig cfg = solve_config_from_json_text(text);
  if (has_seed) cfg.seed = seed_override;
  MatrixSource src = matrix_source_from_json_text(text);
  auto mat = instantiate_matrix_source(src, dense_cap);
  const double mu = j.value("mu", 0.0);
  Vector b = make_rhs(j, mat.n, cfg.seed);

  PreparedSystem sys;
  if (!import_dir.empty()) {
    sys = import_basis(import_dir, cfg, mat.op, mu);
  } else {
    sys = prepare_deflated_system(cfg, mat.op, mu);
  }
  auto [x, rep] = randrand_solve(cfg, mat.op, mu, b, sys);

  fs::create_directories(out_dir);
  if (!export_dir.empty() && sys.engine)
    export_basis(export_dir, sys.engine->basis());
  {
    std::ofstream out(fs::path(out_dir) / "solve_report.json");
    out << solve_report_to_json_text(rep) << "\n";
  }
  write_residual_trace_csv((fs::path(out_dir) / "residual_trace.csv").string(),
                           rep);
  write_matrix_market((fs::path(out_dir) / "solution.mtx").string(), Matrix(x));
  std::cout << (rep.converged ? "converged" : "NOT converged") << " in "
            << rep.iters << " iterations, relative residual "
            << rep.final_relative_residual << ", matvecs " << rep.matvecs_A
            << "\n";
  std::cout << "report: " << (fs::path(out_dir) / "solve_report.json").string()
            << "\n";
  return rep.converged ? 0 : 3;
}

int run_sweep(const std::string& config_path, const std::string& out_dir,
              std::uint64_t seed_override, bool has_seed, Index dense_cap,
              bool has_cap, int threads, bool has_threads) {
  ExperimentConfig cfg = experiment_config_from_json_text(read_file(config_path));
  if (has_seed) cfg.seed = seed_override;
  if (has_cap) cfg.dense_cap = dense_cap;
  if (has_threads) cfg.threads = threads;
  auto report = run_experiment(cfg, out_dir);
  std::cout << report.rows.size() << " cells, " << report.failed_cells
            << " failed\n";
  for (const auto& f : report.output_files) std::cout << f << "\n";
  return 0;
}

int run_spectrum(const std::string& config_path, const std::string& out_dir) {
  const std::string text = read_file(config_path);
  nlohmann::json j = nlohmann::json::parse(text);
  MatrixSource src = matrix_source_from_json_text(text);
  if (!src.spectrum) throw ConfigError("spectrum subcommand needs a spectrum model");
  fs::create_directories(out_dir);
  auto lambda = model_eigenvalues(*src.spectrum);
  {
    std::ofstream out(fs::path(out_dir) / "eigenvalues.csv");
    out << "index,lambda\n";
    out.precision(17);
    for (std::size_t i = 0; i < lambda.size(); ++i)
      out << i + 1 << "," << lambda[i] << "\n";
  }
  if (j.value("emit_matrix", false)) {
    auto gen = gen_spectrum(*src.spectrum);
    write_matrix_market((fs::path(out_dir) / "matrix.mtx").string(), gen.a);
  }
  std::cout << "wrote " << (fs::path(out_dir) / "eigenvalues.csv").string()
            << "\n";
  return 0;
}

int run_precond_report(const std::string& config_path, const std::string& out_dir,
                       std::uint64_t seed_override, bool has_seed,
                       Index dense_cap, const std::string& export_dir) {
  const std::string text = read_file(config_path);
  nlohmann::json j = nlohmann::json::parse(text);
  SolveConfig cfg = solve_config_from_json_text(text);
  if (has_seed) cfg.seed = seed_override;
  if (!cfg.precond) throw ConfigError("precond-report requires a preconditioner kind");
  MatrixSource src = matrix_source_from_json_text(text);
  auto mat = instantiate_matrix_source(src, dense_cap);
  const double mu = j.value("mu", 0.0);

  PreparedSystem sys = prepare_deflated_system(cfg, mat.op, mu);
  const Preconditioner& p = *sys.precond;

  nlohmann::json out;
  out["kind"] = to_string(p.kind);
  out["l"] = cfg.l;
  out["q"] = cfg.q;
  out["tau"] = p.tau;
  out["rho"] = p.rho;
  out["estimates"] = estimates_to_json(p.estimates);
  out["build_matvecs"] = sys.build_matvecs;
  try {
    out["cond_bound"] = cond_bound(p.kind, p.estimates, p.tau, p.rho);
  } catch (const ConfigError&) {
  }
  if (mat.dense) {
    out["cond_unpreconditioned"] = exact_cond(*mat.dense, mu);
    out["cond_exact"] = exact_cond(*mat.dense, mu, p);
  }
  fs::create_directories(out_dir);
  if (!export_dir.empty() && sys.engine)
    export_basis(export_dir, sys.engine->basis());
  const auto path = fs::path(out_dir) / "precond_report.json";
  {
    std::ofstream f(path);
    f << out.dump(2) << "\n";
  }
  std::cout << out.dump(2) << "\n";
  std::cout << "report: " << path.string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"randomized range-deflation preconditioning bench"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir = ".";
  std::uint64_t seed = 0;
  Index dense_cap = 2000;
  int threads = 1;
  std::string export_dir, import_dir;

  auto add_common = [&](CLI::App* cmd, bool with_threads) {
    cmd->add_option("--config", config_path, "JSON configuration file")
        ->required();
    cmd->add_option("--out", out_dir, "output directory");
    cmd->add_option("--seed", seed, "seed override");
    cmd->add_option("--dense-cap", dense_cap,
                    "largest n for dense condition-number oracles");
    if (with_threads)
      cmd->add_option("--threads", threads, "worker threads for sweep cells");
  };

  auto* solve_cmd = app.add_subcommand("solve", "solve one linear system");
  add_common(solve_cmd, false);
  solve_cmd->add_option("--export-basis", export_dir,
                        "write omega.mtx / r.mtx for recycling");
  solve_cmd->add_option("--import-basis", import_dir,
                        "reuse omega.mtx / r.mtx from a previous run");

  auto* sweep_cmd = app.add_subcommand("sweep", "grid experiment");
  add_common(sweep_cmd, true);

  auto* spectrum_cmd =
      app.add_subcommand("spectrum", "emit generated eigenvalues");
  add_common(spectrum_cmd, false);

  auto* report_cmd =
      app.add_subcommand("precond-report", "build-only diagnostics");
  add_common(report_cmd, false);
  report_cmd->add_option("--export-basis", export_dir,
                         "write omega.mtx / r.mtx for recycling");

  CLI11_PARSE(app, argc, argv);

  try {
    if (solve_cmd->parsed())
      return run_solve(config_path, out_dir, seed, solve_cmd->count("--seed") > 0,
                       dense_cap, export_dir, import_dir);
    if (sweep_cmd->parsed())
      return run_sweep(config_path, out_dir, seed, sweep_cmd->count("--seed") > 0,
                       dense_cap, sweep_cmd->count("--dense-cap") > 0, threads,
                       sweep_cmd->count("--threads") > 0);
    if (spectrum_cmd->parsed()) return run_spectrum(config_path, out_dir);
    if (report_cmd->parsed())
      return run_precond_report(config_path, out_dir, seed,
                                report_cmd->count("--seed") > 0, dense_cap,
                                export_dir);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
