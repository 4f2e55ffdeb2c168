#include "randrand/harness.hpp"

#include "randrand/kernel.hpp"
#include "randrand/matrix_market.hpp"
#include "randrand/rng.hpp"

#include <nlohmann/json.hpp>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <atomic>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

namespace randrand {

Matrix materialize_preconditioned_operator(const Preconditioner& p) {
  const Index n = p.n();
  Matrix out(n, n);
  Vector e = Vector::Zero(n);
  const bool r_kind = p.kind == PrecondKind::r_right ||
                      p.kind == PrecondKind::r_left ||
                      p.kind == PrecondKind::r_split;
  for (Index j = 0; j < n; ++j) {
    e[j] = 1.0;
    if (r_kind) {
      // All R variants share the deflated map E + tau Pi.
      Vector w = p.engine->complement(e);
      out.col(j) = p.engine->complement(p.engine->op().apply(w)) +
                   p.tau * p.engine->project(e);
    } else {
      out.col(j) = apply_preconditioner(p, e);
    }
    e[j] = 0.0;
  }
  return out;
}

Matrix materialize_preconditioner(const Preconditioner& p) {
  const Index n = p.n();
  Matrix out(n, n);
  Vector e = Vector::Zero(n);
  for (Index j = 0; j < n; ++j) {
    e[j] = 1.0;
    out.col(j) = apply_preconditioner(p, e);
    e[j] = 0.0;
  }
  return out;
}

double exact_cond(const Matrix& a_dense, double mu) {
  Matrix a_mu = a_dense + mu * Matrix::Identity(a_dense.rows(), a_dense.cols());
  a_mu = 0.5 * (a_mu + a_mu.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> es(a_mu, Eigen::EigenvaluesOnly);
  const Vector abs = es.eigenvalues().cwiseAbs();
  const double lo = abs.minCoeff();
  if (lo == 0.0) return std::numeric_limits<double>::infinity();
  return abs.maxCoeff() / lo;
}

double exact_cond(const Matrix& a_dense, double mu, const Preconditioner& p) {
  const Index n = a_dense.rows();
  require_dim(p.n(), n, "exact_cond");
  Matrix a_mu = a_dense + mu * Matrix::Identity(n, n);
  a_mu = 0.5 * (a_mu + a_mu.transpose());

  const bool r_kind = p.kind == PrecondKind::r_right ||
                      p.kind == PrecondKind::r_left ||
                      p.kind == PrecondKind::r_split;
  if (r_kind) {
    Matrix b = materialize_preconditioned_operator(p);
    b = 0.5 * (b + b.transpose());
    Eigen::SelfAdjointEigenSolver<Matrix> es(b, Eigen::EigenvaluesOnly);
    const Vector abs = es.eigenvalues().cwiseAbs();
    return abs.maxCoeff() / abs.minCoeff();
  }

  Matrix pm = materialize_preconditioner(p);
  pm = 0.5 * (pm + pm.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> es(pm);
  const double pmax = es.eigenvalues().cwiseAbs().maxCoeff();
  const double pmin = es.eigenvalues().minCoeff();
  if (pmin < -1e-10 * pmax)
    throw ConfigError("exact_cond: materialized preconditioner is not psd, "
                      "most negative eigenvalue " +
                      std::to_string(pmin));

  // Indefinite operator with the G kind: singular-value ratio of P A_mu.
  Eigen::SelfAdjointEigenSolver<Matrix> esa(a_mu, Eigen::EigenvaluesOnly);
  const bool indefinite = esa.eigenvalues().minCoeff() < 0.0;
  if (p.kind == PrecondKind::g && indefinite) {
    Eigen::JacobiSVD<Matrix> svd(pm * a_mu);
    const auto& sv = svd.singularValues();
    return sv(0) / sv(sv.size() - 1);
  }

  Vector d = es.eigenvalues();
  for (Index i = 0; i < d.size(); ++i) d[i] = d[i] > 0.0 ? std::sqrt(d[i]) : 0.0;
  Matrix phalf = es.eigenvectors() * d.asDiagonal() * es.eigenvectors().transpose();
  Matrix m = phalf * a_mu * phalf;
  m = 0.5 * (m + m.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> esm(m, Eigen::EigenvaluesOnly);
  const Vector abs = esm.eigenvalues().cwiseAbs();
  return abs.maxCoeff() / abs.minCoeff();
}

std::string experiment_csv_header() {
  return "matrix,kind,policy,solver,basis,l,q,seed,mu,n,cond_unprec,cond_exact,"
         "cond_bound,proj_err,e_norm,tau,rho,iters,matvecs,build_matvecs,"
         "converged,status,wall_ms";
}

namespace {

SpectrumModel spectrum_model_from_json(const nlohmann::json& j) {
  SpectrumModel m;
  m.n = j.at("n").get<Index>();
  if (j.contains("head")) m.head = j["head"].get<std::vector<double>>();
  if (j.contains("exp_head")) {
    const auto& h = j["exp_head"];
    m.head = exponential_head(h.value("count", 20), h.value("top", 1e6),
                              h.value("bottom", 1.0));
  }
  const std::string law = j.value("tail", "flat");
  if (law == "poly") {
    m.tail_law = TailLaw::poly;
    m.tail_alpha = j.value("tail_alpha", 0.5);
    m.tail_scale = j.value("tail_scale", 1.0);
  } else if (law == "step") {
    m.tail_law = TailLaw::step;
    for (const auto& s : j.at("steps"))
      m.steps.emplace_back(s.at(0).get<double>(), s.at(1).get<Index>());
  } else if (law == "flat") {
    m.tail_law = TailLaw::flat;
    m.flat_value = j.value("flat_value", 1.0);
  } else {
    throw ConfigError("unknown tail law: " + law);
  }
  m.spike_count = j.value("spike_count", Index(0));
  m.spike_decay = j.value("spike_decay", 0.5);
  m.flip_begin = j.value("flip_begin", Index(0));
  m.flip_end = j.value("flip_end", Index(0));
  m.seed = j.value("seed", std::uint64_t(0));
  return m;
}

}  // namespace

ExperimentConfig experiment_config_from_json_text(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text);
  ExperimentConfig cfg;
  for (const auto& m : j.value("matrices", nlohmann::json::array())) {
    MatrixSource src;
    src.name = m.value("name", "matrix");
    if (m.contains("spectrum")) src.spectrum = spectrum_model_from_json(m["spectrum"]);
    src.mtx_path = m.value("mtx", "");
    src.points_path = m.value("points", "");
    src.kernel_gamma = m.value("kernel_gamma", 1.0);
    src.block_size = m.value("block_size", Index(256));
    cfg.matrices.push_back(std::move(src));
  }
  for (const auto& m : j.value("methods", nlohmann::json::array())) {
    MethodSpec spec;
    spec.kind = m.value("kind", "r_right");
    if (m.contains("policy")) {
      TauPolicy tp;
      tp.type = tau_policy_from_string(m["policy"].value("type", "r_enorm"));
      tp.rho = m["policy"].value("rho", 1.0);
      spec.policy = tp;
    }
    spec.solver = solver_kind_from_string(m.value("solver", "minres"));
    spec.basis = basis_route_from_string(m.value("basis", "explicit"));
    spec.sketch = sketch_kind_from_string(m.value("sketch", "gaussian"));
    spec.gamma = m.value("gamma", 0);
    cfg.methods.push_back(std::move(spec));
  }
  cfg.l_values = j.value("l", std::vector<Index>{});
  cfg.q_values = j.value("q", std::vector<int>{0});
  cfg.seeds = j.value("seeds", 1);
  cfg.seed = j.value("seed", std::uint64_t(0));
  cfg.mu = j.value("mu", 0.0);
  cfg.tol = j.value("tol", 1e-10);
  cfg.max_iters = j.value("max_iters", long(2000));
  cfg.dense_cap = j.value("dense_cap", Index(2000));
  cfg.threads = j.value("threads", 1);
  cfg.emit_traces = j.value("emit_traces", false);
  return cfg;
}

InstantiatedMatrix instantiate_matrix_source(const MatrixSource& src,
                                             Index dense_cap) {
  if (src.spectrum) {
    auto gen = gen_spectrum(*src.spectrum);
    const Index n = gen.a.rows();
    std::optional<Matrix> dense;
    if (n <= dense_cap) dense = gen.a;
    const bool indefinite =
        *std::min_element(gen.eigenvalues.begin(), gen.eigenvalues.end()) < 0.0;
    return {LinearOperator::dense(std::move(gen.a),
                                  indefinite ? Definiteness::symmetric_indefinite
                                             : Definiteness::spd),
            std::move(dense), n};
  }
  if (!src.mtx_path.empty()) {
    Matrix a = read_matrix_market(src.mtx_path);
    const bool sym = a.isApprox(a.transpose(), 1e-13);
    std::optional<Matrix> dense;
    if (a.rows() <= dense_cap) dense = a;
    return {LinearOperator::dense(a, sym ? Definiteness::symmetric_indefinite
                                         : Definiteness::general),
            std::move(dense), a.rows()};
  }
  if (!src.points_path.empty()) {
    auto points = read_points_file(src.points_path);
    const Index n = static_cast<Index>(points.size());
    LinearOperator op =
        rbf_kernel_operator(std::move(points), src.kernel_gamma, src.block_size);
    return {std::move(op), std::nullopt, n};
  }
  throw ConfigError("matrix source '" + src.name + "' has no generator");
}

MatrixSource matrix_source_from_json_text(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text);
  const nlohmann::json& m = j.contains("matrix") ? j["matrix"] : j;
  MatrixSource src;
  src.name = m.value("name", "matrix");
  if (m.contains("spectrum")) src.spectrum = spectrum_model_from_json(m["spectrum"]);
  src.mtx_path = m.value("mtx", "");
  src.points_path = m.value("points", "");
  src.kernel_gamma = m.value("kernel_gamma", 1.0);
  src.block_size = m.value("block_size", Index(256));
  return src;
}

namespace {

std::string policy_name(const MethodSpec& spec, PrecondKind kind) {
  if (spec.kind == "none") return "none";
  const TauPolicy p = spec.policy ? *spec.policy : default_tau_policy(kind);
  return to_string(p.type);
}

void run_cell(const ExperimentConfig& cfg, const MethodSpec& method,
              const InstantiatedMatrix& mat, const std::string& matrix_name, Index l,
              int q, int seed_index, ExperimentRow& row,
              const std::string& out_dir) {
  row.matrix = matrix_name;
  row.kind = method.kind;
  row.solver = to_string(method.solver);
  row.basis = to_string(method.basis);
  row.l = l;
  row.q = q;
  row.seed_index = seed_index;
  row.mu = cfg.mu;
  row.n = mat.n;
  const auto t0 = std::chrono::steady_clock::now();
  try {
    SolveConfig scfg;
    scfg.solver = method.solver;
    scfg.basis = method.basis;
    scfg.sketch_kind = method.sketch;
    scfg.gamma = method.gamma;
    scfg.l = l;
    scfg.q = q;
    scfg.tol = cfg.tol;
    scfg.max_iters = cfg.max_iters;
    scfg.seed = mix_keys(cfg.seed, static_cast<std::uint64_t>(seed_index) * 1315423911ULL +
                                       static_cast<std::uint64_t>(l) * 2654435761ULL +
                                       static_cast<std::uint64_t>(q));
    if (method.kind == "none") {
      scfg.precond = std::nullopt;
    } else {
      scfg.precond = precond_kind_from_string(method.kind);
      scfg.tau_policy = method.policy;
    }
    row.policy = policy_name(method, scfg.precond ? *scfg.precond
                                                  : PrecondKind::r_right);

    if (mat.dense) row.cond_unprec = exact_cond(*mat.dense, cfg.mu);

    PreparedSystem sys = prepare_deflated_system(scfg, mat.op, cfg.mu);
    if (sys.precond) {
      row.tau = sys.precond->tau;
      row.rho = sys.precond->rho;
      row.e_norm = sys.precond->estimates.e_norm;
      row.proj_err = sys.precond->estimates.proj_err;
      if (mat.dense) row.cond_exact = exact_cond(*mat.dense, cfg.mu, *sys.precond);
      try {
        row.cond_bound = cond_bound(sys.precond->kind, sys.precond->estimates,
                                    sys.precond->tau, sys.precond->rho);
      } catch (const ConfigError&) {
        // unavailable estimate fields for this kind: bound not reported
      }
    }

    Vector b = gaussian_vector(mat.n, mix_keys(scfg.seed, 0xb), 0);
    b /= b.norm();
    auto [x, rep] = randrand_solve(scfg, mat.op, cfg.mu, b, sys);
    row.iters = rep.iters;
    row.matvecs = rep.matvecs_A;
    row.build_matvecs = rep.build_matvecs;
    row.converged = rep.converged;
    if (cfg.emit_traces) {
      std::ostringstream name;
      name << matrix_name << "_" << method.kind << "_l" << l << "_q" << q << "_s"
           << seed_index << ".csv";
      write_residual_trace_csv(
          (std::filesystem::path(out_dir) / name.str()).string(), rep);
    }
  } catch (const std::exception& e) {
    row.status = std::string("error: ") + e.what();
  }
  row.wall_ms = std::chrono::duration<double, std::milli>(
                    std::chrono::steady_clock::now() - t0)
                    .count();
}

void write_row(std::ostream& out, const ExperimentRow& r) {
  std::string status = r.status;
  for (auto& ch : status)
    if (ch == ',' || ch == '\n') ch = ';';
  out << r.matrix << ',' << r.kind << ',' << r.policy << ',' << r.solver << ','
      << r.basis << ',' << r.l << ',' << r.q << ',' << r.seed_index << ','
      << r.mu << ',' << r.n << ',' << r.cond_unprec << ',' << r.cond_exact
      << ',' << r.cond_bound << ',' << r.proj_err << ',' << r.e_norm << ','
      << r.tau << ',' << r.rho << ',' << r.iters << ',' << r.matvecs << ','
      << r.build_matvecs << ',' << (r.converged ? 1 : 0) << ',' << status << ','
      << r.wall_ms << '\n';
}

}  // namespace

ExperimentReport run_experiment(const ExperimentConfig& config,
                                const std::string& out_dir) {
  ExperimentReport report;
  report.config = config;
  std::filesystem::create_directories(out_dir);

  struct Cell {
    std::size_t matrix_idx;
    std::size_t method_idx;
    Index l;
    int q;
    int seed_index;
  };
  std::vector<Cell> cells;
  for (std::size_t mi = 0; mi < config.matrices.size(); ++mi)
    for (std::size_t me = 0; me < config.methods.size(); ++me)
      for (Index l : config.l_values)
        for (int q : config.q_values)
          for (int s = 0; s < config.seeds; ++s) cells.push_back({mi, me, l, q, s});

  std::vector<InstantiatedMatrix> matrices;
  matrices.reserve(config.matrices.size());
  for (const auto& src : config.matrices)
    matrices.push_back(instantiate_matrix_source(src, config.dense_cap));

  report.rows.resize(cells.size());
  std::atomic<std::size_t> next{0};
  const int nthreads = std::max(1, config.threads);
  auto worker = [&] {
    while (true) {
      const std::size_t i = next.fetch_add(1);
      if (i >= cells.size()) break;
      const Cell& c = cells[i];
      run_cell(config, config.methods[c.method_idx], matrices[c.matrix_idx],
               config.matrices[c.matrix_idx].name, c.l, c.q, c.seed_index,
               report.rows[i], out_dir);
    }
  };
  if (nthreads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(nthreads));
    for (int t = 0; t < nthreads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  for (const auto& row : report.rows)
    if (row.status != "ok") ++report.failed_cells;

  const auto csv_path = std::filesystem::path(out_dir) / "results.csv";
  {
    std::ofstream out(csv_path);
    if (!out) throw ConfigError("cannot write " + csv_path.string());
    out.precision(12);
    out << experiment_csv_header() << '\n';
    for (const auto& row : report.rows) write_row(out, row);
  }
  report.output_files.push_back(csv_path.string());

  const auto json_path = std::filesystem::path(out_dir) / "report.json";
  {
    std::ofstream out(json_path);
    if (!out) throw ConfigError("cannot write " + json_path.string());
    out << experiment_report_to_json_text(report);
  }
  report.output_files.push_back(json_path.string());
  return report;
}

std::string experiment_report_to_json_text(const ExperimentReport& report) {
  nlohmann::json j;
  j["failed_cells"] = report.failed_cells;
  j["config"] = {{"mu", report.config.mu},
                 {"tol", report.config.tol},
                 {"seeds", report.config.seeds},
                 {"seed", report.config.seed},
                 {"dense_cap", report.config.dense_cap},
                 {"threads", report.config.threads}};
  auto rows = nlohmann::json::array();
  for (const auto& r : report.rows) {
    rows.push_back({{"matrix", r.matrix},
                    {"kind", r.kind},
                    {"policy", r.policy},
                    {"solver", r.solver},
                    {"basis", r.basis},
                    {"l", r.l},
                    {"q", r.q},
                    {"seed", r.seed_index},
                    {"mu", r.mu},
                    {"n", r.n},
                    {"cond_unprec", r.cond_unprec},
                    {"cond_exact", r.cond_exact},
                    {"cond_bound", r.cond_bound},
                    {"proj_err", r.proj_err},
                    {"e_norm", r.e_norm},
                    {"tau", r.tau},
                    {"rho", r.rho},
                    {"iters", r.iters},
                    {"matvecs", r.matvecs},
                    {"build_matvecs", r.build_matvecs},
                    {"converged", r.converged},
                    {"status", r.status},
                    {"wall_ms", r.wall_ms}});
  }
  j["rows"] = std::move(rows);
  j["outputs"] = report.output_files;
  return j.dump(2);
}

}  // namespace randrand
