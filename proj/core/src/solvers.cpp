#include "randrand/solvers.hpp"

#include "randrand/rng.hpp"

#include <nlohmann/json.hpp>

#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>

namespace randrand {

namespace {

constexpr int kStagnationWindow = 50;
constexpr double kStagnationFactor = 0.9;  // < 10% improvement over the window

bool stagnated_at(const std::vector<double>& history) {
  const std::size_t n = history.size();
  if (n < static_cast<std::size_t>(kStagnationWindow) + 1) return false;
  return history[n - 1] > kStagnationFactor * history[n - 1 - kStagnationWindow];
}

}  // namespace

void SolveConfig::validate() const {
  if (!(tol > 0.0 && tol < 1.0)) throw ConfigError("SolveConfig: 0 < tol < 1");
  if (!(restart_eta > 0.0 && restart_eta <= 1.0))
    throw ConfigError("SolveConfig: 0 < restart_eta <= 1");
  if (max_iters < 1) throw ConfigError("SolveConfig: max_iters >= 1");
  if (precond && *precond == PrecondKind::g && solver != SolverKind::minres)
    throw ConfigError("SolveConfig: g-kind requires minres");
}

std::pair<Vector, SolveReport> cg(const OpFn& op, const Vector& b,
                                  const std::optional<OpFn>& precond,
                                  const Vector& x0, double tol, long max_iters) {
  SolveReport rep;
  const double bn = b.norm();
  Vector x = x0.size() ? x0 : Vector(Vector::Zero(b.size()));
  if (bn == 0.0) {
    rep.converged = true;
    rep.residual_history.push_back(0.0);
    rep.final_relative_residual = 0.0;
    return {Vector(Vector::Zero(b.size())), rep};
  }
  Vector r = b - op(x);
  Vector z = precond ? (*precond)(r) : r;
  Vector p = z;
  double rz = r.dot(z);
  for (long it = 0; it < max_iters; ++it) {
    Vector q = op(p);
    const double pq = p.dot(q);
    if (pq <= 0.0) {
      rep.breakdown = true;
      break;
    }
    const double alpha = rz / pq;
    x += alpha * p;
    r -= alpha * q;
    ++rep.iters;
    const double rel = r.norm() / bn;
    rep.residual_history.push_back(rel);
    if (rel <= tol) {
      rep.converged = true;
      break;
    }
    if (stagnated_at(rep.residual_history)) {
      rep.stagnated = true;
      break;
    }
    z = precond ? (*precond)(r) : r;
    const double rz_new = r.dot(z);
    p = z + (rz_new / rz) * p;
    rz = rz_new;
  }
  rep.final_relative_residual =
      rep.residual_history.empty() ? 1.0 : rep.residual_history.back();
  return {x, rep};
}

std::pair<Vector, SolveReport> minres(const OpFn& op, const Vector& b,
                                      const std::optional<OpFn>& precond,
                                      const Vector& x0, double tol,
                                      long max_iters) {
  SolveReport rep;
  const Index n = b.size();
  Vector x = x0.size() ? x0 : Vector(Vector::Zero(n));
  const double bn = b.norm();
  if (bn == 0.0) {
    rep.converged = true;
    rep.residual_history.push_back(0.0);
    rep.final_relative_residual = 0.0;
    return {Vector(Vector::Zero(n)), rep};
  }

  Vector r1 = b - op(x);
  Vector y = precond ? (*precond)(r1) : r1;
  double beta1 = r1.dot(y);
  if (beta1 < 0.0)
    throw ConfigError("minres: preconditioner is not positive definite");
  if (beta1 == 0.0) {
    rep.converged = true;
    rep.residual_history.push_back(0.0);
    rep.final_relative_residual = 0.0;
    return {x, rep};
  }
  beta1 = std::sqrt(beta1);

  double oldb = 0.0, beta = beta1, dbar = 0.0, epsln = 0.0, phibar = beta1;
  double cs = -1.0, sn = 0.0;
  Vector r2 = r1;
  Vector w = Vector::Zero(n), w2 = Vector::Zero(n);

  for (long it = 0; it < max_iters; ++it) {
    Vector v = y / beta;
    y = op(v);
    if (it >= 1) y -= (beta / oldb) * r1;
    const double alfa = v.dot(y);
    y -= (alfa / beta) * r2;
    r1 = r2;
    r2 = y;
    y = precond ? (*precond)(r2) : r2;
    oldb = beta;
    beta = r2.dot(y);
    if (beta < 0.0)
      throw ConfigError("minres: preconditioner is not positive definite");
    beta = std::sqrt(beta);

    // Givens rotation on the new tridiagonal column.
    const double oldeps = epsln;
    const double delta = cs * dbar + sn * alfa;
    const double gbar = sn * dbar - cs * alfa;
    epsln = sn * beta;
    dbar = -cs * beta;
    double gamma = std::hypot(gbar, beta);
    gamma = std::max(gamma, std::numeric_limits<double>::epsilon());
    cs = gbar / gamma;
    sn = beta / gamma;
    const double phi = cs * phibar;
    phibar = sn * phibar;

    Vector w1 = w2;
    w2 = w;
    w = (v - oldeps * w1 - delta * w2) / gamma;
    x += phi * w;
    ++rep.iters;

    const double rel = phibar / beta1;
    rep.residual_history.push_back(rel);
    if (rel <= tol) {
      rep.converged = true;
      break;
    }
    if (beta <= std::numeric_limits<double>::epsilon() * beta1) {
      // Krylov space exhausted: the iterate is exact up to roundoff.
      rep.converged = rel <= std::max(tol, 1e-14);
      rep.stagnated = !rep.converged;
      break;
    }
    if (stagnated_at(rep.residual_history)) {
      rep.stagnated = true;
      break;
    }
  }
  rep.final_relative_residual =
      rep.residual_history.empty() ? 1.0 : rep.residual_history.back();
  return {x, rep};
}

std::pair<Vector, SolveReport> cg(const ShiftedOperator& op, const Vector& b,
                                  double tol, long max_iters) {
  return cg([&op](const Vector& v) { return op.apply(v); }, b, std::nullopt,
            Vector(), tol, max_iters);
}

std::pair<Vector, SolveReport> minres(const ShiftedOperator& op, const Vector& b,
                                      double tol, long max_iters) {
  return minres([&op](const Vector& v) { return op.apply(v); }, b, std::nullopt,
                Vector(), tol, max_iters);
}

TauPolicy default_tau_policy(PrecondKind kind) {
  TauPolicy p;
  switch (kind) {
    case PrecondKind::r_right:
    case PrecondKind::r_left:
    case PrecondKind::r_split:
      p.type = TauPolicy::Type::r_enorm;
      p.rho = 1.0;
      break;
    case PrecondKind::c:
    case PrecondKind::nystrom:
      p.type = TauPolicy::Type::c_bound_min_d2;
      break;
    case PrecondKind::g:
      p.type = TauPolicy::Type::g_fixed_rho;
      p.rho = 0.5;
      break;
  }
  return p;
}

IterationBound iteration_bound_report(Index n, double d, int q, double proj_err,
                                      double lambda_min_mu) {
  if (n <= 0 || d <= 0.0 || proj_err <= 0.0 || lambda_min_mu <= 0.0)
    throw ConfigError("iteration_bound_report: inputs must be positive");
  IterationBound out;
  out.t = std::sqrt(proj_err / lambda_min_mu);
  const double nd = static_cast<double>(n) / d;
  const double expo = 1.0 / (4.0 * q + 4.0);
  out.t_bound_hp = 1.0 + std::pow(3240.0 * nd, expo);
  out.t_bound_expect = 1.0 + std::pow(148.0 * nd, expo);
  return out;
}

namespace {

Refinement default_refinement(BasisRoute route, const Matrix& r) {
  if (route == BasisRoute::explicit_qr || route == BasisRoute::qless_precond)
    return Refinement::none;
  Eigen::JacobiSVD<Matrix> svd(r);
  const double smin = std::max(svd.singularValues().tail(1)(0),
                               std::numeric_limits<double>::min());
  const double cond = svd.singularValues()(0) / smin;
  return cond > 1e7 ? Refinement::iterative : Refinement::neumann;
}

DeflationBasis build_basis(const ShiftedOperator& op_mu, Matrix omega,
                           const SolveConfig& cfg) {
  switch (cfg.basis) {
    case BasisRoute::explicit_qr:
      return make_explicit_basis(op_mu, std::move(omega));
    case BasisRoute::qless:
      return make_basisless_basis(op_mu, std::move(omega));
    case BasisRoute::qless_precond: {
      const Index l = omega.cols();
      const Index l_sk =
          cfg.theta_l > 0 ? cfg.theta_l : std::min<Index>(op_mu.n(), 4 * l + 8);
      SketchParams params;
      params.gamma = cfg.gamma;
      SketchOp theta = draw_sketch(cfg.theta_kind, l_sk, op_mu.n(),
                                   mix_keys(cfg.seed, 0x7e7a), params);
      return make_basisless_precond_basis(op_mu, std::move(omega), theta);
    }
  }
  throw ConfigError("unknown basis route");
}

}  // namespace

PreparedSystem prepare_deflated_system(const SolveConfig& cfg,
                                       const LinearOperator& a, double mu) {
  cfg.validate();
  PreparedSystem sys;
  if (!cfg.precond) return sys;
  const long mv0 = a.matvec_count();
  if (cfg.l < 1) throw ConfigError("prepare_deflated_system: need l >= 1");
  SketchParams params;
  params.gamma = cfg.gamma;
  SketchOp sketch = draw_sketch(cfg.sketch_kind, cfg.l, a.n(), cfg.seed, params);
  Matrix omega = subspace_iterate(a, sketch.transpose_materialize(), cfg.q);

  if (*cfg.precond == PrecondKind::nystrom) {
    sys.precond = build_nystrom_baseline(a, omega, mu);
    sys.build_matvecs = a.matvec_count() - mv0;
    return sys;
  }

  ShiftedOperator op_mu(a, mu);
  DeflationBasis basis = build_basis(op_mu, std::move(omega), cfg);
  EngineConfig ecfg;
  ecfg.refinement = cfg.refinement ? *cfg.refinement
                                   : default_refinement(cfg.basis, basis.r);
  ecfg.refine_iters = cfg.refine_iters;
  ecfg.reorthogonalize = cfg.reorthogonalize
                             ? *cfg.reorthogonalize
                             : (*cfg.precond == PrecondKind::r_split);
  ecfg.reorth_stride = cfg.reorth_stride;
  sys.engine =
      std::make_shared<const ProjectionEngine>(op_mu, std::move(basis), ecfg);

  BuildOptions opts;
  opts.power.max_iters = cfg.power_max_iters;
  opts.power.rel_tol = cfg.power_rel_tol;
  sys.precond = build_preconditioner(
      *cfg.precond, sys.engine,
      cfg.tau_policy ? *cfg.tau_policy : default_tau_policy(*cfg.precond),
      mix_keys(cfg.seed, 0xb11d), opts);
  sys.build_matvecs = a.matvec_count() - mv0;
  return sys;
}

namespace {

std::pair<Vector, SolveReport> run_inner(const SolveConfig& cfg, const OpFn& op,
                                         const std::optional<OpFn>& precond,
                                         const Vector& rhs, double tol,
                                         long max_iters) {
  if (cfg.solver == SolverKind::cg)
    return cg(op, rhs, precond, Vector(), tol, max_iters);
  return minres(op, rhs, precond, Vector(), tol, max_iters);
}

}  // namespace

std::pair<Vector, SolveReport> randrand_solve(const SolveConfig& config,
                                              const LinearOperator& a, double mu,
                                              const Vector& b) {
  PreparedSystem sys = prepare_deflated_system(config, a, mu);
  return randrand_solve(config, a, mu, b, sys);
}

std::pair<Vector, SolveReport> randrand_solve(const SolveConfig& config,
                                              const LinearOperator& a, double mu,
                                              const Vector& b,
                                              const PreparedSystem& sys) {
  config.validate();
  require_dim(b.size(), a.n(), "randrand_solve");
  const auto t_start = std::chrono::steady_clock::now();
  const long mv0 = a.matvec_count();
  ShiftedOperator op_mu(a, mu);

  SolveReport rep;
  rep.build_matvecs = sys.build_matvecs;
  Vector x = Vector::Zero(a.n());
  const double bn = b.norm();
  if (bn == 0.0) {
    rep.converged = true;
    rep.final_relative_residual = 0.0;
    rep.residual_history.push_back(0.0);
    return {x, rep};
  }

  if (sys.precond) {
    rep.tau = sys.precond->tau;
    rep.rho = sys.precond->rho;
  }
  const PrecondKind kind =
      config.precond ? *config.precond : PrecondKind::r_right;
  if (config.precond && config.l >= 7 &&
      (kind == PrecondKind::r_right || kind == PrecondKind::r_left ||
       kind == PrecondKind::r_split)) {
    const double d = (static_cast<double>(config.l) - 4.0) / 2.4;
    if (d >= 1.0)
      rep.t_bound = 1.0 + std::pow(3240.0 * static_cast<double>(a.n()) / d,
                                   1.0 / (4.0 * config.q + 4.0));
  }

  Vector r = b - op_mu.apply(x);
  double rel = r.norm() / bn;
  rep.residual_history.push_back(rel);
  bool first_round = true;
  Vector x_best = x;
  double rel_best = rel;

  while (rep.iters < config.max_iters && rel > config.tol) {
    if (!first_round) rep.restarts.push_back(rep.iters);
    // One restart round: reduce the residual by restart_eta, then rebase on
    // the recomputed true residual with the accumulated iterate. The 1/4
    // safety factor keeps the final round from stopping right at the target,
    // where the recurrence-vs-true residual gap would strand the solve.
    const double inner_tol =
        std::min(0.5, std::max(config.restart_eta, 0.25 * config.tol / rel));
    const long budget = config.max_iters - rep.iters;
    std::pair<Vector, SolveReport> inner;

    if (!config.precond) {
      inner = run_inner(
          config, [&](const Vector& v) { return op_mu.apply(v); }, std::nullopt,
          r, inner_tol, budget);
      x += inner.first;
    } else {
      const Preconditioner& p = *sys.precond;
      switch (kind) {
        case PrecondKind::r_right: {
          inner = run_inner(
              config,
              [&](const Vector& v) { return apply_preconditioned_operator(p, v); },
              std::nullopt, r, inner_tol, budget);
          x += recover_solution(p, inner.first, r);
          break;
        }
        case PrecondKind::r_split: {
          Vector rp = sys.engine->complement(r);
          inner = run_inner(
              config,
              [&](const Vector& v) { return apply_preconditioned_operator(p, v); },
              std::nullopt, rp, inner_tol, budget);
          x += recover_solution_split(p, inner.first, r);
          break;
        }
        case PrecondKind::r_left: {
          Vector rhs = apply_preconditioner(p, r);
          inner = run_inner(
              config,
              [&](const Vector& v) {
                Vector w = sys.engine->complement(v);
                Vector out = sys.engine->complement(op_mu.apply(w));
                out += p.tau * sys.engine->project(v);
                return out;
              },
              std::nullopt, rhs, inner_tol, budget);
          x += inner.first;
          break;
        }
        case PrecondKind::c:
        case PrecondKind::g:
        case PrecondKind::nystrom: {
          OpFn pc = [&](const Vector& v) { return apply_preconditioner(p, v); };
          inner = run_inner(
              config, [&](const Vector& v) { return op_mu.apply(v); },
              std::optional<OpFn>(pc), r, inner_tol, budget);
          x += inner.first;
          break;
        }
      }
    }

    rep.iters += inner.second.iters;
    for (double h : inner.second.residual_history)
      rep.residual_history.push_back(h * rel);
    rep.breakdown = rep.breakdown || inner.second.breakdown;

    r = b - op_mu.apply(x);
    const double rel_new = r.norm() / bn;
    if (rel_new < rel_best) {
      rel_best = rel_new;
      x_best = x;
    }
    // A round that fails to shave 10% off the true residual marks the
    // rounding-accuracy floor of this build; keep the best iterate seen.
    if (rel_new > kStagnationFactor * rel) {
      rep.stagnated = rep.stagnated || inner.second.stagnated ||
                      rel_new > config.tol;
      rel = rel_new;
      break;
    }
    if (inner.second.iters == 0 || (rep.breakdown && rel_new >= rel)) {
      rel = rel_new;
      break;
    }
    rel = rel_new;
    first_round = false;
  }
  if (rel_best < rel) {
    x = x_best;
    rel = rel_best;
  }

  rep.converged = rel <= config.tol;
  rep.final_relative_residual = rel;
  rep.matvecs_A = a.matvec_count() - mv0 + sys.build_matvecs;
  rep.wall_ms = std::chrono::duration<double, std::milli>(
                    std::chrono::steady_clock::now() - t_start)
                    .count();
  return {x, rep};
}

AdaptiveResult adaptive_sketch_dim(const ShiftedOperator& op_mu, double f,
                                   Index l0, double growth, Index l_max, int q,
                                   std::uint64_t seed, SketchKind kind) {
  if (!(f > 0.0)) throw ConfigError("adaptive_sketch_dim: f > 0");
  if (!(growth > 1.0)) throw ConfigError("adaptive_sketch_dim: growth > 1");
  if (l0 > l_max || l0 < 1) throw ConfigError("adaptive_sketch_dim: 1 <= l0 <= l_max");
  const Index n = op_mu.n();
  AdaptiveResult out;
  out.mu_zero_warning = op_mu.mu() == 0.0;
  const double threshold =
      out.mu_zero_warning
          ? 0.0
          : f *
                std::pow(static_cast<double>(n) / static_cast<double>(l_max),
                         1.0 / (2.0 * q + 2.0)) *
                std::abs(op_mu.mu());

  SketchOp sketch = draw_sketch(kind, l0, n, seed);
  const bool extendable = sketch.prefix_extendable();
  // Scale-free subspace-iterated columns A^q (X^T e_j); extension appends.
  Matrix raw_cols(n, 0);
  double prev_err = std::numeric_limits<double>::infinity();
  Index l = l0;

  while (true) {
    if (sketch.rows() != l) sketch = sketch.extend_rows(l);
    Matrix omega;
    if (extendable) {
      const double unscale =
          kind == SketchKind::column_sample
              ? 1.0
              : std::sqrt(static_cast<double>(sketch.rows()));
      const Index have = raw_cols.cols();
      if (have < l) {
        raw_cols.conservativeResize(n, l);
        Vector e = Vector::Zero(l);
        for (Index j = have; j < l; ++j) {
          e[j] = 1.0;
          Matrix col = sketch.apply_transpose(e) * unscale;
          e[j] = 0.0;
          raw_cols.col(j) = subspace_iterate(op_mu.base(), col, q);
        }
      }
      omega = raw_cols.leftCols(l) / unscale;
    } else {
      omega = subspace_iterate(op_mu.base(), sketch.transpose_materialize(), q);
    }

    DeflationBasis basis;
    try {
      basis = make_basisless_basis(op_mu, std::move(omega));
    } catch (const BreakdownError&) {
      SketchOp theta =
          draw_sketch(SketchKind::gaussian, std::min<Index>(n, 4 * l + 8), n,
                      mix_keys(seed, 0xada), SketchParams{});
      Matrix om2 = extendable
                       ? Matrix(raw_cols.leftCols(l) /
                                (kind == SketchKind::column_sample
                                     ? 1.0
                                     : std::sqrt(static_cast<double>(l))))
                       : subspace_iterate(op_mu.base(),
                                          sketch.transpose_materialize(), q);
      basis = make_basisless_precond_basis(op_mu, std::move(om2), theta);
    }
    ProjectionEngine engine(op_mu, basis, EngineConfig{});
    const double err = std::sqrt(estimate_spectral_norm(
        [&](const Vector& v) {
          return op_mu.apply(engine.complement(op_mu.apply(v)));
        },
        n, mix_keys(seed, 0xad1), 30, 1e-3));
    out.trace.emplace_back(l, err);
    out.basis = std::move(basis);
    out.l_final = l;
    out.proj_err = err;

    if (!out.mu_zero_warning && err <= threshold) {
      out.met_threshold = true;
      break;
    }
    if (err > 0.9 * prev_err) {  // stagnation: < 10% relative improvement
      out.stagnated = true;
      break;
    }
    if (l >= l_max) break;
    prev_err = err;
    l = std::min<Index>(
        l_max, static_cast<Index>(std::ceil(static_cast<double>(l) * growth)));
  }
  return out;
}

MultiShiftResult multi_shift_solve(const LinearOperator& a, const Vector& b,
                                   const std::vector<double>& shifts,
                                   const SketchOp& sketch, int q,
                                   const SolveConfig& config) {
  config.validate();
  require_dim(b.size(), a.n(), "multi_shift_solve");
  MultiShiftResult out;
  const long mv0 = a.matvec_count();

  Matrix omega = subspace_iterate(a, sketch.transpose_materialize(), q);
  const Index l = omega.cols();
  Matrix y(a.n(), l);
  for (Index j = 0; j < l; ++j) y.col(j) = a.apply(Vector(omega.col(j)));

  RecyclePack pack;
  pack.g_aa = y.transpose() * y;
  pack.g_aa = 0.5 * (pack.g_aa + pack.g_aa.transpose());
  pack.g_a = omega.transpose() * y;
  pack.g_a = 0.5 * (pack.g_a + pack.g_a.transpose());
  pack.g_i = omega.transpose() * omega;
  pack.g_i = 0.5 * (pack.g_i + pack.g_i.transpose());
  const double norm_a = estimate_spectral_norm(a, mix_keys(config.seed, 0xa0a));
  pack.alpha = std::sqrt(std::numeric_limits<double>::epsilon()) * norm_a;
  if (pack.alpha > 0.0) {
    try {
      pack.r_alpha = cholesky_upper(pack.g_aa + 2.0 * pack.alpha * pack.g_a +
                                    pack.alpha * pack.alpha * pack.g_i);
    } catch (const BreakdownError&) {
      pack.r_alpha.reset();
    }
  }
  pack.build_matvecs = a.matvec_count() - mv0;
  out.basis_matvecs = pack.build_matvecs;

  const PrecondKind kind =
      config.precond ? *config.precond : PrecondKind::r_right;

  for (double mu : shifts) {
    ShiftSolveEntry entry;
    entry.mu = mu;
    try {
      Matrix r_mu = recycle_factor(pack, mu);
      DeflationBasis basis;
      basis.omega = omega;
      basis.r = std::move(r_mu);
      basis.mode = BasisMode::basisless;
      basis.recycle = pack;
      ShiftedOperator op_mu(a, mu);
      EngineConfig ecfg;
      ecfg.refinement = config.refinement ? *config.refinement : Refinement::neumann;
      ecfg.refine_iters = config.refine_iters;
      ecfg.reorthogonalize = config.reorthogonalize
                                 ? *config.reorthogonalize
                                 : (kind == PrecondKind::r_split);
      Matrix product = y + mu * omega;  // A_mu Omega with zero fresh matvecs
      PreparedSystem sys;
      sys.engine = std::make_shared<const ProjectionEngine>(
          op_mu, std::move(basis), ecfg, std::optional<Matrix>(std::move(product)));
      BuildOptions opts;
      opts.power.max_iters = config.power_max_iters;
      opts.power.rel_tol = config.power_rel_tol;
      sys.precond = build_preconditioner(
          kind, sys.engine,
          config.tau_policy ? *config.tau_policy : default_tau_policy(kind),
          mix_keys(config.seed,
                   static_cast<std::uint64_t>(std::hash<double>{}(mu))),
          opts);
      entry.built = true;
      auto [x, rep] = randrand_solve(config, a, mu, b, sys);
      entry.x = std::move(x);
      entry.report = std::move(rep);
    } catch (const std::exception& e) {
      entry.error = e.what();
    }
    out.entries.push_back(std::move(entry));
  }
  out.pack = std::move(pack);
  return out;
}

const char* to_string(SolverKind kind) {
  return kind == SolverKind::cg ? "cg" : "minres";
}

SolverKind solver_kind_from_string(const std::string& s) {
  if (s == "cg") return SolverKind::cg;
  if (s == "minres") return SolverKind::minres;
  throw ConfigError("unknown solver: " + s);
}

const char* to_string(BasisRoute route) {
  switch (route) {
    case BasisRoute::explicit_qr: return "explicit";
    case BasisRoute::qless: return "qless";
    case BasisRoute::qless_precond: return "qless_precond";
  }
  return "?";
}

BasisRoute basis_route_from_string(const std::string& s) {
  if (s == "explicit") return BasisRoute::explicit_qr;
  if (s == "qless") return BasisRoute::qless;
  if (s == "qless_precond") return BasisRoute::qless_precond;
  throw ConfigError("unknown basis route: " + s);
}

SolveConfig solve_config_from_json_text(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text);
  SolveConfig cfg;
  if (j.contains("solver")) cfg.solver = solver_kind_from_string(j["solver"]);
  if (j.contains("precond")) {
    const std::string p = j["precond"];
    cfg.precond = p == "none"
                      ? std::nullopt
                      : std::optional<PrecondKind>(precond_kind_from_string(p));
  }
  if (j.contains("sketch")) {
    const auto& s = j["sketch"];
    if (s.contains("kind")) cfg.sketch_kind = sketch_kind_from_string(s["kind"]);
    if (s.contains("l")) cfg.l = s["l"].get<Index>();
    if (s.contains("gamma")) cfg.gamma = s["gamma"].get<int>();
    if (s.contains("seed")) cfg.seed = s["seed"].get<std::uint64_t>();
  }
  if (j.contains("q")) cfg.q = j["q"].get<int>();
  if (j.contains("tau_policy")) {
    TauPolicy tp;
    const auto& t = j["tau_policy"];
    tp.type = tau_policy_from_string(t.value("type", "r_enorm"));
    tp.rho = t.value("rho", 1.0);
    cfg.tau_policy = tp;
  }
  if (j.contains("basis")) cfg.basis = basis_route_from_string(j["basis"]);
  if (j.contains("theta_kind"))
    cfg.theta_kind = sketch_kind_from_string(j["theta_kind"]);
  if (j.contains("theta_l")) cfg.theta_l = j["theta_l"].get<Index>();
  if (j.contains("tol")) cfg.tol = j["tol"].get<double>();
  if (j.contains("max_iters")) cfg.max_iters = j["max_iters"].get<long>();
  if (j.contains("restart_eta")) cfg.restart_eta = j["restart_eta"].get<double>();
  if (j.contains("refinement")) {
    const std::string r = j["refinement"];
    if (r == "none") cfg.refinement = Refinement::none;
    else if (r == "neumann") cfg.refinement = Refinement::neumann;
    else if (r == "iterative") cfg.refinement = Refinement::iterative;
    else if (r != "auto") throw ConfigError("unknown refinement: " + r);
  }
  if (j.contains("refine_iters")) cfg.refine_iters = j["refine_iters"].get<int>();
  if (j.contains("reorthogonalize"))
    cfg.reorthogonalize = j["reorthogonalize"].get<bool>();
  if (j.contains("reorth_stride"))
    cfg.reorth_stride = j["reorth_stride"].get<int>();
  if (j.contains("power_max_iters"))
    cfg.power_max_iters = j["power_max_iters"].get<int>();
  if (j.contains("power_rel_tol"))
    cfg.power_rel_tol = j["power_rel_tol"].get<double>();
  cfg.validate();
  return cfg;
}

std::string solve_report_to_json_text(const SolveReport& report) {
  nlohmann::json j;
  j["iters"] = report.iters;
  j["converged"] = report.converged;
  j["stagnated"] = report.stagnated;
  j["breakdown"] = report.breakdown;
  j["matvecs_A"] = report.matvecs_A;
  j["build_matvecs"] = report.build_matvecs;
  j["final_relative_residual"] = report.final_relative_residual;
  j["restarts"] = report.restarts;
  if (report.t_bound >= 0.0) j["t_bound"] = report.t_bound;
  if (report.tau >= 0.0) j["tau"] = report.tau;
  if (report.rho >= 0.0) j["rho"] = report.rho;
  j["wall_ms"] = report.wall_ms;
  j["residual_history"] = report.residual_history;
  return j.dump(2);
}

void write_residual_trace_csv(const std::string& path,
                              const SolveReport& report) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write residual trace: " + path);
  out << "iter,rel_residual,restarted\n";
  std::size_t restart_idx = 0;
  out.precision(17);
  for (std::size_t i = 0; i < report.residual_history.size(); ++i) {
    int restarted = 0;
    if (restart_idx < report.restarts.size() &&
        static_cast<long>(i) == report.restarts[restart_idx]) {
      restarted = 1;
      ++restart_idx;
    }
    out << i << "," << report.residual_history[i] << "," << restarted << "\n";
  }
}

}  // namespace randrand
