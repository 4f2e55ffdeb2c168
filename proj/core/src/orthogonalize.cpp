#include "randrand/orthogonalize.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/QR>
#include <Eigen/SVD>

#include <cmath>

namespace randrand {

Matrix cholesky_upper(const Matrix& w) {
  const Index n = w.rows();
  require_dim(w.cols(), n, "cholesky_upper");
  Matrix r = Matrix::Zero(n, n);
  for (Index j = 0; j < n; ++j) {
    double d = w(j, j);
    for (Index k = 0; k < j; ++k) d -= r(k, j) * r(k, j);
    if (!(d > 0.0)) throw BreakdownError(static_cast<int>(j), d);
    const double rjj = std::sqrt(d);
    r(j, j) = rjj;
    for (Index i = j + 1; i < n; ++i) {
      double s = w(j, i);
      for (Index k = 0; k < j; ++k) s -= r(k, j) * r(k, i);
      r(j, i) = s / rjj;
    }
  }
  return r;
}

Matrix cholesky_with_fallback(const Matrix& w, int* fallback_exponent) {
  if (fallback_exponent) *fallback_exponent = 0;
  const Index n = w.rows();
  Eigen::SelfAdjointEigenSolver<Matrix> es(w, Eigen::EigenvaluesOnly);
  const double norm_w = es.eigenvalues().cwiseAbs().maxCoeff();
  if (norm_w == 0.0) return Matrix::Identity(n, n);
  try {
    return cholesky_upper(w);
  } catch (const BreakdownError&) {
  }
  for (int e = -14; e <= -1; ++e) {
    const double alpha = std::pow(10.0, e) * norm_w;
    try {
      Matrix r = cholesky_upper(w + alpha * Matrix::Identity(n, n));
      if (fallback_exponent) *fallback_exponent = e;
      return r;
    } catch (const BreakdownError&) {
    }
  }
  throw BreakdownError(static_cast<int>(n) - 1, -norm_w);
}

QrFactors explicit_qr(const Matrix& b) {
  if (b.rows() < b.cols()) throw ConfigError("explicit_qr: requires rows >= cols");
  Eigen::HouseholderQR<Matrix> qr(b);
  const Index l = b.cols();
  QrFactors out;
  out.q = qr.householderQ() * Matrix::Identity(b.rows(), l);
  out.r = qr.matrixQR().topRows(l).triangularView<Eigen::Upper>();
  for (Index j = 0; j < l; ++j) {
    if (out.r(j, j) < 0.0) {
      out.r.row(j) = -out.r.row(j);
      out.q.col(j) = -out.q.col(j);
    }
  }
  const double dmax = out.r.diagonal().cwiseAbs().maxCoeff();
  for (Index j = 0; j < l; ++j)
    if (out.r(j, j) <= 1e-14 * dmax) out.rank_deficient = true;
  return out;
}

namespace {

/// Omega^T A_mu^2 Omega assembled per column, right to left (2 matvecs per
/// column, nothing of size n x l beyond omega itself is stored).
Matrix shifted_gram(const ShiftedOperator& op_mu, const Matrix& omega) {
  const Index l = omega.cols();
  Matrix g(l, l);
  for (Index j = 0; j < l; ++j) {
    Vector y = op_mu.apply(Vector(omega.col(j)));
    Vector z = op_mu.apply(y);
    g.col(j) = omega.transpose() * z;
  }
  return 0.5 * (g + g.transpose());
}

}  // namespace

Matrix qless_chol_qr(const ShiftedOperator& op_mu, const Matrix& omega) {
  require_dim(omega.rows(), op_mu.n(), "qless_chol_qr");
  return cholesky_upper(shifted_gram(op_mu, omega));
}

PrecondQlessResult qless_precond_chol_qr(const ShiftedOperator& op_mu,
                                         const Matrix& omega,
                                         const SketchOp& theta) {
  require_dim(omega.rows(), op_mu.n(), "qless_precond_chol_qr");
  require_dim(theta.cols(), op_mu.n(), "qless_precond_chol_qr: theta");
  const Index l = omega.cols();
  if (theta.rows() < l)
    throw ConfigError("qless_precond_chol_qr: theta rows must be >= l");

  // S = Theta * (A_mu * Omega), one basis column in memory at a time.
  Matrix s(theta.rows(), l);
  for (Index j = 0; j < l; ++j)
    s.col(j) = theta.apply(op_mu.apply(Vector(omega.col(j))));

  PrecondQlessResult out;
  out.t = Matrix::Identity(l, l);
  out.rank = l;

  Eigen::JacobiSVD<Matrix> svd(s, Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  const double smax = sv.size() > 0 ? sv[0] : 0.0;
  Index rank = 0;
  for (Index i = 0; i < sv.size(); ++i)
    if (sv[i] > 1e-12 * smax) ++rank;
  const Matrix* omega_eff = &omega;
  Matrix omega_trunc;
  if (rank < l) {
    out.truncated = true;
    out.rank = rank;
    out.t = svd.matrixV().leftCols(rank);
    omega_trunc = omega * out.t;
    omega_eff = &omega_trunc;
    s = s * out.t;
  }

  out.r_sk = explicit_qr(s).r;
  // Preconditioned Gram (Omega R_sk^{-1})^T A_mu^2 (Omega R_sk^{-1}), assembled
  // column by column from the preconditioned columns. Forming the plain Gram
  // first and sandwiching it afterwards would keep the u cond(A_mu Omega)^2
  // rounding error the second level exists to remove.
  const Index r_dim = out.rank;
  Matrix g_pre(r_dim, r_dim);
  Vector e = Vector::Zero(r_dim);
  for (Index j = 0; j < r_dim; ++j) {
    e[j] = 1.0;
    Vector m = *omega_eff * out.r_sk.triangularView<Eigen::Upper>().solve(e);
    e[j] = 0.0;
    Vector z = op_mu.apply(op_mu.apply(m));
    g_pre.col(j) = out.r_sk.transpose()
                       .triangularView<Eigen::Lower>()
                       .solve(Vector(omega_eff->transpose() * z));
  }
  g_pre = 0.5 * (g_pre + g_pre.transpose());
  Matrix r_chol = cholesky_upper(g_pre);
  out.r = r_chol * out.r_sk;
  return out;
}

RecyclePack make_recycle_pack(const LinearOperator& a, const Matrix& omega,
                              bool with_alpha, std::uint64_t seed) {
  require_dim(omega.rows(), a.n(), "make_recycle_pack");
  const long mv0 = a.matvec_count();
  const Index l = omega.cols();
  Matrix y(a.n(), l);
  for (Index j = 0; j < l; ++j) y.col(j) = a.apply(Vector(omega.col(j)));
  RecyclePack pack;
  pack.g_aa = y.transpose() * y;
  pack.g_a = omega.transpose() * y;
  pack.g_a = 0.5 * (pack.g_a + pack.g_a.transpose());
  pack.g_i = omega.transpose() * omega;
  pack.g_aa = 0.5 * (pack.g_aa + pack.g_aa.transpose());
  pack.g_i = 0.5 * (pack.g_i + pack.g_i.transpose());
  if (with_alpha) {
    const double norm_a = estimate_spectral_norm(a, seed);
    pack.alpha = std::sqrt(std::numeric_limits<double>::epsilon()) * norm_a;
    if (pack.alpha > 0.0) {
      Matrix w = pack.g_aa + 2.0 * pack.alpha * pack.g_a +
                 pack.alpha * pack.alpha * pack.g_i;
      try {
        pack.r_alpha = cholesky_upper(w);
      } catch (const BreakdownError&) {
        pack.r_alpha.reset();  // recycle_factor falls back to the plain route
      }
    }
  }
  pack.build_matvecs = a.matvec_count() - mv0;
  return pack;
}

Matrix recycle_factor(const RecyclePack& pack, double mu) {
  Matrix w = pack.g_aa + 2.0 * mu * pack.g_a + mu * mu * pack.g_i;
  w = 0.5 * (w + w.transpose());
  if (pack.r_alpha && mu >= 0.0 && mu <= pack.alpha) {
    const Matrix& ra = *pack.r_alpha;
    Matrix tmp = ra.transpose().triangularView<Eigen::Lower>().solve(w);
    Matrix g = ra.transpose()
                   .triangularView<Eigen::Lower>()
                   .solve(Matrix(tmp.transpose()));
    g = 0.5 * (g + g.transpose());
    return cholesky_upper(g) * ra;
  }
  return cholesky_upper(w);
}

double orthogonality_measure(const std::function<Vector(const Vector&)>& q_apply,
                             Index n, Index l, int probes) {
  Matrix q(n, l);
  Vector e = Vector::Zero(l);
  for (Index j = 0; j < l; ++j) {
    e[j] = 1.0;
    q.col(j) = q_apply(e);
    e[j] = 0.0;
  }
  Matrix defect = Matrix::Identity(l, l) - q.transpose() * q;
  defect = 0.5 * (defect + defect.transpose());
  if (probes > 0) {
    return estimate_spectral_norm(
        [&defect](const Vector& v) { return Vector(defect * v); }, l,
        /*seed=*/0x0f17, probes, 1e-12);
  }
  Eigen::SelfAdjointEigenSolver<Matrix> es(defect, Eigen::EigenvaluesOnly);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

double orthogonality_measure(const Matrix& q) {
  Matrix defect = Matrix::Identity(q.cols(), q.cols()) - q.transpose() * q;
  defect = 0.5 * (defect + defect.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> es(defect, Eigen::EigenvaluesOnly);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

DeflationBasis make_explicit_basis(const ShiftedOperator& op_mu, Matrix omega) {
  DeflationBasis basis;
  Matrix b = op_mu.apply(omega);
  auto qr = explicit_qr(b);
  basis.omega = std::move(omega);
  basis.r = std::move(qr.r);
  basis.q_factor = std::move(qr.q);
  basis.mode = BasisMode::explicit_q;
  basis.truncated = qr.rank_deficient;
  return basis;
}

DeflationBasis make_basisless_basis(const ShiftedOperator& op_mu, Matrix omega) {
  DeflationBasis basis;
  basis.r = qless_chol_qr(op_mu, omega);
  basis.omega = std::move(omega);
  basis.mode = BasisMode::basisless;
  return basis;
}

DeflationBasis make_basisless_precond_basis(const ShiftedOperator& op_mu,
                                            Matrix omega,
                                            const SketchOp& theta) {
  auto res = qless_precond_chol_qr(op_mu, omega, theta);
  DeflationBasis basis;
  basis.omega = res.truncated ? Matrix(omega * res.t) : std::move(omega);
  basis.r = std::move(res.r);
  basis.r_sk = std::move(res.r_sk);
  basis.mode = BasisMode::basisless;
  basis.truncated = res.truncated;
  return basis;
}

}  // namespace randrand
