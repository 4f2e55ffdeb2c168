#include "randrand/sketch.hpp"

#include "randrand/rng.hpp"

#include <cmath>
#include <string>

namespace randrand {

namespace {

// Stream tags separating the independent variate families of one sketch.
constexpr std::uint64_t kStreamRademacher = 0x11;
constexpr std::uint64_t kStreamRowSample = 0x22;
constexpr std::uint64_t kStreamSparseBase = 0x33;
constexpr std::uint64_t kStreamInner = 0x44;
constexpr std::uint64_t kStreamOuter = 0x55;

Index padded_pow2(Index n) {
  Index s = 1;
  while (s < n) s <<= 1;
  return s;
}

int default_gamma(Index n) {
  return static_cast<int>(std::ceil(std::log2(std::max<double>(static_cast<double>(n), 2.0))));
}

Index default_l1(Index l, Index n) {
  const double lg = std::log2(std::max<double>(static_cast<double>(n), 2.0));
  return std::min<Index>(n, static_cast<Index>(std::ceil(static_cast<double>(l) * lg)));
}

}  // namespace

void fwht(Eigen::Ref<Vector> v) {
  const Index n = v.size();
  if (n == 0 || (n & (n - 1)) != 0)
    throw ConfigError("fwht: length must be a power of two");
  for (Index h = 1; h < n; h <<= 1) {
    for (Index i = 0; i < n; i += h << 1) {
      for (Index j = i; j < i + h; ++j) {
        const double x = v[j];
        const double y = v[j + h];
        v[j] = x + y;
        v[j + h] = x - y;
      }
    }
  }
}

SketchOp draw_sketch(SketchKind kind, Index l, Index n, std::uint64_t seed,
                     const SketchParams& params) {
  if (l < 1 || n < 1) throw ConfigError("draw_sketch: l and n must be positive");
  SketchOp s;
  s.kind_ = kind;
  s.l_ = l;
  s.n_ = n;
  s.seed_ = seed;
  switch (kind) {
    case SketchKind::gaussian: {
      if (l > n) throw ConfigError("draw_sketch: gaussian requires l <= n");
      // Materialized once; entries keyed by (seed, column, row) and scaled to
      // variance 1/l.
      const double scale = 1.0 / std::sqrt(static_cast<double>(l));
      s.dense_.resize(l, n);
      for (Index j = 0; j < n; ++j)
        for (Index i = 0; i < l; ++i)
          s.dense_(i, j) = scale * keyed_normal(seed, static_cast<std::uint64_t>(j),
                                                static_cast<std::uint64_t>(i));
      break;
    }
    case SketchKind::srht: {
      s.padded_len_ = padded_pow2(n);
      if (l > s.padded_len_)
        throw ConfigError("draw_sketch: srht requires l <= padded length");
      s.sample_rows_ = permutation_prefix(seed, kStreamRowSample, s.padded_len_, l);
      s.rademacher_.resize(n);
      for (Index i = 0; i < n; ++i)
        s.rademacher_[i] =
            keyed_uniform(seed, kStreamRademacher, static_cast<std::uint64_t>(i)) < 0.5
                ? -1.0
                : 1.0;
      break;
    }
    case SketchKind::sparse: {
      const int gamma = params.gamma > 0 ? params.gamma : default_gamma(n);
      if (gamma > l) throw ConfigError("draw_sketch: sparse requires gamma <= l");
      s.gamma_ = gamma;
      s.sparse_pos_.resize(static_cast<std::size_t>(n));
      s.sparse_val_.resize(static_cast<std::size_t>(n));
      const double val = 1.0 / std::sqrt(static_cast<double>(gamma));
      for (Index j = 0; j < n; ++j) {
        const auto stream = mix_keys(kStreamSparseBase, static_cast<std::uint64_t>(j));
        auto pos = permutation_prefix(seed, stream, l, gamma);
        std::vector<double> vals(pos.size());
        for (std::size_t t = 0; t < pos.size(); ++t) {
          vals[t] = keyed_uniform(seed, mix_keys(stream, 0x77),
                                  static_cast<std::uint64_t>(t)) < 0.5
                        ? -val
                        : val;
        }
        s.sparse_pos_[static_cast<std::size_t>(j)] = std::move(pos);
        s.sparse_val_[static_cast<std::size_t>(j)] = std::move(vals);
      }
      break;
    }
    case SketchKind::multilevel: {
      const Index l1 = params.l1 > 0 ? params.l1 : default_l1(l, n);
      if (l1 < l) throw ConfigError("draw_sketch: multilevel requires l1 >= l");
      SketchParams inner_params;
      inner_params.gamma = params.gamma > 0 ? params.gamma : default_gamma(n);
      auto inner = std::make_shared<SketchOp>(
          draw_sketch(SketchKind::sparse, l1, n, mix_keys(seed, kStreamInner),
                      inner_params));
      auto outer = std::make_shared<SketchOp>(
          draw_sketch(SketchKind::gaussian, l, l1, mix_keys(seed, kStreamOuter)));
      s.inner_ = std::move(inner);
      s.outer_ = std::move(outer);
      s.gamma_ = inner_params.gamma;
      break;
    }
    case SketchKind::column_sample: {
      if (l > n) throw ConfigError("draw_sketch: column_sample requires l <= n");
      s.sample_rows_ = permutation_prefix(seed, kStreamRowSample, n, l);
      break;
    }
  }
  return s;
}

bool SketchOp::prefix_extendable() const {
  return kind_ == SketchKind::gaussian || kind_ == SketchKind::srht ||
         kind_ == SketchKind::column_sample;
}

const std::vector<Index>& SketchOp::sample_indices() const {
  if (kind_ != SketchKind::column_sample && kind_ != SketchKind::srht)
    throw ConfigError("sample_indices: only sampling sketches carry indices");
  return sample_rows_;
}

SketchOp SketchOp::extend_rows(Index l_new) const {
  if (l_new < l_) throw ConfigError("extend_rows: l_new must be >= current l");
  SketchParams params;
  params.gamma = gamma_;
  return draw_sketch(kind_, l_new, n_, seed_, params);
}

Vector SketchOp::apply(const Vector& v) const {
  require_dim(v.size(), n_, "SketchOp::apply");
  switch (kind_) {
    case SketchKind::gaussian:
      return Vector(dense_ * v);
    case SketchKind::srht: {
      Vector w = Vector::Zero(padded_len_);
      w.head(n_) = rademacher_.cwiseProduct(v);
      fwht(w);
      const double scale = 1.0 / std::sqrt(static_cast<double>(l_));
      Vector out(l_);
      for (Index i = 0; i < l_; ++i) out[i] = scale * w[sample_rows_[static_cast<std::size_t>(i)]];
      return out;
    }
    case SketchKind::sparse: {
      Vector out = Vector::Zero(l_);
      for (Index j = 0; j < n_; ++j) {
        const double vj = v[j];
        if (vj == 0.0) continue;
        const auto& pos = sparse_pos_[static_cast<std::size_t>(j)];
        const auto& val = sparse_val_[static_cast<std::size_t>(j)];
        for (std::size_t t = 0; t < pos.size(); ++t) out[pos[t]] += val[t] * vj;
      }
      return out;
    }
    case SketchKind::multilevel:
      return outer_->apply(inner_->apply(v));
    case SketchKind::column_sample: {
      Vector out(l_);
      for (Index i = 0; i < l_; ++i) out[i] = v[sample_rows_[static_cast<std::size_t>(i)]];
      return out;
    }
  }
  throw ConfigError("unreachable sketch kind");
}

Vector SketchOp::apply_transpose(const Vector& u) const {
  require_dim(u.size(), l_, "SketchOp::apply_transpose");
  switch (kind_) {
    case SketchKind::gaussian:
      return Vector(dense_.transpose() * u);
    case SketchKind::srht: {
      Vector w = Vector::Zero(padded_len_);
      const double scale = 1.0 / std::sqrt(static_cast<double>(l_));
      for (Index i = 0; i < l_; ++i) w[sample_rows_[static_cast<std::size_t>(i)]] += u[i];
      fwht(w);  // H is symmetric
      return Vector(scale * rademacher_.cwiseProduct(w.head(n_)));
    }
    case SketchKind::sparse: {
      Vector out(n_);
      for (Index j = 0; j < n_; ++j) {
        const auto& pos = sparse_pos_[static_cast<std::size_t>(j)];
        const auto& val = sparse_val_[static_cast<std::size_t>(j)];
        double acc = 0.0;
        for (std::size_t t = 0; t < pos.size(); ++t) acc += val[t] * u[pos[t]];
        out[j] = acc;
      }
      return out;
    }
    case SketchKind::multilevel:
      return inner_->apply_transpose(outer_->apply_transpose(u));
    case SketchKind::column_sample: {
      Vector out = Vector::Zero(n_);
      for (Index i = 0; i < l_; ++i) out[sample_rows_[static_cast<std::size_t>(i)]] += u[i];
      return out;
    }
  }
  throw ConfigError("unreachable sketch kind");
}

Matrix SketchOp::apply_matrix(const Matrix& m, SketchSide side) const {
  if (side == SketchSide::left_X) {
    require_dim(m.rows(), n_, "sketch_apply left_X");
    if (kind_ == SketchKind::gaussian) return dense_ * m;
    Matrix out(l_, m.cols());
    for (Index j = 0; j < m.cols(); ++j) out.col(j) = apply(Vector(m.col(j)));
    return out;
  }
  require_dim(m.cols(), n_, "sketch_apply right_XT");
  if (kind_ == SketchKind::gaussian) return m * dense_.transpose();
  Matrix out(m.rows(), l_);
  for (Index i = 0; i < m.rows(); ++i)
    out.row(i) = apply(Vector(m.row(i).transpose())).transpose();
  return out;
}

Matrix SketchOp::materialize() const {
  if (kind_ == SketchKind::gaussian) return dense_;
  Matrix x(l_, n_);
  Vector e = Vector::Zero(n_);
  for (Index j = 0; j < n_; ++j) {
    e[j] = 1.0;
    x.col(j) = apply(e);
    e[j] = 0.0;
  }
  return x;
}

Matrix SketchOp::transpose_materialize() const {
  return materialize().transpose();
}

EmbeddingCheck check_epsilon_embedding(const SketchOp& theta, const Matrix& b,
                                       int trials, std::uint64_t seed,
                                       double epsilon) {
  if (trials < 1) throw ConfigError("check_epsilon_embedding: trials >= 1");
  require_dim(b.rows(), theta.cols(), "check_epsilon_embedding");
  EmbeddingCheck out;
  out.epsilon = epsilon;
  out.pass = true;
  for (int t = 0; t < trials; ++t) {
    Vector z = gaussian_vector(b.cols(), seed, static_cast<std::uint64_t>(t));
    const double zn = z.norm();
    if (zn == 0.0) continue;
    z /= zn;
    Vector bz = b * z;
    const double denom = bz.squaredNorm();
    if (denom == 0.0) continue;  // rank-deficient direction
    const double num = theta.apply(bz).squaredNorm();
    const double ratio = num / denom;
    out.sampled_ratios.push_back(ratio);
    out.epsilon_observed = std::max(out.epsilon_observed, std::abs(ratio - 1.0));
    if (ratio < 1.0 - epsilon || ratio > 1.0 + epsilon) out.pass = false;
  }
  return out;
}

const char* to_string(SketchKind kind) {
  switch (kind) {
    case SketchKind::gaussian: return "gaussian";
    case SketchKind::srht: return "srht";
    case SketchKind::sparse: return "sparse";
    case SketchKind::multilevel: return "multilevel";
    case SketchKind::column_sample: return "column_sample";
  }
  return "?";
}

SketchKind sketch_kind_from_string(const std::string& s) {
  if (s == "gaussian") return SketchKind::gaussian;
  if (s == "srht") return SketchKind::srht;
  if (s == "sparse") return SketchKind::sparse;
  if (s == "multilevel") return SketchKind::multilevel;
  if (s == "column_sample") return SketchKind::column_sample;
  throw ConfigError("unknown sketch kind: " + s);
}

}  // namespace randrand
