#pragma once

#include "randrand/types.hpp"

#include <memory>
#include <optional>
#include <vector>

namespace randrand {

enum class SketchKind { gaussian, srht, sparse, multilevel, column_sample };

enum class SketchSide { left_X, right_XT };

struct SketchParams {
  int gamma = 0;  // nonzeros per column (sparse); 0 picks ceil(log2(n))
  Index l1 = 0;   // inner dimension (multilevel); 0 picks ceil(l*log2(n))
};

/// In-place unnormalized Walsh-Hadamard transform; length must be a power of
/// two. Applying twice multiplies by the length.
void fwht(Eigen::Ref<Vector> v);

/// A structured random embedding X of shape l x n with deterministic seeding.
/// Variates are keyed by (seed, column), so equal parameters reproduce
/// bit-identical matrices regardless of generation order or thread count.
class SketchOp {
 public:
  SketchKind kind() const { return kind_; }
  Index rows() const { return l_; }
  Index cols() const { return n_; }
  std::uint64_t seed() const { return seed_; }
  int gamma() const { return gamma_; }
  Index padded_len() const { return padded_len_; }

  /// X v.
  Vector apply(const Vector& v) const;
  /// X^T u.
  Vector apply_transpose(const Vector& u) const;
  /// X * M (side = left_X, M is n x m) or M * X^T (side = right_XT, M is m x n).
  Matrix apply_matrix(const Matrix& m, SketchSide side) const;
  /// Dense l x n realization; for tests, debugging and gaussian fast paths.
  Matrix materialize() const;
  /// X^T as a dense n x l matrix (the test-matrix columns fed to subspace iteration).
  Matrix transpose_materialize() const;

  /// Same stream with more rows; prefix-consistent for gaussian, srht and
  /// column_sample (existing rows are kept, modulo the 1/sqrt(l) rescale).
  SketchOp extend_rows(Index l_new) const;
  bool prefix_extendable() const;

  /// Sampled row indices (column_sample: columns of the operand it selects).
  const std::vector<Index>& sample_indices() const;

  friend SketchOp draw_sketch(SketchKind kind, Index l, Index n,
                              std::uint64_t seed, const SketchParams& params);

 private:
  SketchOp() = default;

  SketchKind kind_ = SketchKind::gaussian;
  Index l_ = 0;
  Index n_ = 0;
  std::uint64_t seed_ = 0;
  int gamma_ = 0;
  Index padded_len_ = 0;                   // srht only
  std::vector<Index> sample_rows_;         // srht / column_sample
  Vector rademacher_;                      // srht sign diagonal (length n)
  std::vector<std::vector<Index>> sparse_pos_;  // sparse: positions per column
  std::vector<std::vector<double>> sparse_val_; // sparse: values per column
  Matrix dense_;                           // gaussian: materialized realization
  std::shared_ptr<const SketchOp> inner_;  // multilevel: X = X2 * X1
  std::shared_ptr<const SketchOp> outer_;
};

SketchOp draw_sketch(SketchKind kind, Index l, Index n, std::uint64_t seed,
                     const SketchParams& params = {});

inline Matrix sketch_apply(const SketchOp& s, const Matrix& m, SketchSide side) {
  return s.apply_matrix(m, side);
}

struct EmbeddingCheck {
  double epsilon = 0.0;          // requested distortion
  double epsilon_observed = 0.0; // max |ratio - 1| over sampled directions
  bool pass = false;
  std::vector<double> sampled_ratios;
};

/// Samples random unit coefficient vectors z and records ||Theta B z||^2 / ||B z||^2.
/// Directions with ||B z|| = 0 are skipped.
EmbeddingCheck check_epsilon_embedding(const SketchOp& theta, const Matrix& b,
                                       int trials, std::uint64_t seed,
                                       double epsilon);

const char* to_string(SketchKind kind);
SketchKind sketch_kind_from_string(const std::string& s);

}  // namespace randrand
