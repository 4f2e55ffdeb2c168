#pragma once

#include "randrand/operator.hpp"
#include "randrand/types.hpp"

#include <string>
#include <vector>

namespace randrand {

/// Whitespace-separated points, one per line; '#' comments and an optional
/// trailing non-numeric label are ignored. All rows must share a dimension.
std::vector<Vector> read_points_file(const std::string& path);

/// Matrix-free (1/n) K with K_ij = exp(-gamma ||u_i - u_j||^2). The matvec
/// streams K in column blocks of block_size and never materializes K when
/// block_size < n.
LinearOperator rbf_kernel_operator(std::vector<Vector> points, double gamma_kernel,
                                   Index block_size);
LinearOperator rbf_kernel_operator_from_file(const std::string& path,
                                             double gamma_kernel,
                                             Index block_size);

/// Selected columns of (1/n) K, the column-sampling path that avoids full
/// matvecs.
Matrix rbf_kernel_columns(const std::vector<Vector>& points, double gamma_kernel,
                          const std::vector<Index>& columns);

}  // namespace randrand
