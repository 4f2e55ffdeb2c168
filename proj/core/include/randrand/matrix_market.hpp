#pragma once

#include "randrand/types.hpp"

#include <iosfwd>
#include <string>

namespace randrand {

/// Reads a real Matrix Market file in array or coordinate format into a dense
/// matrix. Symmetric/skew-symmetric storage is expanded. Parse failures throw
/// ConfigError with the line number.
Matrix read_matrix_market(const std::string& path);
Matrix read_matrix_market(std::istream& in, const std::string& name = "<stream>");

/// Writes a dense matrix in array format ("%%MatrixMarket matrix array real general").
void write_matrix_market(const std::string& path, const Matrix& m);
void write_matrix_market(std::ostream& out, const Matrix& m);

/// Writes only nonzero entries in coordinate format (sketch debugging exports).
void write_matrix_market_coordinate(const std::string& path, const Matrix& m);

}  // namespace randrand
