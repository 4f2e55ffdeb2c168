#include "randrand/matrix_market.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

namespace randrand {

namespace {

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return s;
}

[[noreturn]] void fail(const std::string& name, long line, const std::string& msg) {
  throw ConfigError("matrix market " + name + ":" + std::to_string(line) + ": " + msg);
}

}  // namespace

Matrix read_matrix_market(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open matrix market file: " + path);
  return read_matrix_market(in, path);
}

Matrix read_matrix_market(std::istream& in, const std::string& name) {
  std::string line;
  long lineno = 0;
  if (!std::getline(in, line)) fail(name, 1, "empty file");
  ++lineno;
  std::istringstream header(line);
  std::string banner, object, format, field, symmetry;
  header >> banner >> object >> format >> field >> symmetry;
  if (banner != "%%MatrixMarket" || lower(object) != "matrix")
    fail(name, lineno, "missing %%MatrixMarket matrix banner");
  format = lower(format);
  field = lower(field);
  symmetry = lower(symmetry);
  if (field == "complex" || field == "pattern")
    fail(name, lineno, "unsupported field: " + field);
  const bool coordinate = format == "coordinate";
  if (!coordinate && format != "array")
    fail(name, lineno, "unsupported format: " + format);
  const bool symmetric = symmetry == "symmetric";
  const bool skew = symmetry == "skew-symmetric";
  if (!symmetric && !skew && symmetry != "general")
    fail(name, lineno, "unsupported symmetry: " + symmetry);

  // Skip comments.
  do {
    if (!std::getline(in, line)) fail(name, lineno + 1, "missing size line");
    ++lineno;
  } while (!line.empty() && line[0] == '%');

  std::istringstream size_line(line);
  long rows = 0, cols = 0, nnz = 0;
  if (coordinate) {
    if (!(size_line >> rows >> cols >> nnz))
      fail(name, lineno, "bad coordinate size line");
  } else {
    if (!(size_line >> rows >> cols)) fail(name, lineno, "bad array size line");
  }
  if (rows <= 0 || cols <= 0) fail(name, lineno, "non-positive dimensions");

  Matrix m = Matrix::Zero(rows, cols);
  if (coordinate) {
    long seen = 0;
    while (seen < nnz) {
      if (!std::getline(in, line)) fail(name, lineno + 1, "unexpected end of entries");
      ++lineno;
      if (line.empty() || line[0] == '%') continue;
      std::istringstream entry(line);
      long i = 0, j = 0;
      double v = 0.0;
      if (!(entry >> i >> j >> v)) fail(name, lineno, "bad coordinate entry");
      if (i < 1 || i > rows || j < 1 || j > cols)
        fail(name, lineno, "entry index out of range");
      m(i - 1, j - 1) = v;
      if (symmetric && i != j) m(j - 1, i - 1) = v;
      if (skew && i != j) m(j - 1, i - 1) = -v;
      ++seen;
    }
  } else {
    // Array format stores column-major; symmetric variants store the lower triangle.
    for (long j = 0; j < cols; ++j) {
      const long i0 = (symmetric || skew) ? j : 0;
      for (long i = i0; i < rows; ++i) {
        double v = 0.0;
        while (true) {
          if (!(in >> v)) fail(name, lineno, "unexpected end of array entries");
          break;
        }
        m(i, j) = v;
        if (symmetric && i != j) m(j, i) = v;
        if (skew && i != j) m(j, i) = -v;
      }
    }
  }
  return m;
}

void write_matrix_market(const std::string& path, const Matrix& m) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write matrix market file: " + path);
  write_matrix_market(out, m);
}

void write_matrix_market(std::ostream& out, const Matrix& m) {
  out << "%%MatrixMarket matrix array real general\n";
  out << m.rows() << " " << m.cols() << "\n";
  out.precision(17);
  for (Index j = 0; j < m.cols(); ++j)
    for (Index i = 0; i < m.rows(); ++i) out << m(i, j) << "\n";
}

void write_matrix_market_coordinate(const std::string& path, const Matrix& m) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write matrix market file: " + path);
  long nnz = 0;
  for (Index j = 0; j < m.cols(); ++j)
    for (Index i = 0; i < m.rows(); ++i)
      if (m(i, j) != 0.0) ++nnz;
  out << "%%MatrixMarket matrix coordinate real general\n";
  out << m.rows() << " " << m.cols() << " " << nnz << "\n";
  out.precision(17);
  for (Index j = 0; j < m.cols(); ++j)
    for (Index i = 0; i < m.rows(); ++i)
      if (m(i, j) != 0.0) out << i + 1 << " " << j + 1 << " " << m(i, j) << "\n";
}

}  // namespace randrand
