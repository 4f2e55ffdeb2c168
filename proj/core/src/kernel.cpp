#include "randrand/kernel.hpp"

#include <cmath>
#include <fstream>
#include <memory>
#include <sstream>

namespace randrand {

std::vector<Vector> read_points_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open points file: " + path);
  std::vector<Vector> points;
  std::string line;
  long lineno = 0;
  Index dim = -1;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream row(line);
    std::vector<double> coords;
    std::string tok;
    bool label_seen = false;
    while (row >> tok) {
      try {
        std::size_t used = 0;
        const double v = std::stod(tok, &used);
        if (used != tok.size()) throw std::invalid_argument(tok);
        if (label_seen)
          throw ConfigError("points file " + path + ":" + std::to_string(lineno) +
                            ": numeric field after label");
        coords.push_back(v);
      } catch (const std::invalid_argument&) {
        label_seen = true;  // trailing label, ignored
      }
    }
    if (coords.empty()) continue;
    if (dim < 0) dim = static_cast<Index>(coords.size());
    if (static_cast<Index>(coords.size()) != dim)
      throw ConfigError("points file " + path + ":" + std::to_string(lineno) +
                        ": expected " + std::to_string(dim) + " coordinates, got " +
                        std::to_string(coords.size()));
    points.push_back(Eigen::Map<const Vector>(coords.data(),
                                              static_cast<Index>(coords.size())));
  }
  if (points.empty())
    throw ConfigError("points file " + path + ": no points parsed");
  return points;
}

namespace {

double rbf_entry(const Vector& a, const Vector& b, double gamma) {
  return std::exp(-gamma * (a - b).squaredNorm());
}

}  // namespace

LinearOperator rbf_kernel_operator(std::vector<Vector> points,
                                   double gamma_kernel, Index block_size) {
  if (block_size < 1) throw ConfigError("rbf_kernel_operator: block_size >= 1");
  const Index n = static_cast<Index>(points.size());
  auto pts = std::make_shared<const std::vector<Vector>>(std::move(points));
  auto apply = [pts, gamma_kernel, block_size, n](const Vector& v) {
    Vector out = Vector::Zero(n);
    Matrix block(n, std::min(block_size, n));
    for (Index j0 = 0; j0 < n; j0 += block_size) {
      const Index bs = std::min(block_size, n - j0);
      for (Index j = 0; j < bs; ++j)
        for (Index i = 0; i < n; ++i)
          block(i, j) = rbf_entry((*pts)[static_cast<std::size_t>(i)],
                                  (*pts)[static_cast<std::size_t>(j0 + j)],
                                  gamma_kernel);
      out.noalias() += block.leftCols(bs) * v.segment(j0, bs);
    }
    return Vector(out / static_cast<double>(n));
  };
  LinearOperator op(n, true, Definiteness::spd, std::move(apply), nullptr,
                    static_cast<double>(n) * static_cast<double>(n));
  // Column sampling never needs a full matvec on kernel matrices.
  return op.with_columns([pts, gamma_kernel](const std::vector<Index>& cols) {
    return rbf_kernel_columns(*pts, gamma_kernel, cols);
  });
}

LinearOperator rbf_kernel_operator_from_file(const std::string& path,
                                             double gamma_kernel,
                                             Index block_size) {
  return rbf_kernel_operator(read_points_file(path), gamma_kernel, block_size);
}

Matrix rbf_kernel_columns(const std::vector<Vector>& points, double gamma_kernel,
                          const std::vector<Index>& columns) {
  const Index n = static_cast<Index>(points.size());
  Matrix out(n, static_cast<Index>(columns.size()));
  for (std::size_t c = 0; c < columns.size(); ++c) {
    const Index j = columns[c];
    if (j < 0 || j >= n) throw ConfigError("rbf_kernel_columns: index out of range");
    for (Index i = 0; i < n; ++i)
      out(i, static_cast<Index>(c)) =
          rbf_entry(points[static_cast<std::size_t>(i)],
                    points[static_cast<std::size_t>(j)], gamma_kernel);
  }
  return out / static_cast<double>(n);
}

}  // namespace randrand
