#include "randrand/spectrum.hpp"

#include "randrand/rng.hpp"

#include <Eigen/QR>

#include <cmath>

namespace randrand {

std::vector<double> exponential_head(int count, double top, double bottom) {
  if (count < 1) return {};
  if (!(top > 0.0) || !(bottom > 0.0) || bottom > top)
    throw ConfigError("exponential_head: need top >= bottom > 0");
  std::vector<double> head(static_cast<std::size_t>(count));
  const double ratio = bottom / top;
  for (int i = 0; i < count; ++i)
    head[static_cast<std::size_t>(i)] =
        top * std::pow(ratio, static_cast<double>(i) / static_cast<double>(count));
  return head;
}

std::vector<double> model_eigenvalues(const SpectrumModel& model) {
  if (model.n < 1) throw ConfigError("SpectrumModel: n >= 1");
  if (static_cast<Index>(model.head.size()) > model.n)
    throw ConfigError("SpectrumModel: head longer than n");
  std::vector<double> lambda = model.head;
  const Index m = model.n - static_cast<Index>(model.head.size());
  switch (model.tail_law) {
    case TailLaw::poly:
      for (Index i = 1; i <= m; ++i)
        lambda.push_back(model.tail_scale *
                         std::pow(static_cast<double>(i), -model.tail_alpha));
      break;
    case TailLaw::flat:
      for (Index i = 0; i < m; ++i) lambda.push_back(model.flat_value);
      break;
    case TailLaw::step: {
      if (model.steps.empty()) throw ConfigError("SpectrumModel: steps empty");
      Index placed = 0;
      for (std::size_t s = 0; s < model.steps.size() && placed < m; ++s) {
        Index count = model.steps[s].second;
        if (count == 0 || s + 1 == model.steps.size())
          count = m - placed;  // fill the remainder
        count = std::min(count, m - placed);
        for (Index i = 0; i < count; ++i) lambda.push_back(model.steps[s].first);
        placed += count;
      }
      if (placed < m)
        for (Index i = placed; i < m; ++i)
          lambda.push_back(model.steps.back().first);
      break;
    }
  }
  if (model.spike_count > 0) {
    if (model.spike_count >= model.n)
      throw ConfigError("SpectrumModel: spike_count < n required");
    const std::size_t start =
        static_cast<std::size_t>(model.n - model.spike_count);
    const double base = lambda[start - 1];
    for (Index k = 0; k < model.spike_count; ++k)
      lambda[start + static_cast<std::size_t>(k)] =
          base * std::pow(model.spike_decay, static_cast<double>(k + 1));
  }
  if (model.flip_begin > 0) {
    if (model.flip_end < model.flip_begin || model.flip_end > model.n)
      throw ConfigError("SpectrumModel: bad flip range");
    for (Index i = model.flip_begin; i <= model.flip_end; ++i)
      lambda[static_cast<std::size_t>(i - 1)] =
          -lambda[static_cast<std::size_t>(i - 1)];
  }
  return lambda;
}

GeneratedSpectrum gen_spectrum(const SpectrumModel& model) {
  GeneratedSpectrum out;
  out.eigenvalues = model_eigenvalues(model);
  const Index n = model.n;
  Matrix g(n, n);
  for (Index j = 0; j < n; ++j)
    for (Index i = 0; i < n; ++i)
      g(i, j) = keyed_normal(model.seed, static_cast<std::uint64_t>(j),
                             static_cast<std::uint64_t>(i));
  Eigen::HouseholderQR<Matrix> qr(g);
  Matrix u = qr.householderQ() * Matrix::Identity(n, n);
  Matrix r = qr.matrixQR();
  for (Index j = 0; j < n; ++j)
    if (r(j, j) < 0.0) u.col(j) = -u.col(j);  // deterministic orientation
  Vector d = Eigen::Map<const Vector>(out.eigenvalues.data(), n);
  out.a = u * d.asDiagonal() * u.transpose();
  out.a = 0.5 * (out.a + out.a.transpose());
  return out;
}

}  // namespace randrand
