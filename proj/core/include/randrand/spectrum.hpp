#pragma once

#include "randrand/types.hpp"

#include <vector>

namespace randrand {

enum class TailLaw { poly, step, flat };

/// Synthetic symmetric test matrix A = U diag(lambda) U^T with a prescribed
/// spectrum: an optional head of large eigenvalues, a tail law, an optional
/// spike of decreasing smallest eigenvalues, and optional sign flips for
/// indefinite tests.
struct SpectrumModel {
  Index n = 0;
  std::vector<double> head;
  TailLaw tail_law = TailLaw::flat;
  double tail_alpha = 0.5;   // poly tail: scale * i^(-alpha)
  double tail_scale = 1.0;
  double flat_value = 1.0;
  std::vector<std::pair<double, Index>> steps;  // (value, count); count 0 fills
  Index spike_count = 0;     // replace the last k values with a decaying spike
  double spike_decay = 0.5;
  Index flip_begin = 0;      // 1-based inclusive range of sign flips; 0 = none
  Index flip_end = 0;
  std::uint64_t seed = 0;
};

/// The eigenvalues the model prescribes, in construction order.
std::vector<double> model_eigenvalues(const SpectrumModel& model);

/// count values decaying exponentially from `top` towards `bottom`
/// (bottom excluded), the default head shape for synthetic spectra.
std::vector<double> exponential_head(int count, double top, double bottom);

struct GeneratedSpectrum {
  Matrix a;
  std::vector<double> eigenvalues;  // as prescribed, construction order
};

/// A = U diag(lambda) U^T with U the orthogonal factor of a seeded Gaussian.
GeneratedSpectrum gen_spectrum(const SpectrumModel& model);

}  // namespace randrand
