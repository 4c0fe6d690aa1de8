#pragma once

#include <cstdint>
#include <vector>

#include "repulsor/rng.hpp"
#include "repulsor/tensor.hpp"

namespace repulsor {

struct SampleSet {
  int dim = 0;
  std::vector<double> points;  // row-major, size() * dim
  std::vector<int> labels;     // optional, empty or size()

  int size() const { return dim == 0 ? 0 : static_cast<int>(points.size()) / dim; }
  const double* row(int i) const { return points.data() + static_cast<size_t>(i) * dim; }
  void validate() const;  // finite values only, consistent label count
};

// Mean over random unit directions of the 1-D 2-Wasserstein distance between
// the projected empirical distributions. Unequal sizes are handled by
// subsampling the larger set with the given seed.
double sliced_wasserstein(const SampleSet& a, const SampleSet& b,
                          int n_projections, uint64_t seed);

// 2 E||X-Y|| - E||X-X'|| - E||Y-Y'|| via all-pairs means.
double energy_distance(const SampleSet& a, const SampleSet& b);

struct DispersionDiagnostic {
  double mean_pairwise_cos = 0.0;
  double uniformity = 0.0;  // log mean_{i!=j} exp(-||z_i - z_j||^2)
};

// z: [B x D] unit-norm rows, B >= 2.
DispersionDiagnostic dispersion_diagnostic(const Tensor& z);

struct ModeCoverage {
  int covered = 0;
  double high_quality_fraction = 0.0;
};

ModeCoverage mode_coverage(const SampleSet& samples,
                           const std::vector<std::vector<double>>& centers,
                           double radius);

}  // namespace repulsor
