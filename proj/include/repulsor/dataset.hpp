#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "repulsor/metrics.hpp"

namespace repulsor {

// Known 2-D toy datasets: gauss8, checkerboard, moons, rings.
SampleSet make_dataset(const std::string& name, int n, uint64_t seed,
                       bool with_labels);

int dataset_class_count(const std::string& name);

// Analytic mode centers where the construction defines them (gauss8,
// checkerboard, rings); empty for datasets without natural point modes.
std::vector<std::vector<double>> dataset_mode_centers(const std::string& name);

// Per-class sample means; fallback mode centers for datasets without
// analytic ones.
std::vector<std::vector<double>> class_means(const SampleSet& s);

}  // namespace repulsor
