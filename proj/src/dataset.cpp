#include "repulsor/dataset.hpp"

#include <cmath>
#include <stdexcept>

#include "repulsor/rng.hpp"

namespace repulsor {

namespace {

constexpr double kPi = 3.14159265358979323846;

void push_point(SampleSet& s, double x, double y, int label, bool with_labels) {
  s.points.push_back(x);
  s.points.push_back(y);
  if (with_labels) s.labels.push_back(label);
}

// 8 Gaussians (std 0.05) at radius 1; stratified so every mode gets its share.
SampleSet gauss8(int n, Rng& rng, bool with_labels) {
  SampleSet s;
  s.dim = 2;
  const int per = n / 8;
  for (int k = 0; k < 8; ++k) {
    const int count = k < 8 - 1 ? per : n - 7 * per;
    const double cx = std::cos(2.0 * kPi * k / 8.0);
    const double cy = std::sin(2.0 * kPi * k / 8.0);
    for (int i = 0; i < count; ++i)
      push_point(s, cx + 0.05 * rng.normal(), cy + 0.05 * rng.normal(), k, with_labels);
  }
  return s;
}

// 8 active cells of a 4x4 grid over [-2,2]^2 (checkerboard parity); label is
// the active-cell index.
SampleSet checkerboard(int n, Rng& rng, bool with_labels) {
  SampleSet s;
  s.dim = 2;
  std::vector<std::pair<int, int>> cells;
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j)
      if ((i + j) % 2 == 0) cells.emplace_back(i, j);
  const int per = n / static_cast<int>(cells.size());
  for (size_t c = 0; c < cells.size(); ++c) {
    const int count =
        c + 1 < cells.size() ? per : n - per * static_cast<int>(cells.size() - 1);
    for (int i = 0; i < count; ++i) {
      const double x = -2.0 + cells[c].first + rng.uniform();
      const double y = -2.0 + cells[c].second + rng.uniform();
      push_point(s, x, y, static_cast<int>(c), with_labels);
    }
  }
  return s;
}

// Two interleaved half-moons, noise std 0.05, scaled into [-2,2]^2.
SampleSet moons(int n, Rng& rng, bool with_labels) {
  SampleSet s;
  s.dim = 2;
  for (int i = 0; i < n; ++i) {
    const int label = i % 2;
    const double a = kPi * rng.uniform();
    double x, y;
    if (label == 0) {
      x = std::cos(a);
      y = std::sin(a);
    } else {
      x = 1.0 - std::cos(a);
      y = 0.5 - std::sin(a);
    }
    x = (x - 0.5) * 1.3 + 0.05 * rng.normal();
    y = (y - 0.25) * 1.3 + 0.05 * rng.normal();
    push_point(s, x, y, label, with_labels);
  }
  return s;
}

// Two concentric rings, radial noise std 0.05.
SampleSet rings(int n, Rng& rng, bool with_labels) {
  SampleSet s;
  s.dim = 2;
  const double radii[2] = {0.8, 1.8};
  for (int i = 0; i < n; ++i) {
    const int label = i % 2;
    const double a = 2.0 * kPi * rng.uniform();
    const double r = radii[label] + 0.05 * rng.normal();
    push_point(s, r * std::cos(a), r * std::sin(a), label, with_labels);
  }
  return s;
}

}  // namespace

SampleSet make_dataset(const std::string& name, int n, uint64_t seed,
                       bool with_labels) {
  if (n < 1) throw std::invalid_argument("make_dataset: n must be >= 1");
  Rng rng(seed, "dataset/" + name);
  SampleSet s;
  if (name == "gauss8") {
    s = gauss8(n, rng, with_labels);
  } else if (name == "checkerboard") {
    s = checkerboard(n, rng, with_labels);
  } else if (name == "moons") {
    s = moons(n, rng, with_labels);
  } else if (name == "rings") {
    s = rings(n, rng, with_labels);
  } else {
    throw std::invalid_argument("make_dataset: unknown dataset '" + name + "'");
  }
  s.validate();
  return s;
}

int dataset_class_count(const std::string& name) {
  if (name == "gauss8" || name == "checkerboard") return 8;
  if (name == "moons" || name == "rings") return 2;
  throw std::invalid_argument("dataset_class_count: unknown dataset '" + name + "'");
}

std::vector<std::vector<double>> dataset_mode_centers(const std::string& name) {
  std::vector<std::vector<double>> centers;
  if (name == "gauss8") {
    for (int k = 0; k < 8; ++k)
      centers.push_back({std::cos(2.0 * kPi * k / 8.0), std::sin(2.0 * kPi * k / 8.0)});
  } else if (name == "checkerboard") {
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j)
        if ((i + j) % 2 == 0) centers.push_back({-1.5 + i, -1.5 + j});
  }
  return centers;
}

std::vector<std::vector<double>> class_means(const SampleSet& s) {
  s.validate();
  if (s.labels.empty())
    throw std::invalid_argument("class_means: sample set has no labels");
  int n_classes = 0;
  for (int l : s.labels) n_classes = std::max(n_classes, l + 1);
  std::vector<std::vector<double>> means(n_classes, std::vector<double>(s.dim, 0.0));
  std::vector<int> counts(n_classes, 0);
  for (int i = 0; i < s.size(); ++i) {
    ++counts[s.labels[i]];
    for (int j = 0; j < s.dim; ++j) means[s.labels[i]][j] += s.row(i)[j];
  }
  for (int c = 0; c < n_classes; ++c)
    for (int j = 0; j < s.dim; ++j)
      if (counts[c] > 0) means[c][j] /= counts[c];
  return means;
}

}  // namespace repulsor
