#include "repulsor/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace repulsor {

void SampleSet::validate() const {
  if (dim <= 0) throw std::invalid_argument("sample set: dimension must be positive");
  if (points.size() % dim != 0)
    throw std::invalid_argument("sample set: point buffer not a multiple of dim");
  for (double v : points)
    if (!std::isfinite(v)) throw std::invalid_argument("sample set: non-finite value");
  if (!labels.empty() && static_cast<int>(labels.size()) != size())
    throw std::invalid_argument("sample set: label count mismatch");
}

namespace {

// Random subset of k indices out of n (partial Fisher-Yates).
std::vector<int> subsample_indices(int n, int k, Rng& rng) {
  std::vector<int> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  for (int i = 0; i < k; ++i)
    std::swap(idx[i], idx[i + static_cast<int>(rng.below(n - i))]);
  idx.resize(k);
  return idx;
}

double w2_1d(std::vector<double>& pa, std::vector<double>& pb) {
  std::sort(pa.begin(), pa.end());
  std::sort(pb.begin(), pb.end());
  double acc = 0.0;
  for (size_t i = 0; i < pa.size(); ++i) {
    const double d = pa[i] - pb[i];
    acc += d * d;
  }
  return std::sqrt(acc / pa.size());
}

double euclid(const double* a, const double* b, int d) {
  double acc = 0.0;
  for (int i = 0; i < d; ++i) {
    const double v = a[i] - b[i];
    acc += v * v;
  }
  return std::sqrt(acc);
}

double mean_cross_distance(const SampleSet& a, const SampleSet& b) {
  double acc = 0.0;
  for (int i = 0; i < a.size(); ++i)
    for (int j = 0; j < b.size(); ++j) acc += euclid(a.row(i), b.row(j), a.dim);
  return acc / (static_cast<double>(a.size()) * b.size());
}

}  // namespace

double sliced_wasserstein(const SampleSet& a, const SampleSet& b,
                          int n_projections, uint64_t seed) {
  a.validate();
  b.validate();
  if (a.size() == 0 || b.size() == 0)
    throw std::invalid_argument("sliced_wasserstein: empty sample set");
  if (a.dim != b.dim)
    throw std::invalid_argument("sliced_wasserstein: dimension mismatch");
  if (n_projections < 1)
    throw std::invalid_argument("sliced_wasserstein: n_projections must be >= 1");

  Rng rng(seed, "swd");
  const int n = std::min(a.size(), b.size());
  std::vector<int> ia(n), ib(n);
  if (a.size() == n) {
    std::iota(ia.begin(), ia.end(), 0);
  } else {
    ia = subsample_indices(a.size(), n, rng);
  }
  if (b.size() == n) {
    std::iota(ib.begin(), ib.end(), 0);
  } else {
    ib = subsample_indices(b.size(), n, rng);
  }

  const int d = a.dim;
  std::vector<double> dir(d), pa(n), pb(n);
  double acc = 0.0;
  for (int p = 0; p < n_projections; ++p) {
    double norm = 0.0;
    do {
      norm = 0.0;
      for (int j = 0; j < d; ++j) {
        dir[j] = rng.normal();
        norm += dir[j] * dir[j];
      }
      norm = std::sqrt(norm);
    } while (norm < 1e-12);
    for (int j = 0; j < d; ++j) dir[j] /= norm;
    for (int i = 0; i < n; ++i) {
      pa[i] = std::inner_product(dir.begin(), dir.end(), a.row(ia[i]), 0.0);
      pb[i] = std::inner_product(dir.begin(), dir.end(), b.row(ib[i]), 0.0);
    }
    acc += w2_1d(pa, pb);
  }
  return acc / n_projections;
}

double energy_distance(const SampleSet& a, const SampleSet& b) {
  a.validate();
  b.validate();
  if (a.size() == 0 || b.size() == 0)
    throw std::invalid_argument("energy_distance: empty sample set");
  if (a.dim != b.dim)
    throw std::invalid_argument("energy_distance: dimension mismatch");
  return 2.0 * mean_cross_distance(a, b) - mean_cross_distance(a, a) -
         mean_cross_distance(b, b);
}

DispersionDiagnostic dispersion_diagnostic(const Tensor& z) {
  if (z.shape().size() != 2 || z.rows() < 2)
    throw std::invalid_argument("dispersion_diagnostic: need a [B x D] tensor with B >= 2");
  const int b = z.rows(), d = z.cols();
  double cos_acc = 0.0, exp_acc = 0.0;
  for (int i = 0; i < b; ++i) {
    const double* zi = z.data().data() + static_cast<size_t>(i) * d;
    for (int j = 0; j < b; ++j) {
      if (i == j) continue;
      const double* zj = z.data().data() + static_cast<size_t>(j) * d;
      double dot = 0.0, sq = 0.0;
      for (int k = 0; k < d; ++k) {
        dot += zi[k] * zj[k];
        const double df = zi[k] - zj[k];
        sq += df * df;
      }
      cos_acc += dot;
      exp_acc += std::exp(-sq);
    }
  }
  const double pairs = static_cast<double>(b) * (b - 1);
  return {cos_acc / pairs, std::log(exp_acc / pairs)};
}

ModeCoverage mode_coverage(const SampleSet& samples,
                           const std::vector<std::vector<double>>& centers,
                           double radius) {
  samples.validate();
  if (centers.empty()) throw std::invalid_argument("mode_coverage: no centers");
  if (!(radius > 0.0)) throw std::invalid_argument("mode_coverage: radius must be > 0");
  std::vector<bool> hit(centers.size(), false);
  int near_any = 0;
  for (int i = 0; i < samples.size(); ++i) {
    bool any = false;
    for (size_t c = 0; c < centers.size(); ++c) {
      if (static_cast<int>(centers[c].size()) != samples.dim)
        throw std::invalid_argument("mode_coverage: center dimension mismatch");
      if (euclid(samples.row(i), centers[c].data(), samples.dim) <= radius) {
        hit[c] = true;
        any = true;
      }
    }
    if (any) ++near_any;
  }
  ModeCoverage mc;
  for (bool h : hit) mc.covered += h ? 1 : 0;
  mc.high_quality_fraction =
      samples.size() == 0 ? 0.0 : static_cast<double>(near_any) / samples.size();
  return mc;
}

}  // namespace repulsor
