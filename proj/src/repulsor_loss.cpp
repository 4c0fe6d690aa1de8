#include "repulsor/repulsor_loss.hpp"

#include <cmath>
#include <stdexcept>

namespace repulsor {

void RepulsorParams::validate() const {
  if (!(tau > 0.0)) throw std::invalid_argument("repulsor: tau must be > 0");
  if (gamma < 0.0) throw std::invalid_argument("repulsor: gamma must be >= 0");
  if (bank_capacity < 1) throw std::invalid_argument("repulsor: K must be >= 1");
  if (proj_dim < 1) throw std::invalid_argument("repulsor: D must be >= 1");
}

ProjectionHead::ProjectionHead(int in_dim, int out_dim)
    : in_dim_(in_dim), out_dim_(out_dim) {
  if (in_dim < 1 || out_dim < 1)
    throw std::invalid_argument("projection head: dimensions must be positive");
  weight_ = Tensor::zeros({in_dim, out_dim}, true);
  bias_ = Tensor::zeros({out_dim}, true);
}

void ProjectionHead::init(Rng& rng) {
  for (double& v : weight_.data()) v = 0.02 * rng.normal();
  std::fill(bias_.data().begin(), bias_.data().end(), 0.0);
}

Tensor ProjectionHead::project(const Tensor& h) const {
  if (h.shape().size() != 2 || h.cols() != in_dim_)
    throw std::invalid_argument("projection head: flattened feature length mismatch");
  return l2_normalize_rows(add_rows(matmul(h, weight_), bias_));
}

MemoryBank::MemoryBank(int capacity, int dim) : capacity_(capacity), dim_(dim) {
  if (capacity < 1 || dim < 1)
    throw std::invalid_argument("memory bank: capacity and dim must be positive");
  slots_.assign(static_cast<size_t>(capacity) * dim, 0.0);
}

void MemoryBank::enqueue(const Tensor& z) {
  if (z.shape().size() != 2 || z.cols() != dim_)
    throw std::invalid_argument("memory bank: row dimension mismatch");
  const int b = z.rows();
  if (b > capacity_)
    throw std::invalid_argument("memory bank: batch larger than capacity");
  const auto& d = z.data();
  for (int i = 0; i < b; ++i) {
    double sq = 0.0;
    for (int j = 0; j < dim_; ++j) {
      const double v = d[static_cast<size_t>(i) * dim_ + j];
      sq += v * v;
    }
    if (std::fabs(std::sqrt(sq) - 1.0) > 1e-7)
      throw std::invalid_argument("memory bank: rows must be unit-norm");
  }
  for (int i = 0; i < b; ++i) {
    std::copy_n(d.begin() + static_cast<size_t>(i) * dim_, dim_,
                slots_.begin() + static_cast<size_t>(head_) * dim_);
    head_ = (head_ + 1) % capacity_;
  }
  filled_ = std::min(filled_ + b, capacity_);
}

Tensor MemoryBank::filled_rows() const {
  std::vector<double> out(slots_.begin(), slots_.begin() + static_cast<size_t>(filled_) * dim_);
  return Tensor::from({filled_, dim_}, std::move(out));
}

std::vector<std::vector<double>> MemoryBank::rows_oldest_first() const {
  std::vector<std::vector<double>> rows;
  rows.reserve(filled_);
  // when full, the oldest slot is the one head points at
  const int start = filled_ == capacity_ ? head_ : 0;
  for (int i = 0; i < filled_; ++i) {
    const int s = (start + i) % capacity_;
    rows.emplace_back(slots_.begin() + static_cast<size_t>(s) * dim_,
                      slots_.begin() + static_cast<size_t>(s + 1) * dim_);
  }
  return rows;
}

Tensor dispersive_loss_bank(const Tensor& z, const Tensor& bank_rows, double tau) {
  if (!(tau > 0.0)) throw std::invalid_argument("dispersive loss: tau must be > 0");
  if (bank_rows.rows() < 1)
    throw std::invalid_argument("dispersive loss: bank is empty");
  Tensor dist = pairwise_sqdist(z, bank_rows);  // bank is constant
  return log(mean(exp(mul(dist, -1.0 / tau))));
}

Tensor dispersive_loss_bank(const Tensor& z, const MemoryBank& bank, double tau) {
  if (bank.filled() < 1)
    throw std::invalid_argument("dispersive loss: bank is empty");
  return dispersive_loss_bank(z, bank.filled_rows(), tau);
}

Tensor dispersive_loss_inbatch(const Tensor& z, double tau) {
  if (!(tau > 0.0)) throw std::invalid_argument("dispersive loss: tau must be > 0");
  if (z.rows() < 2)
    throw std::invalid_argument("dispersive loss: in-batch variant needs B >= 2");
  Tensor dist = pairwise_sqdist_bilateral(z, z);
  return log(mean(exp(mul(dist, -1.0 / tau))));
}

double infonce_reference(const std::vector<std::vector<double>>& z,
                         const std::vector<std::vector<double>>& z_pos,
                         const std::vector<std::vector<double>>& negatives,
                         double tau) {
  if (!(tau > 0.0)) throw std::invalid_argument("infonce: tau must be > 0");
  if (negatives.empty()) throw std::invalid_argument("infonce: negatives are empty");
  if (z.size() != z_pos.size())
    throw std::invalid_argument("infonce: z and z_pos sizes differ");
  auto cosine = [](const std::vector<double>& a, const std::vector<double>& b) {
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (size_t i = 0; i < a.size(); ++i) {
      dot += a[i] * b[i];
      na += a[i] * a[i];
      nb += b[i] * b[i];
    }
    return dot / (std::sqrt(na) * std::sqrt(nb));
  };
  double acc = 0.0;
  for (size_t i = 0; i < z.size(); ++i) {
    const double pos = std::exp(cosine(z[i], z_pos[i]) / tau);
    double denom = pos;
    for (const auto& v : negatives) denom += std::exp(cosine(z[i], v) / tau);
    acc += std::log(pos / denom);
  }
  return -acc / static_cast<double>(z.size());
}

Tensor total_loss(const Tensor& l_diff, const Tensor& l_disp, double gamma) {
  if (gamma < 0.0) throw std::invalid_argument("total loss: gamma must be >= 0");
  return add(l_diff, mul(l_disp, gamma));
}

}  // namespace repulsor
