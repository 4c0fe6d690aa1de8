#pragma once

#include <vector>

#include "repulsor/rng.hpp"
#include "repulsor/tensor.hpp"

namespace repulsor {

struct RepulsorParams {
  double tau = 0.5;
  double gamma = 0.25;
  int bank_capacity = 4096;  // K
  int proj_dim = 32;         // D
  int tap_index = 4;         // F_l

  void validate() const;
};

// Single linear map to D dimensions followed by L2 normalization; its output
// rows always have unit norm.
class ProjectionHead {
 public:
  ProjectionHead(int in_dim, int out_dim);

  void init(Rng& rng);

  // h: [B x in_dim] (callers flatten any per-patch structure beforehand).
  Tensor project(const Tensor& h) const;

  Tensor weight() const { return weight_; }
  Tensor bias() const { return bias_; }
  std::vector<Tensor> parameters() const { return {weight_, bias_}; }
  int in_dim() const { return in_dim_; }
  int out_dim() const { return out_dim_; }

 private:
  int in_dim_, out_dim_;
  Tensor weight_;  // in_dim x out_dim
  Tensor bias_;    // out_dim
};

// FIFO queue of K unit-norm negative vectors. Entries are stored detached;
// backward never touches them.
class MemoryBank {
 public:
  MemoryBank(int capacity, int dim);

  int capacity() const { return capacity_; }
  int dim() const { return dim_; }
  int filled() const { return filled_; }
  int head() const { return head_; }
  const std::vector<double>& storage() const { return slots_; }

  // Overwrites the B oldest slots with the rows of z (values only).
  void enqueue(const Tensor& z);

  // The filled slots as a detached [filled x D] tensor, storage order.
  Tensor filled_rows() const;

  // Oldest-to-newest view of the filled slots (testing aid).
  std::vector<std::vector<double>> rows_oldest_first() const;

 private:
  int capacity_, dim_;
  int head_ = 0;
  int filled_ = 0;
  std::vector<double> slots_;  // capacity x dim
};

// Eq-style bank repulsion: log( (1/(B*K)) sum_{i,k} exp(-||z_i - m_k||^2 / tau) )
// over the filled slots. Gradient flows to z only; bank rows are constants.
Tensor dispersive_loss_bank(const Tensor& z, const Tensor& bank_rows, double tau);
Tensor dispersive_loss_bank(const Tensor& z, const MemoryBank& bank, double tau);

// In-batch variant over all ordered pairs including i == j.
Tensor dispersive_loss_inbatch(const Tensor& z, double tau);

// Reference InfoNCE with cosine similarity; denominator runs over the
// negatives plus the positive. Test oracle only - plain values, no graph.
double infonce_reference(const std::vector<std::vector<double>>& z,
                         const std::vector<std::vector<double>>& z_pos,
                         const std::vector<std::vector<double>>& negatives,
                         double tau);

// l_diff + gamma * l_disp
Tensor total_loss(const Tensor& l_diff, const Tensor& l_disp, double gamma);

}  // namespace repulsor
