#pragma once

#include <utility>
#include <vector>

#include "repulsor/rng.hpp"
#include "repulsor/tensor.hpp"

namespace repulsor {

struct DenoiserConfig {
  int data_dim = 2;
  int hidden = 128;
  int blocks = 6;
  int tap_index = 4;  // feature read-out after this block (1-based)
  int n_classes = 8;  // data classes; one extra null class is appended
};

// Residual MLP stack conditioned on (t, class). The hidden state after block
// tap_index is exposed for the dispersive regularizer; the tap is read-only,
// so gradients from losses on it flow into blocks 1..tap_index only.
class Denoiser {
 public:
  explicit Denoiser(const DenoiserConfig& cfg);

  const DenoiserConfig& config() const { return cfg_; }
  int null_class() const { return cfg_.n_classes; }

  // Gaussian(0, 0.02) for linears and embeddings, zeros for the output map.
  void init(Rng& rng);

  // Blocks 1..tap_index; post-residual hidden state [B x H].
  Tensor forward_to_tap(const Tensor& xt, const std::vector<double>& t,
                        const std::vector<int>& classes) const;
  // Blocks tap_index+1..blocks and the output projection.
  Tensor forward_from_tap(const Tensor& h_tap) const;

  std::pair<Tensor, Tensor> forward_with_tap(const Tensor& xt,
                                             const std::vector<double>& t,
                                             const std::vector<int>& classes) const;
  Tensor forward(const Tensor& xt, const std::vector<double>& t,
                 const std::vector<int>& classes) const;

  std::vector<Tensor> parameters() const;
  std::vector<std::pair<std::string, Tensor>> named_parameters() const;

  // Interleaved sin/cos of t at geometric frequencies spanning [1, 1e4].
  static std::vector<double> timestep_embedding(double t, int H);

 private:
  struct Block {
    Tensor w1, b1, w2, b2;
  };

  Tensor embed_inputs(const Tensor& xt, const std::vector<double>& t,
                      const std::vector<int>& classes) const;
  static Tensor apply_block(const Block& blk, const Tensor& h);

  DenoiserConfig cfg_;
  Tensor in_w_, in_b_;
  std::vector<Block> blocks_;
  Tensor out_w_, out_b_;
  Tensor class_table_;  // (n_classes + 1) x H, last row is the null class
};

}  // namespace repulsor
