#pragma once

#include <utility>
#include <vector>

#include "repulsor/tensor.hpp"

namespace repulsor {

enum class ProcessKind { FlowMatching, Ddpm };

// Noise schedule plus interpolant: how x_t is built from (x0, eps) and what
// the network regresses.
struct NoiseProcess {
  ProcessKind kind = ProcessKind::FlowMatching;
  int T = 0;                       // ddpm only
  std::vector<double> betas;       // 1-based conceptually; betas[t-1]
  std::vector<double> alpha_bars;  // alpha_bars[t-1] = prod_{s<=t}(1 - beta_s)

  double alpha_bar(int t) const;  // 1 <= t <= T
};

NoiseProcess flow_matching_process();

// beta_t linearly interpolated over [beta_min, beta_max] for t = 1..T.
NoiseProcess linear_beta_schedule(int T, double beta_min, double beta_max);

// x_t = sqrt(abar_t) x0 + sqrt(1 - abar_t) eps
Tensor ddpm_forward(const NoiseProcess& p, const Tensor& x0, int t, const Tensor& eps);

// Linear path x_t = (1-t) x0 + t eps with constant velocity target eps - x0.
std::pair<Tensor, Tensor> fm_interpolant(const Tensor& x0, const Tensor& eps, double t);

// Mean squared error over all elements.
Tensor diff_loss(const Tensor& pred, const Tensor& target);

}  // namespace repulsor
