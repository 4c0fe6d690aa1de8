#include "repulsor/process.hpp"

#include <cmath>
#include <stdexcept>

namespace repulsor {

double NoiseProcess::alpha_bar(int t) const {
  if (t < 1 || t > T) throw std::out_of_range("alpha_bar: timestep out of range");
  return alpha_bars[static_cast<size_t>(t) - 1];
}

NoiseProcess flow_matching_process() {
  NoiseProcess p;
  p.kind = ProcessKind::FlowMatching;
  return p;
}

NoiseProcess linear_beta_schedule(int T, double beta_min, double beta_max) {
  if (T < 1) throw std::invalid_argument("linear_beta_schedule: T must be >= 1");
  if (!(beta_min > 0.0 && beta_min <= beta_max && beta_max < 1.0))
    throw std::invalid_argument("linear_beta_schedule: need 0 < beta_min <= beta_max < 1");
  NoiseProcess p;
  p.kind = ProcessKind::Ddpm;
  p.T = T;
  p.betas.resize(T);
  p.alpha_bars.resize(T);
  double abar = 1.0;
  for (int t = 1; t <= T; ++t) {
    const double beta =
        T == 1 ? beta_min
               : beta_min + (beta_max - beta_min) * (t - 1) / static_cast<double>(T - 1);
    p.betas[t - 1] = beta;
    abar *= 1.0 - beta;
    p.alpha_bars[t - 1] = abar;
  }
  return p;
}

Tensor ddpm_forward(const NoiseProcess& p, const Tensor& x0, int t, const Tensor& eps) {
  if (x0.shape() != eps.shape())
    throw std::invalid_argument("ddpm_forward: eps shape differs from x0");
  const double abar = p.alpha_bar(t);
  return add(mul(x0, std::sqrt(abar)), mul(eps, std::sqrt(1.0 - abar)));
}

std::pair<Tensor, Tensor> fm_interpolant(const Tensor& x0, const Tensor& eps, double t) {
  if (x0.shape() != eps.shape())
    throw std::invalid_argument("fm_interpolant: eps shape differs from x0");
  if (!(t >= 0.0 && t <= 1.0))
    throw std::domain_error("fm_interpolant: t outside [0,1]");
  Tensor xt = add(mul(x0, 1.0 - t), mul(eps, t));
  Tensor v = sub(eps, x0);
  return {xt, v};
}

Tensor diff_loss(const Tensor& pred, const Tensor& target) {
  if (pred.shape() != target.shape())
    throw std::invalid_argument("diff_loss: shape mismatch");
  Tensor d = sub(pred, target);
  return mean(mul(d, d));
}

}  // namespace repulsor
