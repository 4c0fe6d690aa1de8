#include "repulsor/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace repulsor {

std::vector<double> linear_grid(double from, double to, int steps) {
  if (steps < 1) throw std::invalid_argument("linear_grid: steps must be >= 1");
  std::vector<double> g(steps + 1);
  for (int i = 0; i <= steps; ++i)
    g[i] = from + (to - from) * static_cast<double>(i) / steps;
  g.back() = to;
  return g;
}

Tensor cfg_predict(const Denoiser& net, const Tensor& xt, double t,
                   const std::vector<int>& classes, double w) {
  NoGradGuard ng;
  const std::vector<double> times(xt.rows(), t);
  Tensor cond = net.forward(xt, times, classes);
  if (w == 1.0) return cond;
  const std::vector<int> null_ids(xt.rows(), net.null_class());
  Tensor uncond = net.forward(xt, times, null_ids);
  Tensor out = Tensor::zeros(cond.shape());
  for (int i = 0; i < out.numel(); ++i) {
    const double u = uncond.data()[i];
    out.data()[i] = u + w * (cond.data()[i] - u);
  }
  return out;
}

Tensor heun_integrate(const VelocityField& field, const Tensor& x_init,
                      const std::vector<double>& grid) {
  if (grid.size() < 2)
    throw std::invalid_argument("heun_integrate: grid needs at least two points");
  const bool increasing = grid[1] > grid[0];
  for (size_t i = 0; i + 1 < grid.size(); ++i)
    if ((grid[i + 1] > grid[i]) != increasing || grid[i + 1] == grid[i])
      throw std::invalid_argument("heun_integrate: grid must be strictly monotone");

  NoGradGuard ng;
  Tensor x = Tensor::from(x_init.shape(), x_init.data());
  const int n = x.numel();
  for (size_t s = 0; s + 1 < grid.size(); ++s) {
    const double t0 = grid[s], t1 = grid[s + 1], h = t1 - t0;
    Tensor k1 = field(x, t0);
    Tensor xe = Tensor::zeros(x.shape());
    for (int i = 0; i < n; ++i) xe.data()[i] = x.data()[i] + h * k1.data()[i];
    Tensor k2 = field(xe, t1);
    for (int i = 0; i < n; ++i)
      x.data()[i] += 0.5 * h * (k1.data()[i] + k2.data()[i]);
  }
  return x;
}

namespace {

// Continuous-time view of the discrete ddpm schedule for the probability-flow
// ODE: rate(t) = T * beta_ceil(tT), abar(t) from the precomputed table.
struct DdpmRates {
  const NoiseProcess* p;
  double rate(double t) const {
    const int s = std::clamp(static_cast<int>(std::ceil(t * p->T)), 1, p->T);
    return p->T * p->betas[static_cast<size_t>(s) - 1];
  }
  double abar(double t) const {
    const int s = std::clamp(static_cast<int>(std::ceil(t * p->T)), 1, p->T);
    return p->alpha_bars[static_cast<size_t>(s) - 1];
  }
};

}  // namespace

Tensor sample_classes(const Denoiser& net, const NoiseProcess& process,
                      const SamplerConfig& cfg, const std::vector<int>& class_ids,
                      Rng& rng) {
  if (cfg.steps < 1) throw std::invalid_argument("sample: steps must be >= 1");
  const int n = static_cast<int>(class_ids.size());
  if (n < 1) throw std::invalid_argument("sample: empty class list");
  const int d = net.config().data_dim;
  std::vector<int> classes(class_ids);
  for (int& c : classes) {
    if (c >= net.config().n_classes)
      throw std::out_of_range("sample: class id out of range");
    if (c < 0) c = net.null_class();
  }
  const double w = cfg.guidance_w;

  Tensor x0 = Tensor::zeros({n, d});
  for (double& v : x0.data()) v = rng.normal();

  if (process.kind == ProcessKind::FlowMatching) {
    // The net is a velocity field; integrate from noise (t=1) to data (t=0).
    auto field = [&](const Tensor& x, double t) {
      return cfg_predict(net, x, t, classes, w);
    };
    return heun_integrate(field, x0, linear_grid(1.0, 0.0, cfg.steps));
  }

  // ddpm: probability-flow ODE dx/dt = -1/2 rate(t) (x - eps_hat / sqrt(1-abar)),
  // with the net predicting eps and conditioned on normalized time t.
  DdpmRates rates{&process};
  auto field = [&](const Tensor& x, double t) {
    Tensor eps_hat = cfg_predict(net, x, t, classes, w);
    const double r = rates.rate(t);
    const double inv = 1.0 / std::sqrt(std::max(1e-12, 1.0 - rates.abar(t)));
    Tensor v = Tensor::zeros(x.shape());
    for (int i = 0; i < v.numel(); ++i)
      v.data()[i] = -0.5 * r * (x.data()[i] - inv * eps_hat.data()[i]);
    return v;
  };
  const double t_min = 1.0 / process.T;
  return heun_integrate(field, x0, linear_grid(1.0, t_min, cfg.steps));
}

Tensor sample(const Denoiser& net, const NoiseProcess& process,
              const SamplerConfig& cfg, int n, int class_id, Rng& rng) {
  SamplerConfig c = cfg;
  // the null class needs no guidance: conditional == unconditional
  if (class_id < 0) c.guidance_w = 1.0;
  return sample_classes(net, process, c, std::vector<int>(n, class_id), rng);
}

}  // namespace repulsor
