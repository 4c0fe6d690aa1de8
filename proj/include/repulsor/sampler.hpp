#pragma once

#include <functional>
#include <vector>

#include "repulsor/denoiser.hpp"
#include "repulsor/process.hpp"
#include "repulsor/rng.hpp"
#include "repulsor/tensor.hpp"

namespace repulsor {

struct SamplerConfig {
  int steps = 250;
  double guidance_w = 1.5;
};

// Value-level velocity field; sampling never builds a gradient graph.
using VelocityField = std::function<Tensor(const Tensor& x, double t)>;

// steps intervals from `from` to `to` inclusive (steps + 1 points).
std::vector<double> linear_grid(double from, double to, int steps);

// u + w * (cond - u); w == 1 returns the conditional prediction unchanged.
Tensor cfg_predict(const Denoiser& net, const Tensor& xt, double t,
                   const std::vector<int>& classes, double w);

// Classic two-stage Heun: Euler predictor, trapezoid corrector, applied per
// interval; the final interval gets the same plain step.
Tensor heun_integrate(const VelocityField& field, const Tensor& x_init,
                      const std::vector<double>& grid);

// Draws standard Gaussian starting points (one per class entry) and
// integrates the guided field from the noise endpoint to the data endpoint.
// A class entry < 0 selects the null (unconditional) class.
Tensor sample_classes(const Denoiser& net, const NoiseProcess& process,
                      const SamplerConfig& cfg, const std::vector<int>& classes,
                      Rng& rng);

// Single-class convenience wrapper.
Tensor sample(const Denoiser& net, const NoiseProcess& process,
              const SamplerConfig& cfg, int n, int class_id, Rng& rng);

}  // namespace repulsor
