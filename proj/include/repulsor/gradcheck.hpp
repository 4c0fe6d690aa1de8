#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "repulsor/tensor.hpp"

namespace repulsor {

struct GradCheckResult {
  std::string name;
  double max_rel_err = 0.0;
  double tol = 0.0;
  bool pass = false;
};

// Central finite differences against backward() for one scalar-valued
// closure. The closure must rebuild its graph from the current data of
// `inputs` on every call. Error is |analytic - fd| / max(1, |analytic|, |fd|).
double gradcheck(const std::function<Tensor()>& loss,
                 const std::vector<Tensor>& inputs, double h = 1e-6);

// The standard suite: every differentiable op, the projection head, both
// dispersive losses, and a small end-to-end denoiser objective.
std::vector<GradCheckResult> run_gradient_suite(uint64_t seed = 7);

}  // namespace repulsor
