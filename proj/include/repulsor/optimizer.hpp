#pragma once

#include <vector>

#include "repulsor/tensor.hpp"

namespace repulsor {

// Adam with decoupled weight decay and bias correction. A parameter whose
// grad buffer is absent for a step is treated as having zero gradient.
class AdamW {
 public:
  AdamW(std::vector<Tensor> params, double lr, double beta1 = 0.9,
        double beta2 = 0.95, double weight_decay = 0.0, double eps = 1e-8);

  void zero_grad();
  void step();

  long step_count() const { return t_; }

 private:
  struct Slot {
    std::vector<double> m, v;
  };
  std::vector<Tensor> params_;
  std::vector<Slot> state_;
  double lr_, beta1_, beta2_, weight_decay_, eps_;
  long t_ = 0;
};

}  // namespace repulsor
