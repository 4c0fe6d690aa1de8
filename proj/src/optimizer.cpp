#include "repulsor/optimizer.hpp"

#include <cmath>
#include <stdexcept>

namespace repulsor {

AdamW::AdamW(std::vector<Tensor> params, double lr, double beta1, double beta2,
             double weight_decay, double eps)
    : params_(std::move(params)),
      lr_(lr),
      beta1_(beta1),
      beta2_(beta2),
      weight_decay_(weight_decay),
      eps_(eps) {
  if (!(lr > 0.0)) throw std::invalid_argument("adamw: lr must be > 0");
  state_.resize(params_.size());
  for (size_t i = 0; i < params_.size(); ++i) {
    state_[i].m.assign(params_[i].numel(), 0.0);
    state_[i].v.assign(params_[i].numel(), 0.0);
  }
}

void AdamW::zero_grad() {
  for (auto& p : params_) p.zero_grad();
}

void AdamW::step() {
  ++t_;
  const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (size_t i = 0; i < params_.size(); ++i) {
    auto& p = params_[i];
    auto& s = state_[i];
    const bool has_grad = p.has_grad();
    auto& data = p.data();
    for (int j = 0; j < p.numel(); ++j) {
      const double g = has_grad ? p.grad()[j] : 0.0;
      s.m[j] = beta1_ * s.m[j] + (1.0 - beta1_) * g;
      s.v[j] = beta2_ * s.v[j] + (1.0 - beta2_) * g * g;
      const double mhat = s.m[j] / bc1;
      const double vhat = s.v[j] / bc2;
      data[j] -= lr_ * (mhat / (std::sqrt(vhat) + eps_) + weight_decay_ * data[j]);
    }
  }
}

}  // namespace repulsor
