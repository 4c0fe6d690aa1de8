#include "repulsor/denoiser.hpp"

#include <cmath>
#include <stdexcept>

namespace repulsor {

namespace {

Tensor gaussian(std::vector<int> shape, double std_dev, Rng& rng) {
  Tensor t = Tensor::zeros(std::move(shape), true);
  for (double& v : t.data()) v = std_dev * rng.normal();
  return t;
}

}  // namespace

Denoiser::Denoiser(const DenoiserConfig& cfg) : cfg_(cfg) {
  if (cfg_.blocks < 1) throw std::invalid_argument("denoiser: blocks must be >= 1");
  if (cfg_.tap_index < 1 || cfg_.tap_index > cfg_.blocks)
    throw std::invalid_argument("denoiser: tap_index out of range");
  if (cfg_.hidden % 2 != 0)
    throw std::invalid_argument("denoiser: hidden must be even for the time embedding");
  const int h = cfg_.hidden;
  in_w_ = Tensor::zeros({cfg_.data_dim, h}, true);
  in_b_ = Tensor::zeros({h}, true);
  blocks_.resize(cfg_.blocks);
  for (auto& b : blocks_) {
    b.w1 = Tensor::zeros({h, h}, true);
    b.b1 = Tensor::zeros({h}, true);
    b.w2 = Tensor::zeros({h, h}, true);
    b.b2 = Tensor::zeros({h}, true);
  }
  out_w_ = Tensor::zeros({h, cfg_.data_dim}, true);
  out_b_ = Tensor::zeros({cfg_.data_dim}, true);
  class_table_ = Tensor::zeros({cfg_.n_classes + 1, h}, true);
}

void Denoiser::init(Rng& rng) {
  constexpr double kStd = 0.02;
  const int h = cfg_.hidden;
  in_w_ = gaussian({cfg_.data_dim, h}, kStd, rng);
  in_b_ = Tensor::zeros({h}, true);
  for (auto& b : blocks_) {
    b.w1 = gaussian({h, h}, kStd, rng);
    b.b1 = Tensor::zeros({h}, true);
    b.w2 = gaussian({h, h}, kStd, rng);
    b.b2 = Tensor::zeros({h}, true);
  }
  // zero-initialized output map: pred == 0 at step 0, early loss stays finite
  out_w_ = Tensor::zeros({h, cfg_.data_dim}, true);
  out_b_ = Tensor::zeros({cfg_.data_dim}, true);
  class_table_ = gaussian({cfg_.n_classes + 1, h}, kStd, rng);
}

std::vector<double> Denoiser::timestep_embedding(double t, int H) {
  if (H % 2 != 0) throw std::invalid_argument("timestep_embedding: H must be even");
  const int half = H / 2;
  std::vector<double> e(H);
  for (int i = 0; i < half; ++i) {
    const double freq =
        half == 1 ? 1.0 : std::pow(1e4, static_cast<double>(i) / (half - 1));
    e[2 * i] = std::sin(t * freq);
    e[2 * i + 1] = std::cos(t * freq);
  }
  return e;
}

Tensor Denoiser::embed_inputs(const Tensor& xt, const std::vector<double>& t,
                              const std::vector<int>& classes) const {
  const int b = xt.rows(), h = cfg_.hidden;
  if (static_cast<int>(t.size()) != b || static_cast<int>(classes.size()) != b)
    throw std::invalid_argument("denoiser: batch sizes of xt, t, classes differ");
  Tensor temb = Tensor::zeros({b, h});
  for (int i = 0; i < b; ++i) {
    auto e = timestep_embedding(t[i], h);
    std::copy(e.begin(), e.end(), temb.data().begin() + static_cast<size_t>(i) * h);
  }
  Tensor hidden = add_rows(matmul(xt, in_w_), in_b_);
  hidden = add(hidden, temb);
  hidden = add(hidden, embedding_lookup(class_table_, classes));
  return hidden;
}

Tensor Denoiser::apply_block(const Block& blk, const Tensor& h) {
  Tensor u = silu(add_rows(matmul(h, blk.w1), blk.b1));
  return add(h, add_rows(matmul(u, blk.w2), blk.b2));
}

Tensor Denoiser::forward_to_tap(const Tensor& xt, const std::vector<double>& t,
                                const std::vector<int>& classes) const {
  Tensor h = embed_inputs(xt, t, classes);
  for (int i = 0; i < cfg_.tap_index; ++i) h = apply_block(blocks_[i], h);
  return h;
}

Tensor Denoiser::forward_from_tap(const Tensor& h_tap) const {
  Tensor h = h_tap;
  for (int i = cfg_.tap_index; i < cfg_.blocks; ++i) h = apply_block(blocks_[i], h);
  return add_rows(matmul(h, out_w_), out_b_);
}

std::pair<Tensor, Tensor> Denoiser::forward_with_tap(
    const Tensor& xt, const std::vector<double>& t,
    const std::vector<int>& classes) const {
  Tensor h_tap = forward_to_tap(xt, t, classes);
  return {forward_from_tap(h_tap), h_tap};
}

Tensor Denoiser::forward(const Tensor& xt, const std::vector<double>& t,
                         const std::vector<int>& classes) const {
  return forward_from_tap(forward_to_tap(xt, t, classes));
}

std::vector<Tensor> Denoiser::parameters() const {
  std::vector<Tensor> ps;
  for (auto& [name, t] : named_parameters()) ps.push_back(t);
  return ps;
}

std::vector<std::pair<std::string, Tensor>> Denoiser::named_parameters() const {
  std::vector<std::pair<std::string, Tensor>> ps;
  ps.emplace_back("net/in_proj/weight", in_w_);
  ps.emplace_back("net/in_proj/bias", in_b_);
  for (size_t i = 0; i < blocks_.size(); ++i) {
    const std::string p = "net/block" + std::to_string(i) + "/";
    ps.emplace_back(p + "w1", blocks_[i].w1);
    ps.emplace_back(p + "b1", blocks_[i].b1);
    ps.emplace_back(p + "w2", blocks_[i].w2);
    ps.emplace_back(p + "b2", blocks_[i].b2);
  }
  ps.emplace_back("net/out_proj/weight", out_w_);
  ps.emplace_back("net/out_proj/bias", out_b_);
  ps.emplace_back("net/class_table", class_table_);
  return ps;
}

}  // namespace repulsor
