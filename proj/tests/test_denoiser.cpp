#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "repulsor/denoiser.hpp"
#include "repulsor/rng.hpp"

using namespace repulsor;

namespace {

DenoiserConfig small_cfg(int blocks = 3, int tap = 2) {
  DenoiserConfig c;
  c.data_dim = 2;
  c.hidden = 16;
  c.blocks = blocks;
  c.tap_index = tap;
  c.n_classes = 4;
  return c;
}

Tensor rand_batch(int b, int d, Rng& rng) {
  Tensor x = Tensor::zeros({b, d});
  for (double& v : x.data()) v = rng.normal();
  return x;
}

}  // namespace

TEST_CASE("timestep embedding") {
  auto e0 = Denoiser::timestep_embedding(0.0, 8);
  for (int i = 0; i < 4; ++i) {
    CHECK(e0[2 * i] == 0.0);
    CHECK(e0[2 * i + 1] == 1.0);
  }
  auto a = Denoiser::timestep_embedding(0.37, 16);
  auto b = Denoiser::timestep_embedding(0.37, 16);
  CHECK(a == b);

  auto lo = Denoiser::timestep_embedding(0.1, 16);
  auto hi = Denoiser::timestep_embedding(0.9, 16);
  CHECK(lo != hi);

  CHECK_THROWS(Denoiser::timestep_embedding(0.5, 7));
}

TEST_CASE("zero-initialized output map forces pred = 0") {
  Denoiser net(small_cfg());
  Rng rng(5, "init");
  net.init(rng);
  Tensor x = rand_batch(4, 2, rng);
  Tensor pred = net.forward(x, {0.1, 0.5, 0.9, 0.3}, {0, 1, 2, 4});
  for (double v : pred.data()) CHECK(v == 0.0);
}

TEST_CASE("tap placement does not change the forward pass") {
  Tensor x;
  std::vector<Tensor> preds, taps;
  for (int tap = 1; tap <= 3; ++tap) {
    Denoiser net(small_cfg(3, tap));
    Rng rng(9, "init");  // same draws for every tap position
    net.init(rng);
    for (auto& [name, t] : net.named_parameters())
      if (name.find("out_proj/weight") != std::string::npos)
        for (size_t i = 0; i < t.data().size(); ++i)
          t.data()[i] = 0.01 * ((i % 7) - 3.0);
    Rng drng(9, "data");
    x = rand_batch(3, 2, drng);
    auto [pred, h_tap] = net.forward_with_tap(x, {0.2, 0.4, 0.6}, {0, 3, 4});
    preds.push_back(pred);
    taps.push_back(h_tap);
  }
  for (size_t i = 1; i < preds.size(); ++i)
    for (int j = 0; j < preds[0].numel(); ++j)
      CHECK(preds[i].data()[j] == preds[0].data()[j]);
  // boundary tap: h_tap at tap=blocks is the pre-output hidden state
  Denoiser full(small_cfg(3, 3));
  Rng rng(9, "init");
  full.init(rng);
  auto [p, h] = full.forward_with_tap(x, {0.2, 0.4, 0.6}, {0, 3, 4});
  Tensor out = full.forward_from_tap(h);
  for (int j = 0; j < p.numel(); ++j) CHECK(out.data()[j] == p.data()[j]);
}

TEST_CASE("residual blocks stay near identity at init") {
  DenoiserConfig c = small_cfg(4, 4);
  c.hidden = 64;
  Denoiser net(c);
  Rng rng(13, "init");
  net.init(rng);
  Tensor x = rand_batch(8, 2, rng);
  const std::vector<double> t(8, 0.5);
  const std::vector<int> cls(8, 0);

  Denoiser shallow({c.data_dim, c.hidden, c.blocks, 1, c.n_classes});
  // same parameter values via a fresh identical init sequence
  Rng rng2(13, "init");
  shallow.init(rng2);
  Tensor h1 = shallow.forward_to_tap(x, t, cls);
  Tensor h4 = net.forward_to_tap(x, t, cls);
  double num = 0, den = 0;
  for (int i = 0; i < h1.numel(); ++i) {
    const double d = h4.data()[i] - h1.data()[i];
    num += d * d;
    den += h1.data()[i] * h1.data()[i];
  }
  CHECK(std::sqrt(num / den) < 0.1);
}

TEST_CASE("gradients reach blocks before the tap from a tap-side loss") {
  Denoiser net(small_cfg(3, 2));
  Rng rng(21, "init");
  net.init(rng);
  Tensor x = rand_batch(4, 2, rng);
  Tensor h_tap = net.forward_to_tap(x, {0.1, 0.2, 0.3, 0.4}, {0, 1, 2, 3});
  sum(mul(h_tap, h_tap)).backward();
  bool block0_has = false, block2_has = false;
  for (auto& [name, t] : net.named_parameters()) {
    if (name.find("block0/w1") != std::string::npos) block0_has = t.has_grad();
    if (name.find("block2/w1") != std::string::npos) block2_has = t.has_grad();
  }
  CHECK(block0_has);
  CHECK_FALSE(block2_has);
}

TEST_CASE("invalid class ids are rejected") {
  Denoiser net(small_cfg());
  Rng rng(1, "init");
  net.init(rng);
  Tensor x = rand_batch(1, 2, rng);
  CHECK_THROWS(net.forward(x, {0.5}, {5}));   // beyond the null class
  CHECK_THROWS(net.forward(x, {0.5}, {-1}));
  CHECK_NOTHROW(net.forward(x, {0.5}, {4}));  // the null class itself
}

TEST_CASE("denoiser config validation") {
  DenoiserConfig c = small_cfg();
  c.tap_index = 4;
  CHECK_THROWS(Denoiser{c});
  c = small_cfg();
  c.hidden = 15;
  CHECK_THROWS(Denoiser{c});
}
