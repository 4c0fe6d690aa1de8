#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "repulsor/rng.hpp"
#include "repulsor/sampler.hpp"

using namespace repulsor;

namespace {

Denoiser make_net(uint64_t seed = 3) {
  DenoiserConfig c;
  c.data_dim = 2;
  c.hidden = 16;
  c.blocks = 2;
  c.tap_index = 1;
  c.n_classes = 4;
  Denoiser net(c);
  Rng rng(seed, "init");
  net.init(rng);
  // non-zero output map so conditional and unconditional paths differ
  for (auto& [name, t] : net.named_parameters())
    if (name.find("out_proj") != std::string::npos)
      for (size_t i = 0; i < t.data().size(); ++i)
        t.data()[i] = 0.05 * std::sin(static_cast<double>(i) + 1.0);
  return net;
}

}  // namespace

TEST_CASE("linear grid") {
  auto g = linear_grid(1.0, 0.0, 4);
  REQUIRE(g.size() == 5);
  CHECK(g.front() == 1.0);
  CHECK(g.back() == 0.0);
  CHECK(g[2] == doctest::Approx(0.5).epsilon(1e-15));
  CHECK_THROWS(linear_grid(0, 1, 0));
}

TEST_CASE("heun: zero field is the identity") {
  Tensor x = Tensor::from({2, 2}, {1, -2, 3, 0.5});
  auto zero = [](const Tensor& v, double) { return Tensor::zeros(v.shape()); };
  Tensor out = heun_integrate(zero, x, linear_grid(0, 1, 10));
  for (int i = 0; i < 4; ++i) CHECK(out.data()[i] == x.data()[i]);
}

TEST_CASE("heun single step on dx/dt = -x") {
  Tensor x = Tensor::from({1, 1}, {1.0});
  auto field = [](const Tensor& v, double) {
    Tensor out = Tensor::zeros(v.shape());
    for (int i = 0; i < v.numel(); ++i) out.data()[i] = -v.data()[i];
    return out;
  };
  Tensor out = heun_integrate(field, x, {0.0, 0.1});
  // predictor 1 - 0.1, corrector 1 + 0.05 (-1 - 0.9) = 0.905
  CHECK(out.data()[0] == doctest::Approx(0.905).epsilon(1e-15));
}

TEST_CASE("heun is second order on linear fields") {
  const double a = -1.3;
  auto field = [&](const Tensor& v, double) {
    Tensor out = Tensor::zeros(v.shape());
    for (int i = 0; i < v.numel(); ++i) out.data()[i] = a * v.data()[i];
    return out;
  };
  Tensor x = Tensor::from({1, 1}, {1.0});
  const double exact = std::exp(a);
  auto err = [&](int steps) {
    return std::abs(
        heun_integrate(field, x, linear_grid(0, 1, steps)).data()[0] - exact);
  };
  const double order = std::log2(err(20) / err(40));
  CHECK(order > 1.8);
  CHECK(order < 2.2);

  CHECK_THROWS(heun_integrate(field, x, {0.0, 0.5, 0.4}));
  CHECK_THROWS(heun_integrate(field, x, {0.0, 0.0, 0.5}));
  CHECK_THROWS(heun_integrate(field, x, {0.0}));
}

TEST_CASE("heun transports points exactly on a constant field") {
  // dx/dt = v with constant v: any integrator lands at x + v (t1 - t0)
  Tensor x = Tensor::from({2, 2}, {0.0, 1.0, -1.0, 2.0});
  Tensor v = Tensor::from({2, 2}, {1.0, -0.5, 2.0, 0.25});
  auto field = [&](const Tensor&, double) {
    return Tensor::from(v.shape(), v.data());
  };
  Tensor out = heun_integrate(field, x, linear_grid(1.0, 0.0, 7));
  for (int i = 0; i < 4; ++i)
    CHECK(out.data()[i] == doctest::Approx(x.data()[i] - v.data()[i]).epsilon(1e-12));
}

TEST_CASE("cfg combination") {
  Denoiser net = make_net();
  Rng rng(5, "x");
  Tensor x = Tensor::zeros({3, 2});
  for (double& v : x.data()) v = rng.normal();
  const std::vector<int> cls{0, 1, 2};
  const std::vector<int> nulls(3, net.null_class());

  Tensor cond = net.forward(x, {0.5, 0.5, 0.5}, cls);
  Tensor uncond = net.forward(x, {0.5, 0.5, 0.5}, nulls);

  // w = 1 returns the conditional prediction bit-exactly
  Tensor w1 = cfg_predict(net, x, 0.5, cls, 1.0);
  for (int i = 0; i < w1.numel(); ++i) CHECK(w1.data()[i] == cond.data()[i]);

  // w = 0 is the unconditional prediction
  Tensor w0 = cfg_predict(net, x, 0.5, cls, 0.0);
  for (int i = 0; i < w0.numel(); ++i) CHECK(w0.data()[i] == uncond.data()[i]);

  // the combination is the affine formula, bit for bit
  for (double w : {0.5, 1.5, 2.0, 3.0}) {
    Tensor got = cfg_predict(net, x, 0.5, cls, w);
    for (int i = 0; i < got.numel(); ++i) {
      const double expect =
          uncond.data()[i] + w * (cond.data()[i] - uncond.data()[i]);
      CHECK(got.data()[i] == expect);
    }
  }

  // hand arithmetic at the default scale: u=0, c=2, w=1.5 -> 3
  CHECK(0.0 + 1.5 * (2.0 - 0.0) == 3.0);

  // affinity in w across {0, 1, 2}
  Tensor w2 = cfg_predict(net, x, 0.5, cls, 2.0);
  for (int i = 0; i < w2.numel(); ++i) {
    const double lhs = w2.data()[i] - w1.data()[i];
    const double rhs = w1.data()[i] - w0.data()[i];
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
  }
}

TEST_CASE("sampling is deterministic and respects the class list") {
  Denoiser net = make_net();
  NoiseProcess fm = flow_matching_process();
  SamplerConfig cfg;
  cfg.steps = 8;

  Rng r1(42, "sample"), r2(42, "sample");
  Tensor a = sample(net, fm, cfg, 5, 2, r1);
  Tensor b = sample(net, fm, cfg, 5, 2, r2);
  REQUIRE(a.numel() == b.numel());
  for (int i = 0; i < a.numel(); ++i) CHECK(a.data()[i] == b.data()[i]);

  Rng r3(42, "sample");
  SamplerConfig one = cfg;
  one.steps = 1;
  CHECK_NOTHROW(sample(net, fm, one, 2, -1, r3));

  Rng r4(1, "sample");
  CHECK_THROWS(sample(net, fm, cfg, 2, 9, r4));
  SamplerConfig bad = cfg;
  bad.steps = 0;
  Rng r5(1, "sample");
  CHECK_THROWS(sample(net, fm, bad, 2, 0, r5));
}

TEST_CASE("ddpm probability-flow sampling runs end to end") {
  Denoiser net = make_net();
  NoiseProcess p = linear_beta_schedule(50, 1e-4, 0.02);
  SamplerConfig cfg;
  cfg.steps = 10;
  Rng rng(9, "sample");
  Tensor out = sample(net, p, cfg, 4, 1, rng);
  CHECK(out.rows() == 4);
  for (double v : out.data()) CHECK(std::isfinite(v));
}
