#include "repulsor/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "repulsor/denoiser.hpp"
#include "repulsor/process.hpp"
#include "repulsor/repulsor_loss.hpp"
#include "repulsor/rng.hpp"

namespace repulsor {

double gradcheck(const std::function<Tensor()>& loss,
                 const std::vector<Tensor>& inputs, double h) {
  for (Tensor in : inputs) in.zero_grad();
  Tensor l = loss();
  l.backward();

  std::vector<std::vector<double>> analytic;
  for (const Tensor& in : inputs)
    analytic.push_back(in.has_grad() ? in.grad()
                                     : std::vector<double>(in.data().size(), 0.0));

  double worst = 0.0;
  NoGradGuard ng;
  for (size_t k = 0; k < inputs.size(); ++k) {
    Tensor in = inputs[k];
    for (size_t i = 0; i < in.data().size(); ++i) {
      const double saved = in.data()[i];
      in.data()[i] = saved + h;
      const double f1 = loss().item();
      in.data()[i] = saved - h;
      const double f0 = loss().item();
      in.data()[i] = saved;
      const double fd = (f1 - f0) / (2.0 * h);
      const double a = analytic[k][i];
      const double rel =
          std::abs(a - fd) / std::max({1.0, std::abs(a), std::abs(fd)});
      worst = std::max(worst, rel);
    }
  }
  for (Tensor in : inputs) in.zero_grad();
  return worst;
}

namespace {

Tensor randn(std::vector<int> shape, Rng& rng, double scale = 1.0) {
  Tensor t = Tensor::zeros(std::move(shape), true);
  for (double& v : t.data()) v = scale * rng.normal();
  return t;
}

// Random constant cotangent so the scalarization exercises every output.
Tensor scalarize(const Tensor& t, const Tensor& cot) { return sum(mul(t, cot)); }

}  // namespace

std::vector<GradCheckResult> run_gradient_suite(uint64_t seed) {
  Rng rng(seed, "gradcheck");
  std::vector<GradCheckResult> out;
  auto check = [&](const std::string& name, const std::function<Tensor()>& loss,
                   const std::vector<Tensor>& inputs, double tol) {
    const double err = gradcheck(loss, inputs);
    out.push_back({name, err, tol, err < tol});
  };
  const double atol = 1e-6;

  {
    Tensor a = randn({3, 4}, rng), b = randn({4, 5}, rng);
    Tensor c = randn({3, 5}, rng);
    c = c.detach();
    check("matmul", [&] { return scalarize(matmul(a, b), c); }, {a, b}, atol);
  }
  {
    Tensor a = randn({4, 3}, rng), b = randn({4, 3}, rng);
    Tensor c = randn({4, 3}, rng).detach();
    check("add", [&] { return scalarize(add(a, b), c); }, {a, b}, atol);
    check("sub", [&] { return scalarize(sub(a, b), c); }, {a, b}, atol);
    check("mul", [&] { return scalarize(mul(a, b), c); }, {a, b}, atol);
    Tensor s = randn({1}, rng);
    check("scalar-broadcast", [&] { return scalarize(mul(a, s), c); }, {a, s}, atol);
  }
  {
    Tensor a = randn({3, 3}, rng);
    Tensor c = randn({3, 3}, rng).detach();
    check("neg", [&] { return scalarize(neg(a), c); }, {a}, atol);
    check("exp", [&] { return scalarize(exp(a), c); }, {a}, atol);
    check("silu", [&] { return scalarize(silu(a), c); }, {a}, atol);
    Tensor p = Tensor::zeros({3, 3}, true);
    for (double& v : p.data()) v = rng.uniform(0.5, 2.0);
    check("log", [&] { return scalarize(log(p), c); }, {p}, atol);
    check("sum", [&] { return sum(a); }, {a}, atol);
    check("mean", [&] { return mean(a); }, {a}, atol);
  }
  {
    Tensor x = randn({5, 4}, rng), b = randn({4}, rng);
    Tensor c = randn({5, 4}, rng).detach();
    check("add_rows", [&] { return scalarize(add_rows(x, b), c); }, {x, b}, atol);
  }
  {
    Tensor table = randn({6, 4}, rng);
    const std::vector<int> ids{2, 0, 5, 2};
    Tensor c = randn({4, 4}, rng).detach();
    check("embedding_lookup",
          [&] { return scalarize(embedding_lookup(table, ids), c); }, {table}, atol);
  }
  {
    Tensor x = randn({4, 6}, rng);
    Tensor c = randn({4, 6}, rng).detach();
    check("l2_normalize_rows",
          [&] { return scalarize(l2_normalize_rows(x), c); }, {x}, atol);
  }
  {
    Tensor a = randn({4, 3}, rng), b = randn({6, 3}, rng);
    Tensor c = randn({4, 6}, rng).detach();
    check("pairwise_sqdist",
          [&] { return scalarize(pairwise_sqdist(a, b), c); }, {a}, atol);
    check("pairwise_sqdist_bilateral",
          [&] { return scalarize(pairwise_sqdist_bilateral(a, b), c); }, {a, b},
          atol);
  }
  {
    ProjectionHead head(8, 4);
    Rng init = rng.split("head");
    head.init(init);
    Tensor h = randn({5, 8}, rng);
    Tensor c = randn({5, 4}, rng).detach();
    std::vector<Tensor> ins{h, head.weight(), head.bias()};
    check("projection_head", [&] { return scalarize(head.project(h), c); }, ins,
          atol);
  }
  {
    Tensor z = randn({4, 5}, rng);
    Tensor bank = randn({7, 5}, rng).detach();
    check("dispersive_loss_bank",
          [&] { return dispersive_loss_bank(z, bank, 0.5); }, {z}, atol);
    check("dispersive_loss_inbatch",
          [&] { return dispersive_loss_inbatch(z, 0.5); }, {z}, atol);
  }
  {
    DenoiserConfig dc;
    dc.data_dim = 2;
    dc.hidden = 12;
    dc.blocks = 3;
    dc.tap_index = 2;
    dc.n_classes = 4;
    Denoiser net(dc);
    Rng init = rng.split("net");
    net.init(init);
    // nudge the zero-initialized output map so its grads are exercised too
    for (auto& [name, t] : net.named_parameters())
      if (name.find("out") != std::string::npos)
        for (double& v : t.data()) v = 0.01 * rng.normal();

    ProjectionHead head(dc.hidden, 6);
    Rng hinit = rng.split("net-head");
    head.init(hinit);
    Tensor bank = Tensor::zeros({10, 6});
    for (double& v : bank.data()) v = rng.normal();
    {
      NoGradGuard ng;
      bank = l2_normalize_rows(bank).detach();
    }

    const int b = 4;
    Tensor xt = randn({b, 2}, rng).detach();
    Tensor target = randn({b, 2}, rng).detach();
    const std::vector<double> times{0.1, 0.4, 0.7, 0.95};
    const std::vector<int> classes{0, 3, 4, 1};

    std::vector<Tensor> params = net.parameters();
    for (const auto& p : head.parameters()) params.push_back(p);
    auto loss = [&] {
      auto [pred, h_tap] = net.forward_with_tap(xt, times, classes);
      Tensor z = head.project(h_tap);
      return total_loss(diff_loss(pred, target),
                        dispersive_loss_bank(z, bank, 0.5), 0.25);
    };
    check("denoiser_objective", loss, params, 1e-5);
  }

  return out;
}

}  // namespace repulsor
