#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "repulsor/gradcheck.hpp"
#include "repulsor/rng.hpp"
#include "repulsor/tensor.hpp"

using namespace repulsor;

TEST_CASE("matmul identity and hand oracle") {
  Tensor I = Tensor::from({2, 2}, {1, 0, 0, 1});
  Tensor A = Tensor::from({2, 2}, {5, -1, 2, 7});
  Tensor r = matmul(I, A);
  for (int i = 0; i < 4; ++i) CHECK(r.data()[i] == A.data()[i]);

  Tensor B = Tensor::from({2, 2}, {1, 2, 3, 4});
  Tensor v = Tensor::from({2, 1}, {1, 1});
  Tensor p = matmul(B, v);
  CHECK(p.data()[0] == doctest::Approx(3).epsilon(1e-14));
  CHECK(p.data()[1] == doctest::Approx(7).epsilon(1e-14));

  CHECK_THROWS(matmul(Tensor::zeros({2, 3}), Tensor::zeros({2, 3})));
}

TEST_CASE("matmul gradient equals ones x B^T") {
  Tensor A = Tensor::from({2, 3}, {0.1, -0.5, 2.0, 1.5, 0.3, -1.0}, true);
  Tensor B = Tensor::from({3, 2}, {1, 2, 3, 4, 5, 6});
  sum(matmul(A, B)).backward();
  REQUIRE(A.has_grad());
  // d sum(AB) / dA = ones(2x2) B^T
  const double row[3] = {1 + 2, 3 + 4, 5 + 6};
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 3; ++j)
      CHECK(A.grad()[i * 3 + j] == doctest::Approx(row[j]).epsilon(1e-14));
}

TEST_CASE("elementwise basics") {
  Tensor z = Tensor::scalar(0.0);
  CHECK(exp(z).item() == 1.0);

  for (double x : {-3.0, 0.0, 2.5}) {
    Tensor t = Tensor::scalar(x);
    CHECK(log(exp(t)).item() == doctest::Approx(x).epsilon(1e-14));
  }
  CHECK_THROWS_AS((void)log(Tensor::scalar(0.0)), std::domain_error);
  CHECK_THROWS_AS((void)log(Tensor::scalar(-1.0)), std::domain_error);

  CHECK_THROWS(add(Tensor::zeros({2, 2}), Tensor::zeros({3})));

  // scalar broadcasting
  Tensor a = Tensor::from({3}, {1, 2, 3});
  Tensor s = Tensor::scalar(2.0);
  Tensor m = mul(a, s);
  CHECK(m.data()[2] == 6.0);
}

TEST_CASE("d/dx exp(x) at 1 is e") {
  Tensor x = Tensor::scalar(1.0, true);
  exp(x).backward();
  CHECK(x.grad()[0] == doctest::Approx(std::exp(1.0)).epsilon(1e-12));
}

TEST_CASE("l2_normalize_rows") {
  Tensor t = Tensor::from({1, 2}, {3, 4});
  Tensor n = l2_normalize_rows(t);
  CHECK(n.data()[0] == doctest::Approx(0.6).epsilon(1e-12));
  CHECK(n.data()[1] == doctest::Approx(0.8).epsilon(1e-12));

  Tensor e1 = Tensor::from({1, 3}, {1, 0, 0});
  Tensor ne = l2_normalize_rows(e1);
  for (int i = 0; i < 3; ++i) CHECK(ne.data()[i] == doctest::Approx(e1.data()[i]));

  Tensor zr = l2_normalize_rows(Tensor::from({1, 2}, {0, 0}));
  CHECK(zr.data()[0] == 0.0);
  CHECK(std::isfinite(zr.data()[1]));
}

TEST_CASE("pairwise_sqdist values") {
  Tensor e1 = Tensor::from({1, 2}, {1, 0});
  Tensor e2 = Tensor::from({1, 2}, {0, 1});
  CHECK(pairwise_sqdist(e1, e1).data()[0] == doctest::Approx(0.0).epsilon(1e-14));
  CHECK(pairwise_sqdist(e1, e2).data()[0] == doctest::Approx(2.0).epsilon(1e-14));

  Tensor z = Tensor::from({1, 2}, {0.6, 0.8});
  Tensor m = Tensor::from({1, 2}, {0, 1});
  CHECK(pairwise_sqdist(z, m).data()[0] == doctest::Approx(0.40).epsilon(1e-12));

  CHECK_THROWS(pairwise_sqdist(Tensor::zeros({2, 3}), Tensor::zeros({2, 4})));
}

TEST_CASE("pairwise_sqdist matches naive loop; unit rows land in [0,4]") {
  Rng rng(11, "pairwise");
  Tensor a = Tensor::zeros({5, 4});
  Tensor b = Tensor::zeros({7, 4});
  for (double& v : a.data()) v = rng.uniform(-2, 2);
  for (double& v : b.data()) v = rng.uniform(-2, 2);
  Tensor d = pairwise_sqdist(a, b);
  for (int i = 0; i < 5; ++i)
    for (int k = 0; k < 7; ++k) {
      double acc = 0;
      for (int j = 0; j < 4; ++j) {
        const double df = a.data()[i * 4 + j] - b.data()[k * 4 + j];
        acc += df * df;
      }
      CHECK(d.data()[i * 7 + k] == doctest::Approx(acc).epsilon(1e-12));
    }

  Tensor ua = l2_normalize_rows(a), ub = l2_normalize_rows(b);
  Tensor du = pairwise_sqdist(ua, ub);
  for (double v : du.data()) {
    CHECK(v >= 0.0);
    CHECK(v <= 4.0 + 1e-12);
  }
}

TEST_CASE("pairwise_sqdist second argument gets no gradient") {
  Tensor a = Tensor::from({2, 2}, {0.5, 1.0, -1.0, 0.25}, true);
  Tensor b = Tensor::from({2, 2}, {1.0, 0.0, 0.0, 1.0}, true);
  sum(pairwise_sqdist(a, b)).backward();
  CHECK(a.has_grad());
  bool b_zero = !b.has_grad();
  if (b.has_grad()) {
    b_zero = true;
    for (double g : b.grad()) b_zero = b_zero && g == 0.0;
  }
  CHECK(b_zero);
}

TEST_CASE("detach stops gradients and preserves values") {
  Tensor x = Tensor::from({3}, {1, 2, 3}, true);
  Tensor y = Tensor::from({3}, {4, 5, 6}, true);
  Tensor d = x.detach();
  for (int i = 0; i < 3; ++i) CHECK(d.data()[i] == x.data()[i]);

  sum(mul(d, y)).backward();
  CHECK_FALSE(x.has_grad());
  REQUIRE(y.has_grad());
  for (int i = 0; i < 3; ++i) CHECK(y.grad()[i] == x.data()[i]);
}

TEST_CASE("backward basics and accumulation") {
  Tensor x = Tensor::from({4}, {1, 2, 3, 4}, true);
  sum(x).backward();
  for (double g : x.grad()) CHECK(g == 1.0);
  x.zero_grad();

  Tensor t = Tensor::scalar(3.0, true);
  mul(t, t).backward();
  CHECK(t.grad()[0] == doctest::Approx(6.0).epsilon(1e-14));

  // repeated backward accumulates
  Tensor u = Tensor::scalar(1.0, true);
  Tensor l = mul(u, 2.0);
  l.backward();
  l.backward();
  CHECK(u.grad()[0] == 4.0);

  CHECK_THROWS(Tensor::zeros({2}, true).backward());
}

TEST_CASE("three-layer MLP matches finite differences") {
  Rng rng(3, "mlp");
  auto rnd = [&](std::vector<int> shape) {
    Tensor t = Tensor::zeros(std::move(shape), true);
    for (double& v : t.data()) v = rng.uniform(-2, 2) * 0.4;
    return t;
  };
  Tensor x = rnd({3, 4});
  Tensor w1 = rnd({4, 6}), b1 = rnd({6});
  Tensor w2 = rnd({6, 6}), b2 = rnd({6});
  Tensor w3 = rnd({6, 2}), b3 = rnd({2});
  auto loss = [&] {
    Tensor h1 = silu(add_rows(matmul(x, w1), b1));
    Tensor h2 = silu(add_rows(matmul(h1, w2), b2));
    return mean(mul(add_rows(matmul(h2, w3), b3), add_rows(matmul(h2, w3), b3)));
  };
  const double err = gradcheck(loss, {x, w1, b1, w2, b2, w3, b3});
  CHECK(err < 1e-6);
}

TEST_CASE("full gradient suite passes") {
  for (const auto& r : run_gradient_suite()) {
    INFO(r.name, " max_rel_err=", r.max_rel_err);
    CHECK(r.pass);
  }
}
