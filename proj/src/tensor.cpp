#include "repulsor/tensor.hpp"

#include <cblas.h>

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <unordered_set>

namespace repulsor {

namespace {

thread_local bool g_grad_enabled = true;

int shape_numel(const std::vector<int>& shape) {
  int n = 1;
  for (int e : shape) {
    if (e <= 0) throw std::invalid_argument("tensor extents must be positive");
    n *= e;
  }
  return n;
}

using NodePtr = std::shared_ptr<Tensor::Node>;

NodePtr make_leaf(std::vector<int> shape, std::vector<double> data, bool rg) {
  if (static_cast<size_t>(shape_numel(shape)) != data.size())
    throw std::invalid_argument("data length does not match shape");
  auto n = std::make_shared<Tensor::Node>();
  n->shape = std::move(shape);
  n->data = std::move(data);
  n->requires_grad = rg;
  return n;
}

// Builds a result node; graph edges are recorded only when grad mode is on
// and some parent requires grad.
Tensor make_op(std::vector<int> shape, std::vector<double> data,
               std::vector<NodePtr> parents,
               const std::function<std::function<void()>(Tensor::Node*)>& make_backprop) {
  auto n = std::make_shared<Tensor::Node>();
  n->shape = std::move(shape);
  n->data = std::move(data);
  bool rg = false;
  if (g_grad_enabled)
    for (const auto& p : parents) rg = rg || (p && p->requires_grad);
  n->requires_grad = rg;
  if (rg) {
    n->parents = std::move(parents);
    n->backprop = make_backprop(n.get());
  }
  return Tensor(n);
}

void check_same_shape(const Tensor& a, const Tensor& b, const char* what) {
  if (a.shape() != b.shape())
    throw std::invalid_argument(std::string(what) + ": shape mismatch");
}

void require_rank2(const Tensor& t, const char* what) {
  if (t.shape().size() != 2)
    throw std::invalid_argument(std::string(what) + ": rank-2 tensor required");
}

}  // namespace

NoGradGuard::NoGradGuard() : prev_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = prev_; }
bool grad_enabled() { return g_grad_enabled; }

Tensor Tensor::zeros(std::vector<int> shape, bool requires_grad) {
  int n = shape_numel(shape);
  return Tensor(make_leaf(std::move(shape), std::vector<double>(n, 0.0), requires_grad));
}

Tensor Tensor::full(std::vector<int> shape, double value, bool requires_grad) {
  int n = shape_numel(shape);
  return Tensor(make_leaf(std::move(shape), std::vector<double>(n, value), requires_grad));
}

Tensor Tensor::from(std::vector<int> shape, std::vector<double> data, bool requires_grad) {
  return Tensor(make_leaf(std::move(shape), std::move(data), requires_grad));
}

Tensor Tensor::scalar(double value, bool requires_grad) {
  return Tensor(make_leaf({1}, {value}, requires_grad));
}

const std::vector<int>& Tensor::shape() const { return node_->shape; }
int Tensor::numel() const { return node_->numel(); }
bool Tensor::requires_grad() const { return node_->requires_grad; }
std::vector<double>& Tensor::data() { return node_->data; }
const std::vector<double>& Tensor::data() const { return node_->data; }
bool Tensor::has_grad() const { return node_ && !node_->grad.empty(); }

const std::vector<double>& Tensor::grad() const {
  if (!has_grad()) throw std::logic_error("tensor has no gradient");
  return node_->grad;
}

void Tensor::zero_grad() { node_->grad.assign(node_->data.size(), 0.0); }

double Tensor::item() const {
  if (numel() != 1) throw std::invalid_argument("item(): tensor is not scalar");
  return node_->data[0];
}

Tensor Tensor::detach() const {
  return Tensor(make_leaf(node_->shape, node_->data, false));
}

void Tensor::backward() const {
  if (numel() != 1)
    throw std::invalid_argument("backward(): loss must be scalar");
  if (!node_->requires_grad) return;

  // Iterative DFS producing reverse topological order.
  std::vector<Tensor::Node*> topo;
  std::unordered_set<Tensor::Node*> visited;
  struct Frame {
    Tensor::Node* n;
    size_t next_parent;
  };
  std::vector<Frame> stack{{node_.get(), 0}};
  visited.insert(node_.get());
  while (!stack.empty()) {
    Frame& f = stack.back();
    if (f.next_parent < f.n->parents.size()) {
      Tensor::Node* p = f.n->parents[f.next_parent++].get();
      if (p && p->requires_grad && !visited.count(p)) {
        visited.insert(p);
        stack.push_back({p, 0});
      }
    } else {
      topo.push_back(f.n);
      stack.pop_back();
    }
  }

  // Interior grads are scratch space for this sweep; only leaves accumulate
  // across repeated backward calls.
  for (Tensor::Node* n : topo)
    if (n->backprop && n != node_.get()) n->grad.assign(n->data.size(), 0.0);
  node_->ensure_grad();
  if (node_->backprop) {
    node_->grad[0] = 1.0;
  } else {
    node_->grad[0] += 1.0;
  }
  for (auto it = topo.rbegin(); it != topo.rend(); ++it)
    if ((*it)->backprop) (*it)->backprop();
}

// ---- matmul ----

Tensor matmul(const Tensor& a, const Tensor& b) {
  require_rank2(a, "matmul");
  require_rank2(b, "matmul");
  const int m = a.rows(), k = a.cols(), n = b.cols();
  if (b.rows() != k) throw std::invalid_argument("matmul: inner extents differ");

  std::vector<double> out(static_cast<size_t>(m) * n, 0.0);
  cblas_dgemm(CblasRowMajor, CblasNoTrans, CblasNoTrans, m, n, k, 1.0,
              a.data().data(), k, b.data().data(), n, 0.0, out.data(), n);

  auto pa = a.node_ptr(), pb = b.node_ptr();
  return make_op({m, n}, std::move(out), {pa, pb}, [=](Tensor::Node* self) {
    return [self, pa, pb, m, n, k]() {
      const double* g = self->grad.data();
      if (pa->requires_grad) {
        pa->ensure_grad();  // gA += g . B^T
        cblas_dgemm(CblasRowMajor, CblasNoTrans, CblasTrans, m, k, n, 1.0, g, n,
                    pb->data.data(), n, 1.0, pa->grad.data(), k);
      }
      if (pb->requires_grad) {
        pb->ensure_grad();  // gB += A^T . g
        cblas_dgemm(CblasRowMajor, CblasTrans, CblasNoTrans, k, n, m, 1.0,
                    pa->data.data(), k, g, n, 1.0, pb->grad.data(), n);
      }
    };
  });
}

// ---- elementwise ----

namespace {

enum class BinOp { Add, Sub, Mul };

Tensor binary(const Tensor& a, const Tensor& b, BinOp op) {
  const bool a_scalar = a.numel() == 1, b_scalar = b.numel() == 1;
  if (!(a.shape() == b.shape() || a_scalar || b_scalar))
    throw std::invalid_argument("elementwise: shapes differ and neither operand is scalar");

  const Tensor& big = b_scalar ? a : b;
  const int n = big.numel();
  std::vector<double> out(n);
  const auto& ad = a.data();
  const auto& bd = b.data();
  for (int i = 0; i < n; ++i) {
    const double x = a_scalar ? ad[0] : ad[i];
    const double y = b_scalar ? bd[0] : bd[i];
    out[i] = op == BinOp::Add ? x + y : op == BinOp::Sub ? x - y : x * y;
  }

  auto pa = a.node_ptr(), pb = b.node_ptr();
  return make_op(big.shape(), std::move(out), {pa, pb}, [=](Tensor::Node* self) {
    return [self, pa, pb, op, a_scalar, b_scalar, n]() {
      const double* g = self->grad.data();
      if (pa->requires_grad) {
        pa->ensure_grad();
        for (int i = 0; i < n; ++i) {
          double gi = g[i];
          if (op == BinOp::Mul) gi *= b_scalar ? pb->data[0] : pb->data[i];
          pa->grad[a_scalar ? 0 : i] += gi;
        }
      }
      if (pb->requires_grad) {
        pb->ensure_grad();
        for (int i = 0; i < n; ++i) {
          double gi = g[i];
          if (op == BinOp::Sub) gi = -gi;
          if (op == BinOp::Mul) gi = g[i] * (a_scalar ? pa->data[0] : pa->data[i]);
          pb->grad[b_scalar ? 0 : i] += gi;
        }
      }
    };
  });
}

Tensor unary(const Tensor& a, const std::function<double(double)>& f,
             const std::function<double(double, double)>& dfdx_from_xy) {
  const int n = a.numel();
  std::vector<double> out(n);
  for (int i = 0; i < n; ++i) out[i] = f(a.data()[i]);
  auto pa = a.node_ptr();
  return make_op(a.shape(), std::move(out), {pa}, [=](Tensor::Node* self) {
    return [self, pa, dfdx_from_xy, n]() {
      pa->ensure_grad();
      for (int i = 0; i < n; ++i)
        pa->grad[i] += self->grad[i] * dfdx_from_xy(pa->data[i], self->data[i]);
    };
  });
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) { return binary(a, b, BinOp::Add); }
Tensor sub(const Tensor& a, const Tensor& b) { return binary(a, b, BinOp::Sub); }
Tensor mul(const Tensor& a, const Tensor& b) { return binary(a, b, BinOp::Mul); }
Tensor add(const Tensor& a, double s) { return binary(a, Tensor::scalar(s), BinOp::Add); }
Tensor mul(const Tensor& a, double s) { return binary(a, Tensor::scalar(s), BinOp::Mul); }

Tensor neg(const Tensor& a) {
  return unary(a, [](double x) { return -x; }, [](double, double) { return -1.0; });
}

Tensor exp(const Tensor& a) {
  return unary(a, [](double x) { return std::exp(x); },
               [](double, double y) { return y; });
}

Tensor log(const Tensor& a) {
  for (double v : a.data())
    if (!(v > 0.0)) throw std::domain_error("log: non-positive input");
  return unary(a, [](double x) { return std::log(x); },
               [](double x, double) { return 1.0 / x; });
}

Tensor silu(const Tensor& a) {
  return unary(a,
               [](double x) { return x / (1.0 + std::exp(-x)); },
               [](double x, double) {
                 const double s = 1.0 / (1.0 + std::exp(-x));
                 return s * (1.0 + x * (1.0 - s));
               });
}

// ---- reductions ----

namespace {
Tensor reduce(const Tensor& a, double scale) {
  const int n = a.numel();
  double acc = 0.0;
  for (double v : a.data()) acc += v;
  auto pa = a.node_ptr();
  return make_op({1}, {acc * scale}, {pa}, [=](Tensor::Node* self) {
    return [self, pa, scale, n]() {
      pa->ensure_grad();
      const double g = self->grad[0] * scale;
      for (int i = 0; i < n; ++i) pa->grad[i] += g;
    };
  });
}
}  // namespace

Tensor sum(const Tensor& a) { return reduce(a, 1.0); }
Tensor mean(const Tensor& a) { return reduce(a, 1.0 / a.numel()); }

// ---- structured ops ----

Tensor add_rows(const Tensor& x, const Tensor& bias) {
  require_rank2(x, "add_rows");
  const int b = x.rows(), d = x.cols();
  if (bias.numel() != d) throw std::invalid_argument("add_rows: bias length mismatch");
  std::vector<double> out(x.data());
  for (int i = 0; i < b; ++i)
    for (int j = 0; j < d; ++j) out[static_cast<size_t>(i) * d + j] += bias.data()[j];
  auto px = x.node_ptr(), pb = bias.node_ptr();
  return make_op(x.shape(), std::move(out), {px, pb}, [=](Tensor::Node* self) {
    return [self, px, pb, b, d]() {
      if (px->requires_grad) {
        px->ensure_grad();
        for (size_t i = 0; i < self->grad.size(); ++i) px->grad[i] += self->grad[i];
      }
      if (pb->requires_grad) {
        pb->ensure_grad();
        for (int i = 0; i < b; ++i)
          for (int j = 0; j < d; ++j)
            pb->grad[j] += self->grad[static_cast<size_t>(i) * d + j];
      }
    };
  });
}

Tensor embedding_lookup(const Tensor& table, const std::vector<int>& ids) {
  require_rank2(table, "embedding_lookup");
  const int n = table.rows(), h = table.cols();
  const int b = static_cast<int>(ids.size());
  std::vector<double> out(static_cast<size_t>(b) * h);
  for (int i = 0; i < b; ++i) {
    if (ids[i] < 0 || ids[i] >= n)
      throw std::out_of_range("embedding_lookup: class id out of range");
    std::copy_n(table.data().begin() + static_cast<size_t>(ids[i]) * h, h,
                out.begin() + static_cast<size_t>(i) * h);
  }
  auto pt = table.node_ptr();
  return make_op({b, h}, std::move(out), {pt}, [=](Tensor::Node* self) {
    return [self, pt, ids, h, b]() {
      pt->ensure_grad();
      for (int i = 0; i < b; ++i)
        for (int j = 0; j < h; ++j)
          pt->grad[static_cast<size_t>(ids[i]) * h + j] +=
              self->grad[static_cast<size_t>(i) * h + j];
    };
  });
}

Tensor l2_normalize_rows(const Tensor& x) {
  require_rank2(x, "l2_normalize_rows");
  constexpr double kEps = 1e-12;
  const int b = x.rows(), d = x.cols();
  std::vector<double> out(x.numel());
  std::vector<double> norms(b);
  for (int i = 0; i < b; ++i) {
    const double* row = x.data().data() + static_cast<size_t>(i) * d;
    double sq = 0.0;
    for (int j = 0; j < d; ++j) sq += row[j] * row[j];
    norms[i] = std::sqrt(sq);
    const double inv = 1.0 / (norms[i] + kEps);
    for (int j = 0; j < d; ++j) out[static_cast<size_t>(i) * d + j] = row[j] * inv;
  }
  auto px = x.node_ptr();
  return make_op(x.shape(), std::move(out), {px}, [=](Tensor::Node* self) {
    return [self, px, norms, b, d]() {
      px->ensure_grad();
      for (int i = 0; i < b; ++i) {
        const size_t off = static_cast<size_t>(i) * d;
        const double* row = px->data.data() + off;
        const double* g = self->grad.data() + off;
        const double n = norms[i], s = n + kEps;
        double gdotx = 0.0;
        for (int j = 0; j < d; ++j) gdotx += g[j] * row[j];
        const double coef = n > 0.0 ? gdotx / (n * s * s) : 0.0;
        for (int j = 0; j < d; ++j) px->grad[off + j] += g[j] / s - row[j] * coef;
      }
    };
  });
}

namespace {

Tensor pairwise_sqdist_impl(const Tensor& a, const Tensor& b, bool grad_to_b) {
  require_rank2(a, "pairwise_sqdist");
  require_rank2(b, "pairwise_sqdist");
  const int m = a.rows(), k = b.rows(), d = a.cols();
  if (b.cols() != d)
    throw std::invalid_argument("pairwise_sqdist: feature dimensions differ");

  std::vector<double> out(static_cast<size_t>(m) * k, 0.0);
  // -2 a.b^T, then add the squared norms and clamp round-off at zero.
  cblas_dgemm(CblasRowMajor, CblasNoTrans, CblasTrans, m, k, d, -2.0,
              a.data().data(), d, b.data().data(), d, 0.0, out.data(), k);
  std::vector<double> a2(m, 0.0), b2(k, 0.0);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < d; ++j) {
      const double v = a.data()[static_cast<size_t>(i) * d + j];
      a2[i] += v * v;
    }
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < d; ++j) {
      const double v = b.data()[static_cast<size_t>(i) * d + j];
      b2[i] += v * v;
    }
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < k; ++j) {
      double& v = out[static_cast<size_t>(i) * k + j];
      v = std::max(0.0, v + a2[i] + b2[j]);
    }

  auto pa = a.node_ptr(), pb = b.node_ptr();
  std::vector<NodePtr> parents =
      grad_to_b ? std::vector<NodePtr>{pa, pb} : std::vector<NodePtr>{pa};
  return make_op({m, k}, std::move(out), std::move(parents), [=](Tensor::Node* self) {
    return [self, pa, pb, grad_to_b, m, k, d]() {
      const double* g = self->grad.data();
      std::vector<double> grow(m, 0.0), gcol(k, 0.0);
      for (int i = 0; i < m; ++i)
        for (int j = 0; j < k; ++j) {
          const double v = g[static_cast<size_t>(i) * k + j];
          grow[i] += v;
          gcol[j] += v;
        }
      if (pa->requires_grad) {
        pa->ensure_grad();
        // gA_i += 2 * (rowsum(g)_i * a_i - (g . B)_i)
        cblas_dgemm(CblasRowMajor, CblasNoTrans, CblasNoTrans, m, d, k, -2.0, g,
                    k, pb->data.data(), d, 1.0, pa->grad.data(), d);
        for (int i = 0; i < m; ++i)
          for (int j = 0; j < d; ++j)
            pa->grad[static_cast<size_t>(i) * d + j] +=
                2.0 * grow[i] * pa->data[static_cast<size_t>(i) * d + j];
      }
      if (grad_to_b && pb->requires_grad) {
        pb->ensure_grad();
        cblas_dgemm(CblasRowMajor, CblasTrans, CblasNoTrans, k, d, m, -2.0, g,
                    k, pa->data.data(), d, 1.0, pb->grad.data(), d);
        for (int i = 0; i < k; ++i)
          for (int j = 0; j < d; ++j)
            pb->grad[static_cast<size_t>(i) * d + j] +=
                2.0 * gcol[i] * pb->data[static_cast<size_t>(i) * d + j];
      }
    };
  });
}

}  // namespace

Tensor pairwise_sqdist(const Tensor& a, const Tensor& b) {
  // b enters as a constant even if it carries requires_grad.
  return pairwise_sqdist_impl(a, b.requires_grad() ? b.detach() : b, false);
}

Tensor pairwise_sqdist_bilateral(const Tensor& a, const Tensor& b) {
  return pairwise_sqdist_impl(a, b, true);
}

}  // namespace repulsor
