#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace repulsor {

// Dense row-major float64 tensor participating in reverse-mode autodiff.
// A Tensor is a cheap handle onto a shared node; operations on tensors with
// requires_grad build a graph that backward() traverses once in reverse
// topological order.
class Tensor {
 public:
  struct Node;

  Tensor() = default;

  static Tensor zeros(std::vector<int> shape, bool requires_grad = false);
  static Tensor full(std::vector<int> shape, double value, bool requires_grad = false);
  static Tensor from(std::vector<int> shape, std::vector<double> data,
                     bool requires_grad = false);
  static Tensor scalar(double value, bool requires_grad = false);

  bool defined() const { return node_ != nullptr; }
  const std::vector<int>& shape() const;
  int rows() const { return shape().at(0); }
  int cols() const { return shape().at(1); }
  int numel() const;
  bool requires_grad() const;

  std::vector<double>& data();
  const std::vector<double>& data() const;

  // Gradient accumulator; empty until backward touches this tensor.
  bool has_grad() const;
  const std::vector<double>& grad() const;
  void zero_grad();

  double item() const;  // scalar tensors only

  // Same values, no graph connection; gradients never reach ancestors of x.
  Tensor detach() const;

  // Reverse-mode sweep from a scalar loss. Repeated calls accumulate into
  // grad buffers until zero_grad().
  void backward() const;

  Node* node() const { return node_.get(); }
  std::shared_ptr<Node> node_ptr() const { return node_; }

  explicit Tensor(std::shared_ptr<Node> n) : node_(std::move(n)) {}

 private:
  std::shared_ptr<Node> node_;
};

struct Tensor::Node {
  std::vector<int> shape;
  std::vector<double> data;
  bool requires_grad = false;
  std::vector<double> grad;  // lazily allocated, same length as data
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void()> backprop;  // adds local vjp into parents' grad

  int numel() const { return static_cast<int>(data.size()); }
  void ensure_grad() {
    if (grad.size() != data.size()) grad.assign(data.size(), 0.0);
  }
};

// Disables graph recording for the lifetime of the guard (inference paths).
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool prev_;
};
bool grad_enabled();

// ---- operations ----

Tensor matmul(const Tensor& a, const Tensor& b);

// Same-shape elementwise; a scalar (numel==1) operand broadcasts against the
// other shape. No other broadcasting is supported.
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor add(const Tensor& a, double s);
Tensor mul(const Tensor& a, double s);
Tensor neg(const Tensor& a);
Tensor exp(const Tensor& a);
Tensor log(const Tensor& a);  // domain error on non-positive entries
Tensor silu(const Tensor& a);

Tensor sum(const Tensor& a);
Tensor mean(const Tensor& a);

// x[B x D] + bias[D] added to every row.
Tensor add_rows(const Tensor& x, const Tensor& bias);

// Rows of table selected by ids; gradients scatter-add into table rows.
Tensor embedding_lookup(const Tensor& table, const std::vector<int>& ids);

// Row-wise x / (||x|| + 1e-12); the epsilon keeps zero rows finite.
Tensor l2_normalize_rows(const Tensor& x);

// (i,k) -> ||a_i - b_k||^2. b is treated as a constant: no gradient flows to
// it. Computed via the expansion |a|^2 + |b|^2 - 2 a.b^T with a clamp at 0.
Tensor pairwise_sqdist(const Tensor& a, const Tensor& b);

// Variant used by the in-batch dispersive loss: gradients flow to both sides.
Tensor pairwise_sqdist_bilateral(const Tensor& a, const Tensor& b);

}  // namespace repulsor
