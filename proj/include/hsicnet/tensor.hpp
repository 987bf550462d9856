#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <vector>

namespace hsicnet::nn {

// Reverse-mode engine: every op builds a node whose backward closure pulls
// the node's gradient into its parents. Tensors are cheap handles; the graph
// lives as long as some handle (or a child node) still points at it.
struct Node {
  std::vector<std::size_t> shape;
  std::vector<double> value;
  std::vector<double> grad;  // allocated on demand, same length as value
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backward_fn;  // may be empty (leaf)

  void ensure_grad() {
    if (grad.size() != value.size()) grad.assign(value.size(), 0.0);
  }
};

class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(std::vector<std::size_t> shape, bool requires_grad = false);
  static Tensor from(std::vector<std::size_t> shape, std::vector<double> data,
                     bool requires_grad = false);
  static Tensor scalar(double v, bool requires_grad = false);

  bool defined() const { return static_cast<bool>(node_); }
  const std::vector<std::size_t>& shape() const { return node_->shape; }
  std::size_t size() const { return node_->value.size(); }
  std::size_t dim(std::size_t i) const { return node_->shape[i]; }

  double* data() { return node_->value.data(); }
  const double* data() const { return node_->value.data(); }
  double* grad_data() { node_->ensure_grad(); return node_->grad.data(); }
  const std::vector<double>& values() const { return node_->value; }
  std::vector<double>& values() { return node_->value; }
  const std::vector<double>& grad() const { return node_->grad; }

  bool requires_grad() const { return node_->requires_grad; }
  void zero_grad() { if (node_) node_->grad.assign(node_->value.size(), 0.0); }

  double item() const;  // value of a 1-element tensor

  std::shared_ptr<Node> node() const { return node_; }
  static Tensor wrap(std::shared_ptr<Node> node);

 private:
  std::shared_ptr<Node> node_;
};

// Seeds d(root)/d(root) = 1 (root must hold a single element) and runs the
// tape in reverse topological order. Gradients accumulate; callers zero
// parameter gradients between steps.
void backward(const Tensor& root);

// --- elementwise / shape ops (each differentiable) ---------------------------

Tensor add(const Tensor& a, const Tensor& b);       // same shape
Tensor mul(const Tensor& a, const Tensor& b);       // same shape, Hadamard
Tensor scale(const Tensor& a, double s);
Tensor tanh(const Tensor& a);
Tensor sigmoid(const Tensor& a);
Tensor relu(const Tensor& a);
Tensor mean_all(const Tensor& a);                   // -> scalar

// Concatenate two {B, D} tensors along the feature axis -> {B, Da+Db}.
// Either side may be undefined (treated as zero columns).
Tensor concat_cols(const Tensor& a, const Tensor& b);

// Leaf insertion of raw data (no gradient).
Tensor constant(std::vector<std::size_t> shape, std::vector<double> data);

}  // namespace hsicnet::nn
