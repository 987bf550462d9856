#include "hsicnet/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "hsicnet/error.hpp"

namespace hsicnet::nn {

namespace {
std::size_t numel(const std::vector<std::size_t>& shape) {
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

std::shared_ptr<Node> make_node(std::vector<std::size_t> shape,
                                std::vector<double> value, bool requires_grad) {
  auto n = std::make_shared<Node>();
  n->shape = std::move(shape);
  n->value = std::move(value);
  n->requires_grad = requires_grad;
  return n;
}

bool same_shape(const Tensor& a, const Tensor& b) {
  return a.shape() == b.shape();
}
}  // namespace

Tensor Tensor::zeros(std::vector<std::size_t> shape, bool requires_grad) {
  auto n = numel(shape);
  return wrap(make_node(std::move(shape), std::vector<double>(n, 0.0),
                        requires_grad));
}

Tensor Tensor::from(std::vector<std::size_t> shape, std::vector<double> data,
                    bool requires_grad) {
  if (numel(shape) != data.size())
    fail(ErrorKind::invalid_argument, "Tensor::from: shape/data mismatch");
  return wrap(make_node(std::move(shape), std::move(data), requires_grad));
}

Tensor Tensor::scalar(double v, bool requires_grad) {
  return from({1}, {v}, requires_grad);
}

Tensor Tensor::wrap(std::shared_ptr<Node> node) {
  Tensor t;
  t.node_ = std::move(node);
  return t;
}

double Tensor::item() const {
  if (!node_ || node_->value.size() != 1)
    fail(ErrorKind::invalid_argument, "item(): tensor is not a scalar");
  return node_->value[0];
}

Tensor constant(std::vector<std::size_t> shape, std::vector<double> data) {
  return Tensor::from(std::move(shape), std::move(data), false);
}

void backward(const Tensor& root) {
  if (!root.defined() || root.size() != 1)
    fail(ErrorKind::invalid_argument, "backward: root must be a scalar");

  // iterative post-order over parents
  std::vector<Node*> order;
  std::unordered_set<Node*> seen;
  std::vector<std::pair<Node*, std::size_t>> stack{{root.node().get(), 0}};
  seen.insert(root.node().get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      Node* p = node->parents[next++].get();
      if (seen.insert(p).second) stack.emplace_back(p, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  for (Node* n : order) n->ensure_grad();
  root.node()->grad[0] += 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it)
    if ((*it)->backward_fn) (*it)->backward_fn(**it);
}

// --- elementwise ops -------------------------------------------------------------

namespace {
Tensor unary_op(const Tensor& a, std::vector<double> value,
                std::function<void(Node&, Node&)> pull) {
  auto out = make_node(a.shape(), std::move(value), a.requires_grad());
  if (a.requires_grad()) {
    out->parents = {a.node()};
    out->backward_fn = [pull = std::move(pull)](Node& self) {
      Node& pa = *self.parents[0];
      pa.ensure_grad();
      pull(self, pa);
    };
  }
  return Tensor::wrap(out);
}
}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
  if (!same_shape(a, b)) fail(ErrorKind::invalid_argument, "add: shape mismatch");
  std::vector<double> v(a.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = a.data()[i] + b.data()[i];
  bool needs = a.requires_grad() || b.requires_grad();
  auto out = make_node(a.shape(), std::move(v), needs);
  if (needs) {
    out->parents = {a.node(), b.node()};
    out->backward_fn = [](Node& self) {
      for (auto& p : self.parents) {
        if (!p->requires_grad) continue;
        p->ensure_grad();
        for (std::size_t i = 0; i < self.grad.size(); ++i)
          p->grad[i] += self.grad[i];
      }
    };
  }
  return Tensor::wrap(out);
}

Tensor mul(const Tensor& a, const Tensor& b) {
  if (!same_shape(a, b)) fail(ErrorKind::invalid_argument, "mul: shape mismatch");
  std::vector<double> v(a.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = a.data()[i] * b.data()[i];
  bool needs = a.requires_grad() || b.requires_grad();
  auto out = make_node(a.shape(), std::move(v), needs);
  if (needs) {
    out->parents = {a.node(), b.node()};
    out->backward_fn = [](Node& self) {
      Node& pa = *self.parents[0];
      Node& pb = *self.parents[1];
      if (pa.requires_grad) {
        pa.ensure_grad();
        for (std::size_t i = 0; i < self.grad.size(); ++i)
          pa.grad[i] += self.grad[i] * pb.value[i];
      }
      if (pb.requires_grad) {
        pb.ensure_grad();
        for (std::size_t i = 0; i < self.grad.size(); ++i)
          pb.grad[i] += self.grad[i] * pa.value[i];
      }
    };
  }
  return Tensor::wrap(out);
}

Tensor scale(const Tensor& a, double s) {
  std::vector<double> v(a.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = s * a.data()[i];
  return unary_op(a, std::move(v), [s](Node& self, Node& pa) {
    for (std::size_t i = 0; i < self.grad.size(); ++i)
      pa.grad[i] += s * self.grad[i];
  });
}

Tensor tanh(const Tensor& a) {
  std::vector<double> v(a.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = std::tanh(a.data()[i]);
  return unary_op(a, std::move(v), [](Node& self, Node& pa) {
    for (std::size_t i = 0; i < self.grad.size(); ++i)
      pa.grad[i] += (1.0 - self.value[i] * self.value[i]) * self.grad[i];
  });
}

Tensor sigmoid(const Tensor& a) {
  std::vector<double> v(a.size());
  for (std::size_t i = 0; i < v.size(); ++i)
    v[i] = 1.0 / (1.0 + std::exp(-a.data()[i]));
  return unary_op(a, std::move(v), [](Node& self, Node& pa) {
    for (std::size_t i = 0; i < self.grad.size(); ++i)
      pa.grad[i] += self.value[i] * (1.0 - self.value[i]) * self.grad[i];
  });
}

Tensor relu(const Tensor& a) {
  std::vector<double> v(a.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = std::max(0.0, a.data()[i]);
  return unary_op(a, std::move(v), [](Node& self, Node& pa) {
    for (std::size_t i = 0; i < self.grad.size(); ++i)
      if (self.value[i] > 0.0) pa.grad[i] += self.grad[i];
  });
}

Tensor mean_all(const Tensor& a) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a.data()[i];
  auto n = static_cast<double>(a.size());
  auto out = make_node({1}, {acc / n}, a.requires_grad());
  if (a.requires_grad()) {
    out->parents = {a.node()};
    out->backward_fn = [n](Node& self) {
      Node& pa = *self.parents[0];
      pa.ensure_grad();
      double g = self.grad[0] / n;
      for (auto& gi : pa.grad) gi += g;
    };
  }
  return Tensor::wrap(out);
}

Tensor concat_cols(const Tensor& a, const Tensor& b) {
  if (!a.defined()) return b;
  if (!b.defined()) return a;
  if (a.shape().size() != 2 || b.shape().size() != 2 || a.dim(0) != b.dim(0))
    fail(ErrorKind::invalid_argument, "concat_cols: expects {B, D} pairs");
  std::size_t rows = a.dim(0), ca = a.dim(1), cb = b.dim(1);
  std::vector<double> v(rows * (ca + cb));
  for (std::size_t r = 0; r < rows; ++r) {
    std::copy_n(a.data() + r * ca, ca, v.begin() + static_cast<long>(r * (ca + cb)));
    std::copy_n(b.data() + r * cb, cb,
                v.begin() + static_cast<long>(r * (ca + cb) + ca));
  }
  bool needs = a.requires_grad() || b.requires_grad();
  auto out = make_node({rows, ca + cb}, std::move(v), needs);
  if (needs) {
    out->parents = {a.node(), b.node()};
    out->backward_fn = [rows, ca, cb](Node& self) {
      Node& pa = *self.parents[0];
      Node& pb = *self.parents[1];
      for (std::size_t r = 0; r < rows; ++r) {
        if (pa.requires_grad) {
          pa.ensure_grad();
          for (std::size_t c = 0; c < ca; ++c)
            pa.grad[r * ca + c] += self.grad[r * (ca + cb) + c];
        }
        if (pb.requires_grad) {
          pb.ensure_grad();
          for (std::size_t c = 0; c < cb; ++c)
            pb.grad[r * cb + c] += self.grad[r * (ca + cb) + ca + c];
        }
      }
    };
  }
  return Tensor::wrap(out);
}

}  // namespace hsicnet::nn
