#include "hsicnet/nn.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>

#include "hsicnet/error.hpp"

namespace hsicnet::nn {

namespace {
using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapRow = Eigen::Map<RowMat>;
using MapRowC = Eigen::Map<const RowMat>;

struct ConvDims {
  std::size_t batch, c_in, c_out, t_in, t_out, k;
  int stride, dilation, pad_left;
};

// Gathers one batch item into a (c_in*k) x t_out patch matrix; out-of-range
// taps read as zero padding.
void im2col(const double* xb, const ConvDims& d, Eigen::MatrixXd& col) {
  col.resize(static_cast<long>(d.c_in * d.k), static_cast<long>(d.t_out));
  for (std::size_t t = 0; t < d.t_out; ++t) {
    long start = static_cast<long>(t) * d.stride - d.pad_left;
    for (std::size_t ci = 0; ci < d.c_in; ++ci) {
      const double* src = xb + ci * d.t_in;
      for (std::size_t j = 0; j < d.k; ++j) {
        long idx = start + static_cast<long>(j) * d.dilation;
        col(static_cast<long>(ci * d.k + j), static_cast<long>(t)) =
            (idx >= 0 && idx < static_cast<long>(d.t_in)) ? src[idx] : 0.0;
      }
    }
  }
}
}  // namespace

Tensor conv1d(const Tensor& x, const Tensor& w, const Tensor& b, int stride,
              int dilation, Padding padding) {
  if (!x.defined() || x.shape().size() != 3)
    fail(ErrorKind::invalid_argument, "conv1d: input must be {B, C, T}");
  if (!w.defined() || w.shape().size() != 3)
    fail(ErrorKind::invalid_argument, "conv1d: weight must be {C_out, C_in, k}");
  if (w.dim(1) != x.dim(1))
    fail(ErrorKind::invalid_argument, "conv1d: channel mismatch between input and weight");
  if (b.defined() && (b.shape().size() != 1 || b.dim(0) != w.dim(0)))
    fail(ErrorKind::invalid_argument, "conv1d: bias must be {C_out}");
  if (stride < 1 || dilation < 1)
    fail(ErrorKind::invalid_argument, "conv1d: stride and dilation must be >= 1");

  ConvDims d;
  d.batch = x.dim(0);
  d.c_in = x.dim(1);
  d.t_in = x.dim(2);
  d.c_out = w.dim(0);
  d.k = w.dim(2);
  d.stride = stride;
  d.dilation = dilation;
  std::size_t span = static_cast<std::size_t>(dilation) * (d.k - 1) + 1;
  std::size_t pad_total = padding == Padding::same ? span - 1 : 0;
  d.pad_left = static_cast<int>(pad_total / 2);
  if (d.t_in + pad_total < span)
    fail(ErrorKind::invalid_argument, "conv1d: input shorter than kernel span");
  d.t_out = (d.t_in + pad_total - span) / static_cast<std::size_t>(stride) + 1;

  std::vector<double> value(d.batch * d.c_out * d.t_out);
  MapRowC wm(w.data(), static_cast<long>(d.c_out), static_cast<long>(d.c_in * d.k));
  Eigen::MatrixXd col;
  for (std::size_t bi = 0; bi < d.batch; ++bi) {
    im2col(x.data() + bi * d.c_in * d.t_in, d, col);
    MapRow ym(value.data() + bi * d.c_out * d.t_out, static_cast<long>(d.c_out),
              static_cast<long>(d.t_out));
    ym.noalias() = wm * col;
    if (b.defined())
      for (std::size_t co = 0; co < d.c_out; ++co)
        ym.row(static_cast<long>(co)).array() += b.data()[co];
  }

  bool needs = x.requires_grad() || w.requires_grad() ||
               (b.defined() && b.requires_grad());
  auto out = Tensor::from({d.batch, d.c_out, d.t_out}, std::move(value), needs);
  if (!needs) return out;

  auto node = out.node();
  node->parents = {x.node(), w.node()};
  if (b.defined()) node->parents.push_back(b.node());
  node->backward_fn = [d](Node& self) {
    Node& px = *self.parents[0];
    Node& pw = *self.parents[1];
    Node* pb = self.parents.size() > 2 ? self.parents[2].get() : nullptr;
    MapRowC wm(pw.value.data(), static_cast<long>(d.c_out),
               static_cast<long>(d.c_in * d.k));
    Eigen::MatrixXd col, dcol;
    for (std::size_t bi = 0; bi < d.batch; ++bi) {
      MapRowC gm(self.grad.data() + bi * d.c_out * d.t_out,
                 static_cast<long>(d.c_out), static_cast<long>(d.t_out));
      if (pw.requires_grad) {
        pw.ensure_grad();
        im2col(px.value.data() + bi * d.c_in * d.t_in, d, col);
        MapRow dwm(pw.grad.data(), static_cast<long>(d.c_out),
                   static_cast<long>(d.c_in * d.k));
        dwm.noalias() += gm * col.transpose();
      }
      if (pb && pb->requires_grad) {
        pb->ensure_grad();
        // Scalar sum on purpose: Eigen's vectorized redux peels to an aligned
        // boundary, so its summation order (and last-bit result) depends on
        // the buffer address. Reruns must be bit-identical.
        const double* gr = self.grad.data() + bi * d.c_out * d.t_out;
        for (std::size_t co = 0; co < d.c_out; ++co) {
          double s = 0.0;
          for (std::size_t t = 0; t < d.t_out; ++t) s += gr[co * d.t_out + t];
          pb->grad[co] += s;
        }
      }
      if (px.requires_grad) {
        px.ensure_grad();
        dcol.noalias() = wm.transpose() * gm;
        double* dx = px.grad.data() + bi * d.c_in * d.t_in;
        for (std::size_t t = 0; t < d.t_out; ++t) {
          long start = static_cast<long>(t) * d.stride - d.pad_left;
          for (std::size_t ci = 0; ci < d.c_in; ++ci)
            for (std::size_t j = 0; j < d.k; ++j) {
              long idx = start + static_cast<long>(j) * d.dilation;
              if (idx >= 0 && idx < static_cast<long>(d.t_in))
                dx[ci * d.t_in + idx] +=
                    dcol(static_cast<long>(ci * d.k + j), static_cast<long>(t));
            }
        }
      }
    }
  };
  return out;
}

Tensor maxpool1d_k2_same(const Tensor& x) {
  if (!x.defined() || x.shape().size() != 3)
    fail(ErrorKind::invalid_argument, "maxpool1d: input must be {B, C, T}");
  std::size_t batch = x.dim(0), ch = x.dim(1), t_len = x.dim(2);
  std::vector<double> value(x.size());
  for (std::size_t bc = 0; bc < batch * ch; ++bc) {
    const double* src = x.data() + bc * t_len;
    double* dst = value.data() + bc * t_len;
    for (std::size_t t = 0; t + 1 < t_len; ++t) dst[t] = std::max(src[t], src[t + 1]);
    dst[t_len - 1] = src[t_len - 1];
  }
  auto out = Tensor::from(x.shape(), std::move(value), x.requires_grad());
  if (!x.requires_grad()) return out;
  auto node = out.node();
  node->parents = {x.node()};
  node->backward_fn = [batch, ch, t_len](Node& self) {
    Node& px = *self.parents[0];
    px.ensure_grad();
    for (std::size_t bc = 0; bc < batch * ch; ++bc) {
      const double* src = px.value.data() + bc * t_len;
      const double* g = self.grad.data() + bc * t_len;
      double* dx = px.grad.data() + bc * t_len;
      for (std::size_t t = 0; t + 1 < t_len; ++t)
        dx[src[t] >= src[t + 1] ? t : t + 1] += g[t];
      dx[t_len - 1] += g[t_len - 1];
    }
  };
  return out;
}

Tensor dropout(const Tensor& x, double p, Rng& rng, bool training) {
  if (p < 0.0 || p >= 1.0)
    fail(ErrorKind::invalid_argument, "dropout: p must lie in [0, 1)");
  if (!training || p == 0.0) return x;
  std::vector<double> mask(x.size());
  double keep_scale = 1.0 / (1.0 - p);
  for (auto& m : mask) m = rng.uniform() >= p ? keep_scale : 0.0;
  std::vector<double> value(x.size());
  for (std::size_t i = 0; i < value.size(); ++i) value[i] = x.data()[i] * mask[i];
  auto out = Tensor::from(x.shape(), std::move(value), x.requires_grad());
  if (!x.requires_grad()) return out;
  auto node = out.node();
  node->parents = {x.node()};
  node->backward_fn = [mask = std::move(mask)](Node& self) {
    Node& px = *self.parents[0];
    px.ensure_grad();
    for (std::size_t i = 0; i < mask.size(); ++i)
      px.grad[i] += self.grad[i] * mask[i];
  };
  return out;
}

Tensor global_avg_pool(const Tensor& x, const std::vector<std::size_t>& lengths) {
  if (!x.defined() || x.shape().size() != 3)
    fail(ErrorKind::invalid_argument, "global_avg_pool: input must be {B, C, T}");
  std::size_t batch = x.dim(0), ch = x.dim(1), t_len = x.dim(2);
  std::vector<std::size_t> lens = lengths;
  if (lens.empty()) lens.assign(batch, t_len);
  if (lens.size() != batch)
    fail(ErrorKind::invalid_argument, "global_avg_pool: lengths size mismatch");
  for (auto l : lens)
    if (l < 1 || l > t_len)
      fail(ErrorKind::invalid_argument, "global_avg_pool: length out of range");

  std::vector<double> value(batch * ch, 0.0);
  for (std::size_t b = 0; b < batch; ++b)
    for (std::size_t c = 0; c < ch; ++c) {
      const double* src = x.data() + (b * ch + c) * t_len;
      double acc = 0.0;
      for (std::size_t t = 0; t < lens[b]; ++t) acc += src[t];
      value[b * ch + c] = acc / static_cast<double>(lens[b]);
    }
  auto out = Tensor::from({batch, ch}, std::move(value), x.requires_grad());
  if (!x.requires_grad()) return out;
  auto node = out.node();
  node->parents = {x.node()};
  node->backward_fn = [batch, ch, t_len, lens = std::move(lens)](Node& self) {
    Node& px = *self.parents[0];
    px.ensure_grad();
    for (std::size_t b = 0; b < batch; ++b)
      for (std::size_t c = 0; c < ch; ++c) {
        double g = self.grad[b * ch + c] / static_cast<double>(lens[b]);
        double* dx = px.grad.data() + (b * ch + c) * t_len;
        for (std::size_t t = 0; t < lens[b]; ++t) dx[t] += g;
      }
  };
  return out;
}

Tensor softmax_cross_entropy(const Tensor& logits, const std::vector<int>& labels) {
  if (!logits.defined() || logits.shape().size() != 2)
    fail(ErrorKind::invalid_argument, "cross_entropy: logits must be {B, K}");
  std::size_t batch = logits.dim(0), k = logits.dim(1);
  if (labels.size() != batch)
    fail(ErrorKind::invalid_argument, "cross_entropy: label count mismatch");
  std::vector<double> probs(batch * k);
  double loss = 0.0;
  for (std::size_t b = 0; b < batch; ++b) {
    if (labels[b] < 0 || static_cast<std::size_t>(labels[b]) >= k)
      fail(ErrorKind::invalid_argument, "cross_entropy: label out of range");
    const double* row = logits.data() + b * k;
    double mx = *std::max_element(row, row + k);
    double z = 0.0;
    for (std::size_t j = 0; j < k; ++j) z += std::exp(row[j] - mx);
    double log_z = std::log(z) + mx;
    for (std::size_t j = 0; j < k; ++j) probs[b * k + j] = std::exp(row[j] - log_z);
    loss += log_z - row[labels[b]];
  }
  loss /= static_cast<double>(batch);
  auto out = Tensor::from({1}, {loss}, logits.requires_grad());
  if (!logits.requires_grad()) return out;
  auto node = out.node();
  node->parents = {logits.node()};
  node->backward_fn = [batch, k, labels, probs = std::move(probs)](Node& self) {
    Node& pl = *self.parents[0];
    pl.ensure_grad();
    double g = self.grad[0] / static_cast<double>(batch);
    for (std::size_t b = 0; b < batch; ++b)
      for (std::size_t j = 0; j < k; ++j) {
        double delta = static_cast<std::size_t>(labels[b]) == j ? 1.0 : 0.0;
        pl.grad[b * k + j] += g * (probs[b * k + j] - delta);
      }
  };
  return out;
}

std::vector<int> argmax_rows(const Tensor& logits) {
  if (!logits.defined() || logits.shape().size() != 2)
    fail(ErrorKind::invalid_argument, "argmax_rows: input must be {B, K}");
  std::size_t batch = logits.dim(0), k = logits.dim(1);
  std::vector<int> result(batch);
  for (std::size_t b = 0; b < batch; ++b) {
    const double* row = logits.data() + b * k;
    result[b] = static_cast<int>(std::max_element(row, row + k) - row);
  }
  return result;
}

double he_uniform_limit(std::size_t fan_in) {
  if (fan_in == 0) fail(ErrorKind::invalid_argument, "he_uniform_limit: fan_in == 0");
  return std::sqrt(6.0 / static_cast<double>(fan_in));
}

namespace {
Tensor he_uniform(std::vector<std::size_t> shape, std::size_t fan_in, Rng& rng) {
  double lim = he_uniform_limit(fan_in);
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  std::vector<double> v(n);
  for (auto& x : v) x = lim * (2.0 * rng.uniform() - 1.0);
  return Tensor::from(std::move(shape), std::move(v), true);
}
}  // namespace

Conv1d::Conv1d(std::size_t c_in, std::size_t c_out, std::size_t k, int stride_,
               int dilation_, Padding padding_, Rng& rng)
    : stride(stride_), dilation(dilation_), padding(padding_) {
  if (c_in == 0 || c_out == 0 || k == 0)
    fail(ErrorKind::invalid_argument, "Conv1d: zero-sized dimension");
  w = he_uniform({c_out, c_in, k}, c_in * k, rng);
  b = Tensor::zeros({c_out}, true);
}

std::vector<std::pair<std::string, Tensor>> Conv1d::named_params(
    const std::string& prefix) const {
  return {{prefix + ".w", w}, {prefix + ".b", b}};
}

Linear::Linear(std::size_t in, std::size_t out, Rng& rng) {
  if (in == 0 || out == 0)
    fail(ErrorKind::invalid_argument, "Linear: zero-sized dimension");
  w = he_uniform({out, in}, in, rng);
  b = Tensor::zeros({out}, true);
}

Tensor Linear::forward(const Tensor& x) const {
  if (!x.defined() || x.shape().size() != 2 || x.dim(1) != w.dim(1))
    fail(ErrorKind::invalid_argument, "Linear: input must be {B, in}");
  std::size_t batch = x.dim(0), in = w.dim(1), out_dim = w.dim(0);
  std::vector<double> value(batch * out_dim);
  {
    MapRowC xm(x.data(), static_cast<long>(batch), static_cast<long>(in));
    MapRowC wm(w.data(), static_cast<long>(out_dim), static_cast<long>(in));
    MapRow ym(value.data(), static_cast<long>(batch), static_cast<long>(out_dim));
    ym.noalias() = xm * wm.transpose();
    for (std::size_t o = 0; o < out_dim; ++o)
      ym.col(static_cast<long>(o)).array() += b.data()[o];
  }
  bool needs = x.requires_grad() || w.requires_grad() || b.requires_grad();
  auto result = Tensor::from({batch, out_dim}, std::move(value), needs);
  if (!needs) return result;
  auto node = result.node();
  node->parents = {x.node(), w.node(), b.node()};
  node->backward_fn = [batch, in, out_dim](Node& self) {
    Node& px = *self.parents[0];
    Node& pw = *self.parents[1];
    Node& pb = *self.parents[2];
    MapRowC gm(self.grad.data(), static_cast<long>(batch), static_cast<long>(out_dim));
    MapRowC xm(px.value.data(), static_cast<long>(batch), static_cast<long>(in));
    MapRowC wm(pw.value.data(), static_cast<long>(out_dim), static_cast<long>(in));
    if (px.requires_grad) {
      px.ensure_grad();
      MapRow dxm(px.grad.data(), static_cast<long>(batch), static_cast<long>(in));
      dxm.noalias() += gm * wm;
    }
    if (pw.requires_grad) {
      pw.ensure_grad();
      MapRow dwm(pw.grad.data(), static_cast<long>(out_dim), static_cast<long>(in));
      dwm.noalias() += gm.transpose() * xm;
    }
    if (pb.requires_grad) {
      pb.ensure_grad();
      // Scalar loop for the same bit-reproducibility reason as in conv1d.
      for (std::size_t bi = 0; bi < batch; ++bi)
        for (std::size_t o = 0; o < out_dim; ++o)
          pb.grad[o] += self.grad[bi * out_dim + o];
    }
  };
  return result;
}

std::vector<std::pair<std::string, Tensor>> Linear::named_params(
    const std::string& prefix) const {
  return {{prefix + ".w", w}, {prefix + ".b", b}};
}

BatchNorm1d::BatchNorm1d(std::size_t dim) {
  if (dim == 0) fail(ErrorKind::invalid_argument, "BatchNorm1d: zero dim");
  gamma = Tensor::from({dim}, std::vector<double>(dim, 1.0), true);
  beta = Tensor::zeros({dim}, true);
  running_mean.assign(dim, 0.0);
  running_var.assign(dim, 1.0);
}

Tensor BatchNorm1d::forward(const Tensor& x, bool training) {
  std::size_t dim = gamma.dim(0);
  if (!x.defined() || x.shape().size() != 2 || x.dim(1) != dim)
    fail(ErrorKind::invalid_argument, "BatchNorm1d: input must be {B, dim}");
  std::size_t batch = x.dim(0);

  std::vector<double> mean(dim), var(dim);
  if (training) {
    if (batch < 2)
      fail(ErrorKind::numeric, "BatchNorm1d: training needs batch size >= 2");
    for (std::size_t d = 0; d < dim; ++d) {
      double m = 0.0;
      for (std::size_t b = 0; b < batch; ++b) m += x.data()[b * dim + d];
      m /= static_cast<double>(batch);
      double v = 0.0;
      for (std::size_t b = 0; b < batch; ++b) {
        double c = x.data()[b * dim + d] - m;
        v += c * c;
      }
      v /= static_cast<double>(batch);
      mean[d] = m;
      var[d] = v;
      running_mean[d] = (1.0 - momentum) * running_mean[d] + momentum * m;
      running_var[d] = (1.0 - momentum) * running_var[d] + momentum * v;
    }
  } else {
    mean = running_mean;
    var = running_var;
  }

  std::vector<double> inv_std(dim), xhat(batch * dim), value(batch * dim);
  for (std::size_t d = 0; d < dim; ++d) inv_std[d] = 1.0 / std::sqrt(var[d] + eps);
  for (std::size_t b = 0; b < batch; ++b)
    for (std::size_t d = 0; d < dim; ++d) {
      double xh = (x.data()[b * dim + d] - mean[d]) * inv_std[d];
      xhat[b * dim + d] = xh;
      value[b * dim + d] = gamma.data()[d] * xh + beta.data()[d];
    }

  bool needs = x.requires_grad() || gamma.requires_grad() || beta.requires_grad();
  auto out = Tensor::from({batch, dim}, std::move(value), needs);
  if (!needs) return out;
  auto node = out.node();
  node->parents = {x.node(), gamma.node(), beta.node()};
  node->backward_fn = [batch, dim, training, inv_std = std::move(inv_std),
                       xhat = std::move(xhat)](Node& self) {
    Node& px = *self.parents[0];
    Node& pg = *self.parents[1];
    Node& pbeta = *self.parents[2];
    if (pg.requires_grad) {
      pg.ensure_grad();
      for (std::size_t b = 0; b < batch; ++b)
        for (std::size_t d = 0; d < dim; ++d)
          pg.grad[d] += self.grad[b * dim + d] * xhat[b * dim + d];
    }
    if (pbeta.requires_grad) {
      pbeta.ensure_grad();
      for (std::size_t b = 0; b < batch; ++b)
        for (std::size_t d = 0; d < dim; ++d)
          pbeta.grad[d] += self.grad[b * dim + d];
    }
    if (!px.requires_grad) return;
    px.ensure_grad();
    if (!training) {
      for (std::size_t b = 0; b < batch; ++b)
        for (std::size_t d = 0; d < dim; ++d)
          px.grad[b * dim + d] +=
              self.grad[b * dim + d] * pg.value[d] * inv_std[d];
      return;
    }
    double n = static_cast<double>(batch);
    for (std::size_t d = 0; d < dim; ++d) {
      double sum_dxhat = 0.0, sum_dxhat_xhat = 0.0;
      for (std::size_t b = 0; b < batch; ++b) {
        double dxh = self.grad[b * dim + d] * pg.value[d];
        sum_dxhat += dxh;
        sum_dxhat_xhat += dxh * xhat[b * dim + d];
      }
      for (std::size_t b = 0; b < batch; ++b) {
        double dxh = self.grad[b * dim + d] * pg.value[d];
        px.grad[b * dim + d] +=
            inv_std[d] *
            (dxh - sum_dxhat / n - xhat[b * dim + d] * sum_dxhat_xhat / n);
      }
    }
  };
  return out;
}

std::vector<std::pair<std::string, Tensor>> BatchNorm1d::named_params(
    const std::string& prefix) const {
  return {{prefix + ".gamma", gamma}, {prefix + ".beta", beta}};
}

GatedResidualBlock::GatedResidualBlock(std::size_t channels, int dilation, Rng& rng)
    : filter(channels, channels, 3, 1, dilation, Padding::same, rng),
      gate(channels, channels, 3, 1, dilation, Padding::same, rng),
      project_res(channels, channels, 1, 1, 1, Padding::same, rng),
      project_skip(channels, channels, 1, 1, 1, Padding::same, rng) {}

std::pair<Tensor, Tensor> GatedResidualBlock::forward(const Tensor& x) const {
  Tensor h = mul(tanh(filter.forward(x)), sigmoid(gate.forward(x)));
  Tensor res = add(project_res.forward(h), x);
  Tensor skip = project_skip.forward(h);
  return {res, skip};
}

std::vector<std::pair<std::string, Tensor>> GatedResidualBlock::named_params(
    const std::string& prefix) const {
  std::vector<std::pair<std::string, Tensor>> out;
  for (auto& [sub, layer] :
       std::initializer_list<std::pair<const char*, const Conv1d*>>{
           {".filter", &filter},
           {".gate", &gate},
           {".project_res", &project_res},
           {".project_skip", &project_skip}}) {
    for (auto& p : layer->named_params(prefix + sub)) out.push_back(p);
  }
  return out;
}

}  // namespace hsicnet::nn
