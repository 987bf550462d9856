#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "hsicnet/rng.hpp"
#include "hsicnet/tensor.hpp"

namespace hsicnet::nn {

enum class Padding { none, same };

// 1-D convolution (cross-correlation) over {B, C, T} tensors.
// T_out = floor((T + pad_total - dilation*(k-1) - 1) / stride) + 1;
// `same` pads dilation*(k-1) total (split left-biased) so stride 1 keeps T
// and stride 2 yields ceil(T/2).
Tensor conv1d(const Tensor& x, const Tensor& w, const Tensor& b, int stride,
              int dilation, Padding padding);

// Max pooling, kernel 2, stride 1, length preserved (last position passes
// through). Ties route the gradient to the earlier sample.
Tensor maxpool1d_k2_same(const Tensor& x);

// Inverted dropout with a seeded mask; eval mode is the identity.
Tensor dropout(const Tensor& x, double p, Rng& rng, bool training);

// Mean over the valid prefix of the time axis: {B, C, T} -> {B, C}.
// lengths[b] in [1, T] marks how much of item b is real (zero padding is
// excluded from the mean). Empty lengths means full length everywhere.
Tensor global_avg_pool(const Tensor& x, const std::vector<std::size_t>& lengths);

// Mean cross entropy of logits {B, K} against integer labels; backward is the
// usual softmax-minus-onehot over the batch.
Tensor softmax_cross_entropy(const Tensor& logits, const std::vector<int>& labels);

// argmax per row of {B, K} values (no graph involvement).
std::vector<int> argmax_rows(const Tensor& logits);

// --- stateful layers ----------------------------------------------------------

// He-uniform init over [-sqrt(6/fan_in), +sqrt(6/fan_in)].
double he_uniform_limit(std::size_t fan_in);

struct Conv1d {
  Tensor w;  // {C_out, C_in, k}
  Tensor b;  // {C_out}
  int stride = 1;
  int dilation = 1;
  Padding padding = Padding::same;

  Conv1d() = default;
  Conv1d(std::size_t c_in, std::size_t c_out, std::size_t k, int stride,
         int dilation, Padding padding, Rng& rng);
  Tensor forward(const Tensor& x) const { return conv1d(x, w, b, stride, dilation, padding); }
  std::vector<std::pair<std::string, Tensor>> named_params(const std::string& prefix) const;
};

struct Linear {
  Tensor w;  // {out, in}
  Tensor b;  // {out}

  Linear() = default;
  Linear(std::size_t in, std::size_t out, Rng& rng);
  Tensor forward(const Tensor& x) const;  // {B, in} -> {B, out}
  std::vector<std::pair<std::string, Tensor>> named_params(const std::string& prefix) const;
};

// Batch norm over {B, D}: biased batch variance, eps 1e-5, running stats with
// momentum 0.1. Training mode needs B >= 2.
struct BatchNorm1d {
  Tensor gamma, beta;
  std::vector<double> running_mean, running_var;
  double eps = 1e-5;
  double momentum = 0.1;

  BatchNorm1d() = default;
  explicit BatchNorm1d(std::size_t dim);
  Tensor forward(const Tensor& x, bool training);
  std::vector<std::pair<std::string, Tensor>> named_params(const std::string& prefix) const;
};

// WaveNet-style gated residual unit: two dilated convolutions feed
// tanh * sigmoid, a 1x1 projection re-joins the residual path and a second
// 1x1 projection emits the skip contribution.
struct GatedResidualBlock {
  Conv1d filter, gate, project_res, project_skip;

  GatedResidualBlock() = default;
  GatedResidualBlock(std::size_t channels, int dilation, Rng& rng);
  // returns {residual_out, skip_out}
  std::pair<Tensor, Tensor> forward(const Tensor& x) const;
  std::vector<std::pair<std::string, Tensor>> named_params(const std::string& prefix) const;
};

}  // namespace hsicnet::nn
