#pragma once

#include <cstddef>
#include <vector>

#include "hsicnet/matrix.hpp"
#include "hsicnet/tensor.hpp"

namespace hsicnet::hsic {

// Gaussian kernel bandwidth handling for the independence penalty.
struct KernelConfig {
  double sigma = 1.0;
  double momentum = 0.9;        // moving-average weight on the previous sigma
  double min_bandwidth = 1e-6;  // floor when points coincide
};

// K_ij = exp(-||x_i - x_j||^2 / sigma^2). Note the sigma^2 (not 2 sigma^2)
// denominator. sigma must be positive.
Matrix gaussian_kernel_matrix(const Matrix& x, double sigma);

// Median of the n(n-1)/2 pairwise Euclidean distances, floored at
// min_bandwidth (covers the all-points-identical case). n >= 2 required.
double median_heuristic(const Matrix& x, double min_bandwidth = 1e-6);

// sigma_new = momentum * sigma_prev + (1 - momentum) * sigma_batch, floored.
double update_bandwidth(double sigma_prev, double sigma_batch,
                        const KernelConfig& cfg);

// Biased HSIC estimate tr(K H L H) / (n-1)^2 with H = I - 1/n; K from f
// (bandwidth sigma_f), L from g (sigma_g). Double accumulation throughout;
// tiny negatives from rounding clamp to 0. Requires n >= 2 rows on both
// sides and equal row counts.
double hsic_statistic(const Matrix& f, const Matrix& g, double sigma_f,
                      double sigma_g);

// The same statistic as a graph node differentiable w.r.t. g ({n, d} tensor,
// n >= 2). f enters as fixed batch data; both bandwidths are constants
// (stop-gradient), matching how the training loop feeds them.
nn::Tensor hsic_penalty(const nn::Tensor& g, const Matrix& f, double sigma_f,
                        double sigma_g);

}  // namespace hsicnet::hsic
