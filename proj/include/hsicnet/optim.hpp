#pragma once

#include <cstddef>
#include <vector>

#include "hsicnet/tensor.hpp"

namespace hsicnet::nn {

// Cosine annealing between lr_max (step 0) and lr_min (step total_steps).
double cosine_lr(std::size_t step, std::size_t total_steps, double lr_max,
                 double lr_min);

// Adam with bias correction (beta1 0.9, beta2 0.999, eps 1e-8). A non-finite
// gradient aborts the step with a numeric error naming the parameter.
class Adam {
 public:
  explicit Adam(std::vector<Tensor> params, double beta1 = 0.9,
                double beta2 = 0.999, double eps = 1e-8);

  void step(double lr);
  void zero_grad();
  std::size_t steps_taken() const { return t_; }

 private:
  std::vector<Tensor> params_;
  std::vector<std::vector<double>> m_, v_;
  double beta1_, beta2_, eps_;
  std::size_t t_ = 0;
};

}  // namespace hsicnet::nn
