#include "hsicnet/optim.hpp"

#include <cmath>
#include <string>

#include "hsicnet/error.hpp"

namespace hsicnet::nn {

double cosine_lr(std::size_t step, std::size_t total_steps, double lr_max,
                 double lr_min) {
  if (total_steps == 0)
    fail(ErrorKind::invalid_argument, "cosine_lr: total_steps must be > 0");
  if (step >= total_steps) return lr_min;
  double phase = static_cast<double>(step) / static_cast<double>(total_steps);
  return lr_min + 0.5 * (lr_max - lr_min) * (1.0 + std::cos(M_PI * phase));
}

Adam::Adam(std::vector<Tensor> params, double beta1, double beta2, double eps)
    : params_(std::move(params)), beta1_(beta1), beta2_(beta2), eps_(eps) {
  m_.resize(params_.size());
  v_.resize(params_.size());
  for (std::size_t i = 0; i < params_.size(); ++i) {
    if (!params_[i].defined() || !params_[i].requires_grad())
      fail(ErrorKind::invalid_argument, "Adam: parameters must require gradients");
    m_[i].assign(params_[i].size(), 0.0);
    v_[i].assign(params_[i].size(), 0.0);
  }
}

void Adam::step(double lr) {
  ++t_;
  double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (std::size_t i = 0; i < params_.size(); ++i) {
    Tensor& p = params_[i];
    const double* g = p.grad_data();
    double* val = p.data();
    for (std::size_t j = 0; j < p.size(); ++j) {
      if (!std::isfinite(g[j]))
        fail(ErrorKind::numeric,
             "Adam: non-finite gradient in parameter " + std::to_string(i) +
                 " at index " + std::to_string(j));
      m_[i][j] = beta1_ * m_[i][j] + (1.0 - beta1_) * g[j];
      v_[i][j] = beta2_ * v_[i][j] + (1.0 - beta2_) * g[j] * g[j];
      double m_hat = m_[i][j] / bc1;
      double v_hat = v_[i][j] / bc2;
      val[j] -= lr * m_hat / (std::sqrt(v_hat) + eps_);
    }
  }
}

void Adam::zero_grad() {
  for (auto& p : params_) p.zero_grad();
}

}  // namespace hsicnet::nn
