#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "hsicnet/matrix.hpp"
#include "hsicnet/signal.hpp"

namespace hsicnet::eval {

// Small probe network (two ReLU hidden layers) used by all three auxiliary
// protocols. Train/test boundaries always follow the main task's split.
struct AuxNetConfig {
  std::vector<std::size_t> hidden = {128, 128};
  std::size_t epochs = 40;
  std::size_t batch_size = 32;
  double lr = 3e-4;
  std::size_t folds = 5;  // rep2label cross-validation
  std::uint64_t seed = 0;
};

// How well the engineered features alone solve the task: a classifier on F
// (training split, minority upsampled like the main task) scored on the test
// split.
struct RelevanceResult {
  double accuracy = 0;
  double f1 = 0;  // minority-class F1
};
RelevanceResult relevance_task(const Matrix& f, const std::vector<int>& labels,
                               const std::vector<sig::Split>& splits,
                               const AuxNetConfig& cfg);

// How much of F is still readable from the latent G: a shared trunk with one
// linear head per feature dimension, trained on the training split, scored as
// per-dimension R^2 on the test split. Zero-variance target dimensions are
// excluded and reported.
struct IndependenceResult {
  double avg_r2 = 0;
  std::vector<double> per_dim_r2;          // excluded dims carry 0
  std::vector<std::size_t> excluded_dims;  // zero test variance
};
IndependenceResult independence_task(const Matrix& g, const Matrix& f,
                                     const std::vector<sig::Split>& splits,
                                     const AuxNetConfig& cfg);

// 1 - SS_res / SS_tot; truth with zero variance is a numeric error.
double r_squared(const std::vector<double>& prediction,
                 const std::vector<double>& truth);

// Label recovery from the latent alone: stratified k-fold cross-validation
// inside the test split, mean held-out accuracy, plus an exact binomial test
// against chance (p0 = majority share of the test labels).
struct Rep2LabelResult {
  double accuracy = 0;
  double p_value = 1;
  double chance = 0;   // p0 used by the test
  std::size_t n = 0;   // pooled held-out decisions
};
Rep2LabelResult rep2label_task(const Matrix& g_test,
                               const std::vector<int>& labels_test,
                               const AuxNetConfig& cfg);

// Exact two-sided binomial test: total probability of outcomes no more
// likely than the observed count under Binomial(n, p0).
double binomial_chance_test(std::size_t correct, std::size_t n, double p0);

}  // namespace hsicnet::eval
