#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "hsicnet/features.hpp"
#include "hsicnet/hsic.hpp"
#include "hsicnet/matrix.hpp"
#include "hsicnet/nn.hpp"
#include "hsicnet/signal.hpp"
#include "hsicnet/tensor.hpp"

namespace hsicnet::model {

struct ModelConfig {
  std::size_t input_len = 5400;
  std::size_t channels = 128;          // residual trunk width
  std::size_t residual_blocks = 9;     // dilations 2, 4, ..., 2^blocks
  std::vector<std::size_t> head_channels = {256, 512};  // last one is the latent dim
  double dropout = 0.3;
  std::size_t num_classes = 2;
  std::size_t feature_dim = 0;         // d_f; 0 = baseline (no concatenation)
  // training
  std::size_t epochs = 100;
  std::size_t batch_size = 32;
  double lr_max = 1e-3;
  double lr_min = 1e-5;

  std::size_t latent_dim() const { return head_channels.back(); }
  std::vector<int> dilations() const;
  void validate() const;  // latent 512, doubling dilations, sane sizes
};

// Penalty weighting. `fixed` uses `value` from epoch 0; `ratio` keeps the
// penalty at rho * cross-entropy after warm_epochs unweighted epochs, i.e.
// lambda = rho * ce / max(hsic, 1e-8) with both read as constants.
struct LambdaConfig {
  enum class Strategy { fixed, ratio };
  Strategy strategy = Strategy::fixed;
  double value = 500.0;
  double rho = 0.25;
  std::size_t warm_epochs = 20;
};

double lambda_for_batch(const LambdaConfig& cfg, std::size_t epoch, double ce,
                        double hsic_value);

// Round-trippable JSON for the architecture block (stored in checkpoints).
std::string model_config_to_json(const ModelConfig& cfg);
ModelConfig model_config_from_json(const std::string& json_text);

// Dilated-convolution classifier with a gated residual trunk, a two-stage
// convolutional head, global average pooling into a 512-dim latent, and a
// linear classifier over [features, latent].
class Net {
 public:
  Net(const ModelConfig& cfg, std::uint64_t seed);

  struct Forward {
    nn::Tensor logits;        // {B, K}
    nn::Tensor latent;        // {B, 512}, post batch norm
    nn::Tensor feature_maps;  // {B, 512, T/2}, pre-pooling (CAM input)
  };

  // x: {B, 1, input_len}; f: {B, d_f} standardized features. An undefined f
  // with d_f > 0 substitutes zeros (latent and maps stay exact; only the
  // logits lose the feature contribution). valid_lens: unpadded sample count
  // per item on the input timeline (pooling mask); empty = all full length.
  Forward forward(const nn::Tensor& x, const nn::Tensor& f,
                  const std::vector<std::size_t>& valid_lens, bool training);

  const ModelConfig& config() const { return cfg_; }
  std::vector<std::pair<std::string, nn::Tensor>> named_params();
  std::vector<nn::Tensor> params();

  // Everything that must round-trip through a checkpoint: parameters plus
  // batch-norm running statistics.
  std::map<std::string, std::vector<double>> state_arrays() const;
  void load_state_arrays(const std::map<std::string, std::vector<double>>& s);

  // Classifier weights attached to the latent block for one class: the
  // trailing 512 entries of that class's row (feature columns excluded).
  std::vector<double> cam_weights(std::size_t target_class) const;

  Rng& rng() { return rng_; }  // dropout stream

 private:
  ModelConfig cfg_;
  nn::Conv1d input_conv_;
  std::vector<nn::GatedResidualBlock> blocks_;
  nn::Conv1d head1_, head2_;
  nn::BatchNorm1d latent_bn_;
  nn::Linear fc_;
  Rng rng_;
};

// --- training ------------------------------------------------------------------

struct TrainLogRow {
  std::size_t epoch = 0;
  double ce = 0, hsic = 0, lambda = 0, lr = 0, sigma_g = 0;
  double val_accuracy = 0, val_f1 = 0;
};

struct Metrics {
  double accuracy = 0;
  std::vector<double> f1_per_class;
  double f1_positive = 0;  // F1 of the designated positive (minority) class
  std::vector<std::vector<std::size_t>> confusion;  // [truth][predicted]
  std::size_t n = 0;
};

Metrics metrics_from_confusion(
    const std::vector<std::vector<std::size_t>>& confusion,
    std::optional<std::size_t> positive_class = std::nullopt);

// Aligned view of signals + engineered features used by train/evaluate.
// Rows of `features` are raw (unstandardized); train() fits the scaler on the
// training split.
struct TrainData {
  const sig::Dataset* dataset = nullptr;
  const feat::FeatureTable* features = nullptr;  // may be null when d_f == 0
};

struct TrainResult {
  std::shared_ptr<Net> net;      // final-epoch weights
  feat::Standardizer scaler;     // fitted on the training split (d_f > 0)
  std::vector<TrainLogRow> log;
  double best_val_accuracy = 0;
  std::size_t best_val_epoch = 0;
  double sigma_f = 0, sigma_g = 0;  // final bandwidths
};

struct TrainOptions {
  LambdaConfig lambda;
  hsic::KernelConfig kernel;     // momentum + floor for sigma_g
  bool upsample_train = true;
  double upsample_ratio = 1.0;
  std::uint64_t seed = 0;
  std::ostream* log_stream = nullptr;           // optional progress lines
  std::string snapshot_path;                    // optional per-epoch checkpoint
};

// Full training loop: stratified batching over the (optionally upsampled)
// training split, Adam with per-step cosine annealing, frozen sigma_f from
// the training features, per-step sigma_g moving average, composite loss
// ce + lambda * hsic. Non-finite losses raise a numeric error (the snapshot
// file, when configured, keeps the last completed epoch).
TrainResult train(const TrainData& data, const ModelConfig& cfg,
                  const TrainOptions& opts);

// Accuracy/F1/confusion of a trained net over one split (eval mode).
Metrics evaluate(Net& net, const feat::Standardizer& scaler,
                 const TrainData& data, sig::Split split);

// Latent vectors (rows) for every record, in dataset order, eval mode. The
// engineered features only touch the classifier head, so none are needed.
Matrix latents(Net& net, const sig::Dataset& dataset);

// Pre-pooling activation maps {512 x T/2} for one record, eval mode.
Matrix feature_maps(Net& net, const sig::SignalRecord& record);

}  // namespace hsicnet::model
