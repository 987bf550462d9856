#include "hsicnet/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>

#include <json.hpp>

#include "hsicnet/checkpoint.hpp"
#include "hsicnet/error.hpp"
#include "hsicnet/optim.hpp"

namespace hsicnet::model {

using nlohmann::json;

std::vector<int> ModelConfig::dilations() const {
  std::vector<int> d(residual_blocks);
  int cur = 2;
  for (auto& v : d) {
    v = cur;
    cur *= 2;
  }
  return d;
}

void ModelConfig::validate() const {
  if (input_len < 4) fail(ErrorKind::config, "model: input_len must be >= 4");
  if (channels == 0) fail(ErrorKind::config, "model: channels must be >= 1");
  if (residual_blocks == 0 || residual_blocks > 16)
    fail(ErrorKind::config, "model: residual_blocks must lie in [1, 16]");
  if (head_channels.size() != 2)
    fail(ErrorKind::config, "model: head_channels must name exactly two stages");
  if (head_channels.back() != 512)
    fail(ErrorKind::config, "model: the latent dimension is pinned to 512");
  if (head_channels.front() == 0)
    fail(ErrorKind::config, "model: head stage width must be >= 1");
  if (dropout < 0.0 || dropout >= 1.0)
    fail(ErrorKind::config, "model: dropout must lie in [0, 1)");
  if (num_classes < 2) fail(ErrorKind::config, "model: num_classes must be >= 2");
  if (epochs == 0) fail(ErrorKind::config, "model: epochs must be >= 1");
  if (batch_size < 2)
    fail(ErrorKind::config, "model: batch_size must be >= 2 (batch norm)");
  if (lr_min <= 0.0 || lr_max < lr_min)
    fail(ErrorKind::config, "model: need lr_max >= lr_min > 0");
}

double lambda_for_batch(const LambdaConfig& cfg, std::size_t epoch, double ce,
                        double hsic_value) {
  if (cfg.strategy == LambdaConfig::Strategy::fixed) return cfg.value;
  if (epoch < cfg.warm_epochs) return 0.0;
  return cfg.rho * ce / std::max(hsic_value, 1e-8);
}

std::string model_config_to_json(const ModelConfig& cfg) {
  json j;
  j["input_len"] = cfg.input_len;
  j["channels"] = cfg.channels;
  j["residual_blocks"] = cfg.residual_blocks;
  j["head_channels"] = cfg.head_channels;
  j["dropout"] = cfg.dropout;
  j["num_classes"] = cfg.num_classes;
  j["feature_dim"] = cfg.feature_dim;
  j["epochs"] = cfg.epochs;
  j["batch_size"] = cfg.batch_size;
  j["lr_max"] = cfg.lr_max;
  j["lr_min"] = cfg.lr_min;
  return j.dump(2);
}

ModelConfig model_config_from_json(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    fail(ErrorKind::data, std::string("model config json: ") + e.what());
  }
  ModelConfig cfg;
  try {
    cfg.input_len = j.at("input_len").get<std::size_t>();
    cfg.channels = j.at("channels").get<std::size_t>();
    cfg.residual_blocks = j.at("residual_blocks").get<std::size_t>();
    cfg.head_channels = j.at("head_channels").get<std::vector<std::size_t>>();
    cfg.dropout = j.at("dropout").get<double>();
    cfg.num_classes = j.at("num_classes").get<std::size_t>();
    cfg.feature_dim = j.at("feature_dim").get<std::size_t>();
    cfg.epochs = j.at("epochs").get<std::size_t>();
    cfg.batch_size = j.at("batch_size").get<std::size_t>();
    cfg.lr_max = j.at("lr_max").get<double>();
    cfg.lr_min = j.at("lr_min").get<double>();
  } catch (const json::exception& e) {
    fail(ErrorKind::data, std::string("model config json: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

// --- network ---------------------------------------------------------------------

Net::Net(const ModelConfig& cfg, std::uint64_t seed) : cfg_(cfg), rng_(seed) {
  cfg_.validate();
  input_conv_ = nn::Conv1d(1, cfg_.channels, 3, 2, 1, nn::Padding::same, rng_);
  for (int dil : cfg_.dilations())
    blocks_.emplace_back(cfg_.channels, dil, rng_);
  head1_ = nn::Conv1d(cfg_.channels, cfg_.head_channels[0], 3, 1, 1,
                      nn::Padding::same, rng_);
  head2_ = nn::Conv1d(cfg_.head_channels[0], cfg_.head_channels[1], 3, 1, 1,
                      nn::Padding::same, rng_);
  latent_bn_ = nn::BatchNorm1d(cfg_.latent_dim());
  fc_ = nn::Linear(cfg_.feature_dim + cfg_.latent_dim(), cfg_.num_classes, rng_);
}

Net::Forward Net::forward(const nn::Tensor& x, const nn::Tensor& f,
                          const std::vector<std::size_t>& valid_lens,
                          bool training) {
  if (!x.defined() || x.shape().size() != 3 || x.dim(1) != 1 ||
      x.dim(2) != cfg_.input_len)
    fail(ErrorKind::invalid_argument, "Net::forward: x must be {B, 1, input_len}");
  std::size_t batch = x.dim(0);

  nn::Tensor feats = f;
  if (cfg_.feature_dim > 0) {
    if (!feats.defined())
      feats = nn::Tensor::zeros({batch, cfg_.feature_dim});
    if (feats.shape().size() != 2 || feats.dim(0) != batch ||
        feats.dim(1) != cfg_.feature_dim)
      fail(ErrorKind::invalid_argument, "Net::forward: f must be {B, feature_dim}");
  } else if (feats.defined()) {
    fail(ErrorKind::invalid_argument,
         "Net::forward: feature input given but feature_dim is 0");
  }

  nn::Tensor h = input_conv_.forward(x);
  std::size_t t_half = h.dim(2);  // ceil(input_len / 2)

  std::vector<std::size_t> pooled_lens;
  if (!valid_lens.empty()) {
    if (valid_lens.size() != batch)
      fail(ErrorKind::invalid_argument, "Net::forward: valid_lens size mismatch");
    pooled_lens.resize(batch);
    for (std::size_t b = 0; b < batch; ++b) {
      if (valid_lens[b] < 1 || valid_lens[b] > cfg_.input_len)
        fail(ErrorKind::invalid_argument, "Net::forward: valid length out of range");
      pooled_lens[b] = std::min<std::size_t>((valid_lens[b] + 1) / 2, t_half);
    }
  }

  nn::Tensor skip_sum;
  for (auto& block : blocks_) {
    auto [res, skip] = block.forward(h);
    h = res;
    skip_sum = skip_sum.defined() ? nn::add(skip_sum, skip) : skip;
  }

  nn::Tensor z = nn::relu(head1_.forward(skip_sum));
  z = nn::maxpool1d_k2_same(z);
  z = nn::dropout(z, cfg_.dropout, rng_, training);
  z = nn::relu(head2_.forward(z));
  z = nn::maxpool1d_k2_same(z);
  nn::Tensor maps = nn::dropout(z, cfg_.dropout, rng_, training);

  nn::Tensor pooled = nn::global_avg_pool(maps, pooled_lens);
  nn::Tensor latent = latent_bn_.forward(pooled, training);
  nn::Tensor combined =
      cfg_.feature_dim > 0 ? nn::concat_cols(feats, latent) : latent;

  Forward out;
  out.logits = fc_.forward(combined);
  out.latent = latent;
  out.feature_maps = maps;
  return out;
}

std::vector<std::pair<std::string, nn::Tensor>> Net::named_params() {
  std::vector<std::pair<std::string, nn::Tensor>> out;
  auto absorb = [&out](std::vector<std::pair<std::string, nn::Tensor>> v) {
    for (auto& p : v) out.push_back(std::move(p));
  };
  absorb(input_conv_.named_params("input_conv"));
  for (std::size_t i = 0; i < blocks_.size(); ++i)
    absorb(blocks_[i].named_params("block" + std::to_string(i)));
  absorb(head1_.named_params("head1"));
  absorb(head2_.named_params("head2"));
  absorb(latent_bn_.named_params("latent_bn"));
  absorb(fc_.named_params("fc"));
  return out;
}

std::vector<nn::Tensor> Net::params() {
  std::vector<nn::Tensor> out;
  for (auto& [name, t] : named_params()) out.push_back(t);
  return out;
}

std::map<std::string, std::vector<double>> Net::state_arrays() const {
  std::map<std::string, std::vector<double>> out;
  for (auto& [name, t] : const_cast<Net*>(this)->named_params())
    out[name] = t.values();
  out["latent_bn.running_mean"] = latent_bn_.running_mean;
  out["latent_bn.running_var"] = latent_bn_.running_var;
  return out;
}

void Net::load_state_arrays(const std::map<std::string, std::vector<double>>& s) {
  auto expect = [&s](const std::string& name, std::size_t size) {
    auto it = s.find(name);
    if (it == s.end()) fail(ErrorKind::data, "checkpoint missing array: " + name);
    if (it->second.size() != size)
      fail(ErrorKind::data, "checkpoint array has wrong size: " + name);
    return it->second;
  };
  std::size_t expected_count = 2;  // running stats
  for (auto& [name, t] : named_params()) {
    t.values() = expect(name, t.size());
    ++expected_count;
  }
  latent_bn_.running_mean =
      expect("latent_bn.running_mean", latent_bn_.running_mean.size());
  latent_bn_.running_var =
      expect("latent_bn.running_var", latent_bn_.running_var.size());
  if (s.size() != expected_count)
    fail(ErrorKind::data, "checkpoint has unexpected extra arrays");
}

std::vector<double> Net::cam_weights(std::size_t target_class) const {
  if (target_class >= cfg_.num_classes)
    fail(ErrorKind::invalid_argument, "cam_weights: class out of range");
  std::size_t in = cfg_.feature_dim + cfg_.latent_dim();
  const double* row = fc_.w.data() + target_class * in;
  return {row + cfg_.feature_dim, row + in};
}

// --- metrics --------------------------------------------------------------------

Metrics metrics_from_confusion(
    const std::vector<std::vector<std::size_t>>& confusion,
    std::optional<std::size_t> positive_class) {
  std::size_t k = confusion.size();
  if (k < 2) fail(ErrorKind::invalid_argument, "metrics: confusion must be KxK, K>=2");
  for (const auto& row : confusion)
    if (row.size() != k)
      fail(ErrorKind::invalid_argument, "metrics: confusion must be square");

  Metrics m;
  m.confusion = confusion;
  std::size_t total = 0, correct = 0;
  std::vector<std::size_t> truth_count(k, 0), pred_count(k, 0);
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = 0; j < k; ++j) {
      total += confusion[i][j];
      truth_count[i] += confusion[i][j];
      pred_count[j] += confusion[i][j];
      if (i == j) correct += confusion[i][j];
    }
  if (total == 0) fail(ErrorKind::invalid_argument, "metrics: empty confusion");
  m.n = total;
  m.accuracy = static_cast<double>(correct) / static_cast<double>(total);

  m.f1_per_class.resize(k, 0.0);
  for (std::size_t c = 0; c < k; ++c) {
    double tp = static_cast<double>(confusion[c][c]);
    double denom = static_cast<double>(truth_count[c] + pred_count[c]);
    m.f1_per_class[c] = denom > 0.0 ? 2.0 * tp / denom : 0.0;
  }

  std::size_t pos;
  if (positive_class.has_value()) {
    pos = *positive_class;
    if (pos >= k) fail(ErrorKind::invalid_argument, "metrics: positive class out of range");
  } else {
    pos = static_cast<std::size_t>(
        std::min_element(truth_count.begin(), truth_count.end()) -
        truth_count.begin());
  }
  m.f1_positive = m.f1_per_class[pos];
  return m;
}

// --- training --------------------------------------------------------------------

namespace {
struct AlignedData {
  const sig::Dataset* ds = nullptr;
  std::vector<std::vector<double>> features;  // standardized rows, empty if d_f==0
};

void check_dataset(const TrainData& data, const ModelConfig& cfg) {
  if (data.dataset == nullptr)
    fail(ErrorKind::invalid_argument, "train: dataset is required");
  const auto& ds = *data.dataset;
  if (ds.records.empty()) fail(ErrorKind::data, "train: dataset is empty");
  if (ds.splits.size() != ds.records.size())
    fail(ErrorKind::data, "train: dataset has no split assignment");
  if (static_cast<std::size_t>(ds.num_classes) != cfg.num_classes)
    fail(ErrorKind::config, "train: num_classes disagrees with the dataset");
  for (const auto& rec : ds.records) {
    if (rec.samples.size() != cfg.input_len)
      fail(ErrorKind::data,
           "train: record " + rec.id + " length != input_len (pad first)");
    if (rec.label < 0 || rec.label >= ds.num_classes)
      fail(ErrorKind::data, "train: record " + rec.id + " has an invalid label");
  }
  if (cfg.feature_dim > 0) {
    if (data.features == nullptr)
      fail(ErrorKind::config, "train: feature_dim > 0 but no feature table");
    if (data.features->size() != ds.records.size())
      fail(ErrorKind::data, "train: feature table row count mismatch");
    if (data.features->dim() != cfg.feature_dim)
      fail(ErrorKind::config, "train: feature table dim != feature_dim");
    for (std::size_t i = 0; i < ds.records.size(); ++i)
      if (data.features->ids[i] != ds.records[i].id)
        fail(ErrorKind::data, "train: feature table ids out of order");
  }
}

nn::Tensor batch_signals(const sig::Dataset& ds,
                         const std::vector<std::size_t>& idx,
                         std::size_t input_len) {
  std::vector<double> buf(idx.size() * input_len);
  for (std::size_t b = 0; b < idx.size(); ++b)
    std::copy_n(ds.records[idx[b]].samples.data(), input_len,
                buf.data() + b * input_len);
  return nn::Tensor::from({idx.size(), 1, input_len}, std::move(buf));
}

std::vector<std::size_t> batch_valid_lens(const sig::Dataset& ds,
                                          const std::vector<std::size_t>& idx) {
  std::vector<std::size_t> lens(idx.size());
  for (std::size_t b = 0; b < idx.size(); ++b)
    lens[b] = std::max<std::size_t>(ds.records[idx[b]].original_length(), 1);
  return lens;
}

std::vector<int> batch_labels(const sig::Dataset& ds,
                              const std::vector<std::size_t>& idx) {
  std::vector<int> labels(idx.size());
  for (std::size_t b = 0; b < idx.size(); ++b) labels[b] = ds.records[idx[b]].label;
  return labels;
}

nn::Tensor batch_features(const std::vector<std::vector<double>>& rows,
                          const std::vector<std::size_t>& idx) {
  if (rows.empty()) return {};
  std::size_t dim = rows[0].size();
  std::vector<double> buf(idx.size() * dim);
  for (std::size_t b = 0; b < idx.size(); ++b)
    std::copy_n(rows[idx[b]].data(), dim, buf.data() + b * dim);
  return nn::Tensor::from({idx.size(), dim}, std::move(buf));
}

Matrix batch_feature_matrix(const std::vector<std::vector<double>>& rows,
                            const std::vector<std::size_t>& idx) {
  std::size_t dim = rows.empty() ? 0 : rows[0].size();
  Matrix m(idx.size(), dim);
  for (std::size_t b = 0; b < idx.size(); ++b)
    std::copy_n(rows[idx[b]].data(), dim, m.row(b));
  return m;
}

Metrics confusion_over(Net& net, const AlignedData& ad,
                       const std::vector<std::size_t>& idx) {
  const auto& ds = *ad.ds;
  std::size_t k = net.config().num_classes;
  std::vector<std::vector<std::size_t>> confusion(k, std::vector<std::size_t>(k, 0));
  std::size_t bs = net.config().batch_size;
  for (std::size_t start = 0; start < idx.size(); start += bs) {
    std::vector<std::size_t> chunk(
        idx.begin() + static_cast<long>(start),
        idx.begin() + static_cast<long>(std::min(start + bs, idx.size())));
    auto x = batch_signals(ds, chunk, net.config().input_len);
    auto f = batch_features(ad.features, chunk);
    auto out = net.forward(x, f, batch_valid_lens(ds, chunk), false);
    auto pred = nn::argmax_rows(out.logits);
    for (std::size_t b = 0; b < chunk.size(); ++b)
      ++confusion[static_cast<std::size_t>(ds.records[chunk[b]].label)]
                 [static_cast<std::size_t>(pred[b])];
  }
  return metrics_from_confusion(confusion);
}
}  // namespace

TrainResult train(const TrainData& data, const ModelConfig& cfg,
                  const TrainOptions& opts) {
  cfg.validate();
  check_dataset(data, cfg);
  const auto& ds = *data.dataset;

  std::vector<std::size_t> train_idx, val_idx;
  for (std::size_t i = 0; i < ds.records.size(); ++i) {
    if (ds.splits[i] == sig::Split::train) train_idx.push_back(i);
    if (ds.splits[i] == sig::Split::val) val_idx.push_back(i);
  }
  if (train_idx.size() < 2)
    fail(ErrorKind::data, "train: need at least 2 training records");

  TrainResult result;

  AlignedData ad;
  ad.ds = &ds;
  if (cfg.feature_dim > 0) {
    std::vector<std::vector<double>> train_rows;
    train_rows.reserve(train_idx.size());
    for (auto i : train_idx) train_rows.push_back(data.features->values[i]);
    result.scaler = feat::Standardizer::fit(train_rows);
    ad.features.reserve(ds.records.size());
    for (const auto& row : data.features->values)
      ad.features.push_back(result.scaler.transform(row));

    // sigma_f frozen from the full training split (subsampled if huge)
    std::vector<std::size_t> sample = train_idx;
    if (sample.size() > 20000) {
      Rng srng(Rng::mix(opts.seed, 0xf5f5));
      for (std::size_t i = sample.size() - 1; i > 0; --i)
        std::swap(sample[i], sample[srng.integer(i + 1)]);
      sample.resize(20000);
      std::sort(sample.begin(), sample.end());
    }
    result.sigma_f =
        hsic::median_heuristic(batch_feature_matrix(ad.features, sample),
                               opts.kernel.min_bandwidth);
  }

  auto net = std::make_shared<Net>(cfg, Rng::mix(opts.seed, 0x11));
  nn::Adam adam(net->params());

  std::vector<std::size_t> epoch_pool = train_idx;
  if (opts.upsample_train)
    epoch_pool = sig::upsample_minority(ds.records, train_idx,
                                        opts.upsample_ratio,
                                        Rng::mix(opts.seed, 0x22));

  // Batches of one are skipped (batch norm needs pairs), so they do not count
  // as schedule steps either.
  std::size_t steps_per_epoch = epoch_pool.size() / cfg.batch_size +
                                (epoch_pool.size() % cfg.batch_size >= 2 ? 1 : 0);
  if (steps_per_epoch == 0)
    fail(ErrorKind::data, "train: not enough training records for one batch");
  std::size_t total_steps = steps_per_epoch * cfg.epochs;
  std::size_t global_step = 0;

  double sigma_g = 0.0;
  bool sigma_g_set = false;

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    auto order = epoch_pool;
    Rng shuffle_rng(Rng::mix(opts.seed, 0x1000 + epoch));
    for (std::size_t i = order.size() - 1; i > 0; --i)
      std::swap(order[i], order[shuffle_rng.integer(i + 1)]);

    double ce_sum = 0.0, hsic_sum = 0.0, lambda_sum = 0.0, lr_last = 0.0;
    std::size_t batches = 0;

    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      std::vector<std::size_t> chunk(
          order.begin() + static_cast<long>(start),
          order.begin() +
              static_cast<long>(std::min(start + cfg.batch_size, order.size())));
      if (chunk.size() < 2) continue;  // batch norm + the penalty need pairs

      double lr = nn::cosine_lr(global_step, total_steps, cfg.lr_max, cfg.lr_min);
      auto x = batch_signals(ds, chunk, cfg.input_len);
      auto f = batch_features(ad.features, chunk);
      auto out = net->forward(x, f, batch_valid_lens(ds, chunk), true);
      auto ce = nn::softmax_cross_entropy(out.logits, batch_labels(ds, chunk));

      double hsic_value = 0.0;
      double lambda = 0.0;
      nn::Tensor total = ce;
      if (cfg.feature_dim > 0) {
        Matrix latent_now(chunk.size(), cfg.latent_dim());
        std::copy_n(out.latent.data(), latent_now.data.size(),
                    latent_now.data.data());
        double batch_sigma =
            hsic::median_heuristic(latent_now, opts.kernel.min_bandwidth);
        sigma_g = sigma_g_set
                      ? hsic::update_bandwidth(sigma_g, batch_sigma, opts.kernel)
                      : std::max(batch_sigma, opts.kernel.min_bandwidth);
        sigma_g_set = true;

        auto penalty = hsic::hsic_penalty(
            out.latent, batch_feature_matrix(ad.features, chunk),
            result.sigma_f, sigma_g);
        hsic_value = penalty.item();
        lambda = lambda_for_batch(opts.lambda, epoch, ce.item(), hsic_value);
        if (lambda != 0.0) total = nn::add(ce, nn::scale(penalty, lambda));
      }

      if (!std::isfinite(total.item()))
        fail(ErrorKind::numeric, "train: non-finite loss at epoch " +
                                     std::to_string(epoch));

      adam.zero_grad();
      nn::backward(total);
      adam.step(lr);

      ce_sum += ce.item();
      hsic_sum += hsic_value;
      lambda_sum += lambda;
      lr_last = lr;
      ++batches;
      ++global_step;
    }

    TrainLogRow row;
    row.epoch = epoch;
    row.ce = batches ? ce_sum / static_cast<double>(batches) : 0.0;
    row.hsic = batches ? hsic_sum / static_cast<double>(batches) : 0.0;
    row.lambda = batches ? lambda_sum / static_cast<double>(batches) : 0.0;
    row.lr = lr_last;
    row.sigma_g = sigma_g;

    if (!val_idx.empty()) {
      auto metrics = confusion_over(*net, ad, val_idx);
      row.val_accuracy = metrics.accuracy;
      row.val_f1 = metrics.f1_positive;
      if (metrics.accuracy > result.best_val_accuracy) {
        result.best_val_accuracy = metrics.accuracy;
        result.best_val_epoch = epoch;
      }
    }
    result.log.push_back(row);

    if (opts.log_stream != nullptr) {
      (*opts.log_stream) << "epoch " << epoch << " ce " << row.ce << " hsic "
                         << row.hsic << " lambda " << row.lambda << " lr "
                         << row.lr << " sigma_g " << row.sigma_g << " val_acc "
                         << row.val_accuracy << " val_f1 " << row.val_f1
                         << "\n";
      opts.log_stream->flush();
    }

    if (!opts.snapshot_path.empty()) {
      ckpt::Checkpoint snap;
      snap.config_json = model_config_to_json(cfg);
      snap.arrays = net->state_arrays();
      ckpt::save_checkpoint(snap, opts.snapshot_path);
    }
  }

  result.net = net;
  result.sigma_g = sigma_g;
  return result;
}

Metrics evaluate(Net& net, const feat::Standardizer& scaler,
                 const TrainData& data, sig::Split split) {
  check_dataset(data, net.config());
  const auto& ds = *data.dataset;
  AlignedData ad;
  ad.ds = &ds;
  if (net.config().feature_dim > 0) {
    ad.features.reserve(ds.records.size());
    for (const auto& row : data.features->values)
      ad.features.push_back(scaler.transform(row));
  }
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < ds.records.size(); ++i)
    if (ds.splits[i] == split) idx.push_back(i);
  if (idx.empty())
    fail(ErrorKind::data, "evaluate: split " + sig::to_string(split) + " is empty");
  return confusion_over(net, ad, idx);
}

Matrix latents(Net& net, const sig::Dataset& dataset) {
  if (dataset.records.empty()) fail(ErrorKind::data, "latents: empty dataset");
  std::size_t dim = net.config().latent_dim();
  Matrix out(dataset.records.size(), dim);
  std::size_t bs = net.config().batch_size;
  std::vector<std::size_t> all(dataset.records.size());
  std::iota(all.begin(), all.end(), 0);
  for (std::size_t start = 0; start < all.size(); start += bs) {
    std::vector<std::size_t> chunk(
        all.begin() + static_cast<long>(start),
        all.begin() + static_cast<long>(std::min(start + bs, all.size())));
    for (auto i : chunk)
      if (dataset.records[i].samples.size() != net.config().input_len)
        fail(ErrorKind::data, "latents: record " + dataset.records[i].id +
                                  " length != input_len");
    auto x = batch_signals(dataset, chunk, net.config().input_len);
    auto fwd = net.forward(x, {}, batch_valid_lens(dataset, chunk), false);
    for (std::size_t b = 0; b < chunk.size(); ++b)
      std::copy_n(fwd.latent.data() + b * dim, dim, out.row(chunk[b]));
  }
  return out;
}

Matrix feature_maps(Net& net, const sig::SignalRecord& record) {
  if (record.samples.size() != net.config().input_len)
    fail(ErrorKind::data, "feature_maps: record length != input_len (pad first)");
  std::vector<double> buf = record.samples;
  auto x = nn::Tensor::from({1, 1, net.config().input_len}, std::move(buf));
  auto fwd = net.forward(
      x, {}, {std::max<std::size_t>(record.original_length(), 1)}, false);
  std::size_t ch = fwd.feature_maps.dim(1), t_len = fwd.feature_maps.dim(2);
  Matrix out(ch, t_len);
  std::copy_n(fwd.feature_maps.data(), ch * t_len, out.data.data());
  return out;
}

}  // namespace hsicnet::model
