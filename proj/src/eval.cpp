#include "hsicnet/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>

#include "hsicnet/error.hpp"
#include "hsicnet/features.hpp"
#include "hsicnet/nn.hpp"
#include "hsicnet/optim.hpp"
#include "hsicnet/rng.hpp"
#include "hsicnet/stats.hpp"
#include "hsicnet/tensor.hpp"

namespace hsicnet::eval {

namespace {

// Two ReLU hidden layers plus a linear output; shared by every probe. The
// regression probe's output layer doubles as one linear head per target
// dimension on the shared trunk.
struct AuxNet {
  std::vector<nn::Linear> layers;

  AuxNet(std::size_t in, const std::vector<std::size_t>& hidden,
         std::size_t out, Rng& rng) {
    if (hidden.empty())
      fail(ErrorKind::config, "aux net: need at least one hidden layer");
    std::size_t prev = in;
    for (auto h : hidden) {
      if (h == 0) fail(ErrorKind::config, "aux net: zero-width hidden layer");
      layers.emplace_back(prev, h, rng);
      prev = h;
    }
    layers.emplace_back(prev, out, rng);
  }

  nn::Tensor forward(const nn::Tensor& x) const {
    nn::Tensor h = x;
    for (std::size_t i = 0; i + 1 < layers.size(); ++i)
      h = nn::relu(layers[i].forward(h));
    return layers.back().forward(h);
  }

  std::vector<nn::Tensor> params() const {
    std::vector<nn::Tensor> out;
    for (const auto& l : layers) {
      out.push_back(l.w);
      out.push_back(l.b);
    }
    return out;
  }
};

void check_probe_config(const AuxNetConfig& cfg) {
  if (cfg.epochs == 0) fail(ErrorKind::config, "aux net: epochs must be >= 1");
  if (cfg.batch_size == 0)
    fail(ErrorKind::config, "aux net: batch_size must be >= 1");
  if (!(cfg.lr > 0.0)) fail(ErrorKind::config, "aux net: lr must be positive");
}

std::vector<std::size_t> split_indices(const std::vector<sig::Split>& splits,
                                       sig::Split which) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < splits.size(); ++i)
    if (splits[i] == which) out.push_back(i);
  return out;
}

nn::Tensor gather_rows(const Matrix& m, const std::vector<std::size_t>& rows,
                       bool requires_grad = false) {
  std::vector<double> buf(rows.size() * m.cols);
  for (std::size_t r = 0; r < rows.size(); ++r)
    std::copy_n(m.row(rows[r]), m.cols, buf.data() + r * m.cols);
  return nn::Tensor::from({rows.size(), m.cols}, std::move(buf),
                          requires_grad);
}

// One pass of minibatch training with a per-epoch shuffle; `loss_fn` maps a
// batch index list to the scalar loss tensor.
template <typename LossFn>
void fit(const std::vector<std::size_t>& pool, const AuxNetConfig& cfg,
         nn::Adam& adam, std::uint64_t shuffle_salt, LossFn&& loss_fn) {
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    auto order = pool;
    Rng rng(Rng::mix(cfg.seed, shuffle_salt + epoch));
    for (std::size_t i = order.size() - 1; i > 0; --i)
      std::swap(order[i], order[rng.integer(i + 1)]);
    for (std::size_t start = 0; start < order.size();
         start += cfg.batch_size) {
      std::vector<std::size_t> chunk(
          order.begin() + static_cast<long>(start),
          order.begin() + static_cast<long>(
                              std::min(start + cfg.batch_size, order.size())));
      auto loss = loss_fn(chunk);
      if (!std::isfinite(loss.item()))
        fail(ErrorKind::numeric, "aux net: non-finite loss");
      adam.zero_grad();
      nn::backward(loss);
      adam.step(cfg.lr);
    }
  }
}

int distinct_labels(const std::vector<int>& labels,
                    const std::vector<std::size_t>& idx) {
  int max_label = 0;
  for (auto i : idx) {
    if (labels[i] < 0)
      fail(ErrorKind::data, "aux net: labels must be non-negative");
    max_label = std::max(max_label, labels[i]);
  }
  return max_label + 1;
}

// Trains a classifier probe on `train_idx` and returns test predictions.
// The standardizer is fit on `scale_idx` (the unique training rows), not on
// the possibly-upsampled pool, mirroring the main task's policy.
std::vector<int> classify(const Matrix& x, const std::vector<int>& labels,
                          const std::vector<std::size_t>& scale_idx,
                          const std::vector<std::size_t>& train_idx,
                          const std::vector<std::size_t>& test_idx,
                          int num_classes, const AuxNetConfig& cfg,
                          std::uint64_t salt) {
  std::vector<std::vector<double>> rows;
  rows.reserve(scale_idx.size());
  for (auto i : scale_idx) {
    rows.emplace_back(x.row(i), x.row(i) + x.cols);
  }
  auto scaler = feat::Standardizer::fit(rows);
  Matrix xs(x.rows, x.cols);
  for (std::size_t r = 0; r < x.rows; ++r) {
    auto t = scaler.transform({x.row(r), x.row(r) + x.cols});
    std::copy(t.begin(), t.end(), xs.row(r));
  }

  Rng init_rng(Rng::mix(cfg.seed, salt));
  AuxNet net(x.cols, cfg.hidden, static_cast<std::size_t>(num_classes),
             init_rng);
  nn::Adam adam(net.params());
  fit(train_idx, cfg, adam, salt ^ 0x9e3779b9, [&](const auto& chunk) {
    std::vector<int> y(chunk.size());
    for (std::size_t i = 0; i < chunk.size(); ++i) y[i] = labels[chunk[i]];
    return nn::softmax_cross_entropy(net.forward(gather_rows(xs, chunk)), y);
  });

  return nn::argmax_rows(net.forward(gather_rows(xs, test_idx)));
}

}  // namespace

double r_squared(const std::vector<double>& prediction,
                 const std::vector<double>& truth) {
  if (prediction.size() != truth.size())
    fail(ErrorKind::invalid_argument, "r_squared: size mismatch");
  if (truth.size() < 2)
    fail(ErrorKind::invalid_argument, "r_squared: need at least two samples");
  if (*std::min_element(truth.begin(), truth.end()) ==
      *std::max_element(truth.begin(), truth.end()))
    fail(ErrorKind::numeric, "r_squared: truth has zero variance");
  double mean = 0.0;
  for (double v : truth) mean += v;
  mean /= static_cast<double>(truth.size());
  double ss_tot = 0.0, ss_res = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    ss_tot += (truth[i] - mean) * (truth[i] - mean);
    ss_res += (prediction[i] - truth[i]) * (prediction[i] - truth[i]);
  }
  if (ss_tot == 0.0)
    fail(ErrorKind::numeric, "r_squared: truth has zero variance");
  return 1.0 - ss_res / ss_tot;
}

RelevanceResult relevance_task(const Matrix& f, const std::vector<int>& labels,
                               const std::vector<sig::Split>& splits,
                               const AuxNetConfig& cfg) {
  check_probe_config(cfg);
  if (f.rows != labels.size() || f.rows != splits.size())
    fail(ErrorKind::invalid_argument,
         "relevance_task: rows, labels, and splits must align");
  auto train_idx = split_indices(splits, sig::Split::train);
  auto test_idx = split_indices(splits, sig::Split::test);
  if (train_idx.size() < 2 || test_idx.empty())
    fail(ErrorKind::data, "relevance_task: empty train or test split");

  int k = std::max(distinct_labels(labels, train_idx),
                   distinct_labels(labels, test_idx));
  auto pool = sig::upsample_minority(labels, train_idx, 1.0,
                                     Rng::mix(cfg.seed, 0x11));
  auto pred = classify(f, labels, train_idx, pool, test_idx, k, cfg, 0xA1);

  std::size_t correct = 0;
  std::vector<std::vector<std::size_t>> confusion(
      static_cast<std::size_t>(k),
      std::vector<std::size_t>(static_cast<std::size_t>(k), 0));
  std::vector<std::size_t> truth_count(static_cast<std::size_t>(k), 0);
  for (std::size_t i = 0; i < test_idx.size(); ++i) {
    int t = labels[test_idx[i]], p = pred[i];
    if (t == p) ++correct;
    if (p >= 0 && p < k) ++confusion[static_cast<std::size_t>(t)]
                                    [static_cast<std::size_t>(p)];
    ++truth_count[static_cast<std::size_t>(t)];
  }

  RelevanceResult r;
  r.accuracy = static_cast<double>(correct) /
               static_cast<double>(test_idx.size());
  // Minority-class F1 on the test split.
  std::size_t pos = static_cast<std::size_t>(
      std::min_element(truth_count.begin(), truth_count.end()) -
      truth_count.begin());
  std::size_t tp = confusion[pos][pos], pred_pos = 0;
  for (std::size_t t = 0; t < confusion.size(); ++t) pred_pos += confusion[t][pos];
  double denom = static_cast<double>(truth_count[pos] + pred_pos);
  r.f1 = denom > 0.0 ? 2.0 * static_cast<double>(tp) / denom : 0.0;
  return r;
}

IndependenceResult independence_task(const Matrix& g, const Matrix& f,
                                     const std::vector<sig::Split>& splits,
                                     const AuxNetConfig& cfg) {
  check_probe_config(cfg);
  if (g.rows != f.rows || g.rows != splits.size())
    fail(ErrorKind::invalid_argument,
         "independence_task: rows and splits must align");
  if (f.cols == 0)
    fail(ErrorKind::invalid_argument, "independence_task: no target dims");
  auto train_idx = split_indices(splits, sig::Split::train);
  auto test_idx = split_indices(splits, sig::Split::test);
  if (train_idx.size() < 2 || test_idx.size() < 2)
    fail(ErrorKind::data, "independence_task: need train and test rows");

  std::vector<std::vector<double>> grows, frows;
  for (auto i : train_idx) {
    grows.emplace_back(g.row(i), g.row(i) + g.cols);
    frows.emplace_back(f.row(i), f.row(i) + f.cols);
  }
  auto gscale = feat::Standardizer::fit(grows);
  auto fscale = feat::Standardizer::fit(frows);
  Matrix gs(g.rows, g.cols), fs(f.rows, f.cols);
  for (std::size_t r = 0; r < g.rows; ++r) {
    auto tg = gscale.transform({g.row(r), g.row(r) + g.cols});
    std::copy(tg.begin(), tg.end(), gs.row(r));
    auto tf = fscale.transform({f.row(r), f.row(r) + f.cols});
    std::copy(tf.begin(), tf.end(), fs.row(r));
  }

  Rng init_rng(Rng::mix(cfg.seed, 0xB2));
  AuxNet net(g.cols, cfg.hidden, f.cols, init_rng);
  nn::Adam adam(net.params());
  fit(train_idx, cfg, adam, 0xB2 ^ 0x9e3779b9, [&](const auto& chunk) {
    auto pred = net.forward(gather_rows(gs, chunk));
    auto target = gather_rows(fs, chunk);
    auto diff = nn::add(pred, nn::scale(target, -1.0));
    return nn::mean_all(nn::mul(diff, diff));
  });

  auto pred = net.forward(gather_rows(gs, test_idx));

  IndependenceResult out;
  out.per_dim_r2.assign(f.cols, 0.0);
  double sum = 0.0;
  std::size_t used = 0;
  for (std::size_t d = 0; d < f.cols; ++d) {
    std::vector<double> truth(test_idx.size()), hat(test_idx.size());
    for (std::size_t i = 0; i < test_idx.size(); ++i) {
      truth[i] = fs.at(test_idx[i], d);
      hat[i] = pred.values()[i * f.cols + d];
    }
    // Constancy via min == max: summing identical doubles rounds, so a
    // variance accumulator can land at ~1e-30 instead of 0 and the R^2
    // division would explode on a column that is plainly constant.
    auto [mn, mx] = std::minmax_element(truth.begin(), truth.end());
    if (*mn == *mx) {
      out.excluded_dims.push_back(d);
      continue;
    }
    out.per_dim_r2[d] = r_squared(hat, truth);
    sum += out.per_dim_r2[d];
    ++used;
  }
  out.avg_r2 = used > 0 ? sum / static_cast<double>(used) : 0.0;
  return out;
}

Rep2LabelResult rep2label_task(const Matrix& g_test,
                               const std::vector<int>& labels_test,
                               const AuxNetConfig& cfg) {
  check_probe_config(cfg);
  if (g_test.rows != labels_test.size())
    fail(ErrorKind::invalid_argument, "rep2label_task: rows must match labels");
  if (cfg.folds < 2)
    fail(ErrorKind::config, "rep2label_task: need at least two folds");
  if (g_test.rows < cfg.folds)
    fail(ErrorKind::data, "rep2label_task: fewer rows than folds");

  int k = distinct_labels(
      labels_test, [&] {
        std::vector<std::size_t> all(g_test.rows);
        for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
        return all;
      }());

  // Stratified folds: shuffle each class, deal round-robin.
  std::vector<std::vector<std::size_t>> folds(cfg.folds);
  {
    std::vector<std::vector<std::size_t>> by_label(
        static_cast<std::size_t>(k));
    for (std::size_t i = 0; i < labels_test.size(); ++i)
      by_label[static_cast<std::size_t>(labels_test[i])].push_back(i);
    Rng rng(Rng::mix(cfg.seed, 0xC3));
    std::size_t dealt = 0;
    for (auto& group : by_label) {
      for (std::size_t i = group.size(); i > 1; --i)
        std::swap(group[i - 1], group[rng.integer(i)]);
      for (auto idx : group) folds[dealt++ % cfg.folds].push_back(idx);
    }
  }

  std::size_t correct = 0, n = 0;
  for (std::size_t fold = 0; fold < cfg.folds; ++fold) {
    if (folds[fold].empty()) continue;
    std::vector<std::size_t> train_idx;
    for (std::size_t other = 0; other < cfg.folds; ++other)
      if (other != fold)
        train_idx.insert(train_idx.end(), folds[other].begin(),
                         folds[other].end());
    if (train_idx.size() < 2)
      fail(ErrorKind::data, "rep2label_task: fold left too few training rows");
    auto pred = classify(g_test, labels_test, train_idx, train_idx,
                         folds[fold], k, cfg, 0xD4 + fold);
    for (std::size_t i = 0; i < folds[fold].size(); ++i) {
      if (pred[i] == labels_test[folds[fold][i]]) ++correct;
      ++n;
    }
  }

  Rep2LabelResult r;
  r.n = n;
  r.accuracy = static_cast<double>(correct) / static_cast<double>(n);
  std::vector<std::size_t> counts(static_cast<std::size_t>(k), 0);
  for (int l : labels_test) ++counts[static_cast<std::size_t>(l)];
  r.chance = static_cast<double>(
                 *std::max_element(counts.begin(), counts.end())) /
             static_cast<double>(labels_test.size());
  r.p_value = binomial_chance_test(correct, n, r.chance);
  return r;
}

double binomial_chance_test(std::size_t correct, std::size_t n, double p0) {
  if (n == 0)
    fail(ErrorKind::invalid_argument, "binomial_chance_test: n must be >= 1");
  if (correct > n)
    fail(ErrorKind::invalid_argument,
         "binomial_chance_test: correct exceeds n");
  if (!(p0 > 0.0) || !(p0 < 1.0))
    fail(ErrorKind::invalid_argument,
         "binomial_chance_test: p0 must lie strictly inside (0, 1)");
  // Exact two-sided test by minimum likelihood: add up every outcome whose
  // probability does not exceed the observed one (tiny slack absorbs the
  // last-bit noise of the pmf evaluation).
  double observed = stats::binomial_pmf(correct, n, p0);
  double threshold = observed * (1.0 + 1e-7);
  double p = 0.0;
  for (std::size_t j = 0; j <= n; ++j) {
    double q = stats::binomial_pmf(j, n, p0);
    if (q <= threshold) p += q;
  }
  return std::min(p, 1.0);
}

}  // namespace hsicnet::eval
