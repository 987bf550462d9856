#include <doctest.h>

#include <cmath>
#include <vector>

#include "hsicnet/error.hpp"
#include "hsicnet/eval.hpp"
#include "hsicnet/rng.hpp"

using namespace hsicnet;
using namespace hsicnet::eval;

namespace {
// n rows, label = i % 2, train/test interleaved; feature columns either carry
// the label (separable) or pure noise (null).
struct ProbeData {
  Matrix x;
  std::vector<int> labels;
  std::vector<sig::Split> splits;
};

ProbeData make_probe(std::size_t n, std::size_t dims, bool separable,
                     std::uint64_t seed) {
  ProbeData d;
  d.x = Matrix(n, dims);
  Rng rng(seed);
  for (std::size_t i = 0; i < n; ++i) {
    int label = static_cast<int>(i % 2);
    d.labels.push_back(label);
    // i % 5 puts both parities (hence both labels) into each split.
    d.splits.push_back(i % 5 < 3 ? sig::Split::train : sig::Split::test);
    for (std::size_t j = 0; j < dims; ++j) {
      double noise = 0.3 * rng.normal();
      d.x.at(i, j) = separable ? static_cast<double>(label) * 2.0 - 1.0 + noise
                               : noise;
    }
  }
  return d;
}

AuxNetConfig small_cfg() {
  AuxNetConfig cfg;
  cfg.hidden = {16, 16};
  cfg.epochs = 30;
  cfg.batch_size = 16;
  cfg.lr = 3e-3;
  cfg.folds = 4;
  cfg.seed = 11;
  return cfg;
}
}  // namespace

TEST_CASE("r_squared matches hand examples") {
  // Perfect prediction.
  CHECK(r_squared({1.0, 2.0, 3.0}, {1.0, 2.0, 3.0}) == 1.0);
  // Predicting the mean gives exactly zero.
  CHECK(r_squared({2.0, 2.0, 2.0}, {1.0, 2.0, 3.0}) ==
        doctest::Approx(0.0).epsilon(1e-15));
  // Anti-correlated prediction: truth [0,1,2] vs prediction [2,1,0].
  // SS_res = 4 + 0 + 4 = 8, SS_tot = 2, R^2 = 1 - 4 = -3.
  CHECK(r_squared({2.0, 1.0, 0.0}, {0.0, 1.0, 2.0}) == doctest::Approx(-3.0));

  CHECK_THROWS_AS(r_squared({1.0}, {1.0, 2.0}), Error);
  CHECK_THROWS_AS(r_squared({1.0}, {1.0}), Error);
  CHECK_THROWS_AS(r_squared({1.0, 2.0}, {3.0, 3.0}), Error);
}

TEST_CASE("binomial_chance_test matches exact enumerations") {
  // Binomial(10, 1/2): P(outcome no more likely than 6) = 772/1024.
  CHECK(binomial_chance_test(6, 10, 0.5) ==
        doctest::Approx(772.0 / 1024.0).epsilon(1e-12));
  // The most likely outcome collects everything.
  CHECK(binomial_chance_test(5, 10, 0.5) == doctest::Approx(1.0));
  // Extreme outcome at p0 = 1/2: both tails have mass 0.5^n.
  CHECK(binomial_chance_test(10, 10, 0.5) ==
        doctest::Approx(2.0 * std::pow(0.5, 10)).epsilon(1e-12));
  CHECK(binomial_chance_test(0, 10, 0.5) ==
        doctest::Approx(2.0 * std::pow(0.5, 10)).epsilon(1e-12));
  // Asymmetric null: compare against a brute-force enumeration.
  {
    double p0 = 0.7;
    std::size_t n = 12, k = 5;
    auto pmf = [&](std::size_t j) {
      double c = 1.0;
      for (std::size_t i = 0; i < j; ++i)
        c = c * static_cast<double>(n - i) / static_cast<double>(i + 1);
      return c * std::pow(p0, static_cast<double>(j)) *
             std::pow(1.0 - p0, static_cast<double>(n - j));
    };
    double obs = pmf(k), expect = 0.0;
    for (std::size_t j = 0; j <= n; ++j)
      if (pmf(j) <= obs * (1.0 + 1e-7)) expect += pmf(j);
    CHECK(binomial_chance_test(k, n, p0) ==
          doctest::Approx(expect).epsilon(1e-10));
  }

  CHECK_THROWS_AS(binomial_chance_test(3, 0, 0.5), Error);
  CHECK_THROWS_AS(binomial_chance_test(5, 4, 0.5), Error);
  CHECK_THROWS_AS(binomial_chance_test(1, 4, 0.0), Error);
  CHECK_THROWS_AS(binomial_chance_test(1, 4, 1.0), Error);
}

TEST_CASE("relevance probe nails a separable feature set") {
  auto d = make_probe(160, 3, true, 21);
  auto r = relevance_task(d.x, d.labels, d.splits, small_cfg());
  CHECK(r.accuracy >= 0.95);
  CHECK(r.f1 >= 0.9);
}

TEST_CASE("relevance probe stays near chance on noise features") {
  auto d = make_probe(160, 3, false, 22);
  auto r = relevance_task(d.x, d.labels, d.splits, small_cfg());
  CHECK(r.accuracy >= 0.2);
  CHECK(r.accuracy <= 0.8);
}

TEST_CASE("relevance probe is deterministic and validates inputs") {
  auto d = make_probe(80, 2, true, 23);
  auto cfg = small_cfg();
  auto a = relevance_task(d.x, d.labels, d.splits, cfg);
  auto b = relevance_task(d.x, d.labels, d.splits, cfg);
  CHECK(a.accuracy == b.accuracy);
  CHECK(a.f1 == b.f1);

  auto bad_labels = d.labels;
  bad_labels.pop_back();
  CHECK_THROWS_AS(relevance_task(d.x, bad_labels, d.splits, cfg), Error);
  auto no_test = d.splits;
  for (auto& s : no_test) s = sig::Split::train;
  CHECK_THROWS_AS(relevance_task(d.x, d.labels, no_test, cfg), Error);
  auto zero_epochs = cfg;
  zero_epochs.epochs = 0;
  CHECK_THROWS_AS(relevance_task(d.x, d.labels, d.splits, zero_epochs), Error);
}

TEST_CASE("independence probe recovers readable targets, not noise") {
  const std::size_t n = 160;
  Matrix g(n, 4), f(n, 2);
  std::vector<sig::Split> splits;
  Rng rng(31);
  for (std::size_t i = 0; i < n; ++i) {
    splits.push_back(i % 4 < 3 ? sig::Split::train : sig::Split::test);
    for (std::size_t j = 0; j < 4; ++j) g.at(i, j) = rng.normal();
    // dim 0 is a clean linear readout of g, dim 1 is fresh noise.
    f.at(i, 0) = 0.8 * g.at(i, 0) - 0.5 * g.at(i, 2);
    f.at(i, 1) = rng.normal();
  }
  auto r = independence_task(g, f, splits, small_cfg());
  REQUIRE(r.per_dim_r2.size() == 2);
  CHECK(r.per_dim_r2[0] >= 0.8);
  CHECK(r.per_dim_r2[1] <= 0.3);
  CHECK(r.excluded_dims.empty());
  CHECK(r.avg_r2 ==
        doctest::Approx(0.5 * (r.per_dim_r2[0] + r.per_dim_r2[1])));

  // A constant target dimension on the test split is excluded, not scored.
  Matrix f2 = f;
  for (std::size_t i = 0; i < n; ++i) f2.at(i, 1) = 7.0;
  auto r2 = independence_task(g, f2, splits, small_cfg());
  REQUIRE(r2.excluded_dims == std::vector<std::size_t>{1});
  CHECK(r2.per_dim_r2[1] == 0.0);
  CHECK(r2.avg_r2 == doctest::Approx(r2.per_dim_r2[0]));

  // Near-degenerate column: mostly zero with a handful of train-only
  // outliers. Standardizing maps the constant test values to a number whose
  // accumulated mean rounds, so a variance-based exclusion misses it and the
  // R^2 denominator collapses to ~1e-30. Must still be excluded cleanly.
  Matrix f3 = f;
  for (std::size_t i = 0; i < n; ++i) f3.at(i, 1) = 0.0;
  for (std::size_t i = 0; i < 5; ++i) f3.at(4 * i, 1) = 1.0986122886681098;
  auto r3 = independence_task(g, f3, splits, small_cfg());
  REQUIRE(r3.excluded_dims == std::vector<std::size_t>{1});
  CHECK(r3.per_dim_r2[1] == 0.0);
  CHECK(std::abs(r3.avg_r2) < 1.5);
}

TEST_CASE("independence probe validates inputs") {
  Matrix g(8, 2), f(8, 1);
  std::vector<sig::Split> splits(8, sig::Split::train);
  CHECK_THROWS_AS(independence_task(g, f, splits, small_cfg()), Error);
  splits[7] = sig::Split::test;
  CHECK_THROWS_AS(independence_task(g, f, splits, small_cfg()), Error);
  splits[6] = sig::Split::test;
  CHECK_NOTHROW(independence_task(g, f, splits, small_cfg()));
  Matrix g_short(7, 2);
  CHECK_THROWS_AS(independence_task(g_short, f, splits, small_cfg()), Error);
  Matrix f_empty(8, 0);
  CHECK_THROWS_AS(independence_task(g, f_empty, splits, small_cfg()), Error);
}

TEST_CASE("rep2label recovers labels from a separable latent") {
  auto d = make_probe(80, 4, true, 41);
  // Use every row as "test split" input; rep2label folds internally.
  auto r = rep2label_task(d.x, d.labels, small_cfg());
  CHECK(r.n == 80);
  CHECK(r.chance == doctest::Approx(0.5));
  CHECK(r.accuracy >= 0.9);
  CHECK(r.p_value < 1e-9);
}

TEST_CASE("rep2label stays near chance on a noise latent") {
  auto d = make_probe(80, 4, false, 42);
  auto r = rep2label_task(d.x, d.labels, small_cfg());
  CHECK(r.accuracy >= 0.25);
  CHECK(r.accuracy <= 0.75);
  CHECK(r.p_value > 1e-3);

  // Determinism.
  auto again = rep2label_task(d.x, d.labels, small_cfg());
  CHECK(again.accuracy == r.accuracy);
  CHECK(again.p_value == r.p_value);
}

TEST_CASE("rep2label validates inputs") {
  auto d = make_probe(12, 2, true, 43);
  auto cfg = small_cfg();
  cfg.folds = 1;
  CHECK_THROWS_AS(rep2label_task(d.x, d.labels, cfg), Error);
  cfg.folds = 13;
  CHECK_THROWS_AS(rep2label_task(d.x, d.labels, cfg), Error);
  cfg.folds = 4;
  auto bad = d.labels;
  bad.pop_back();
  CHECK_THROWS_AS(rep2label_task(d.x, bad, cfg), Error);
}
