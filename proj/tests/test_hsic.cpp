#include <doctest.h>

#include <cmath>
#include <vector>

#include "gradcheck.hpp"
#include "hsicnet/error.hpp"
#include "hsicnet/hsic.hpp"
#include "hsicnet/matrix.hpp"
#include "hsicnet/rng.hpp"

using namespace hsicnet;
using namespace hsicnet::hsic;

namespace {
Matrix random_matrix(std::size_t rows, std::size_t cols, Rng& rng,
                     double scale = 1.0) {
  Matrix m(rows, cols);
  for (auto& v : m.data) v = scale * (2.0 * rng.uniform() - 1.0);
  return m;
}

// Independent O(n^3) oracle: build H, K, L explicitly, take tr(K H L H).
double hsic_trace_oracle(const Matrix& f, const Matrix& g, double sf, double sg) {
  std::size_t n = f.rows;
  auto kernel = [](const Matrix& x, double sigma) {
    Matrix k(x.rows, x.rows);
    for (std::size_t i = 0; i < x.rows; ++i)
      for (std::size_t j = 0; j < x.rows; ++j) {
        double d2 = 0.0;
        for (std::size_t c = 0; c < x.cols; ++c) {
          double diff = x.at(i, c) - x.at(j, c);
          d2 += diff * diff;
        }
        k.at(i, j) = std::exp(-d2 / (sigma * sigma));
      }
    return k;
  };
  Matrix k = kernel(f, sf), l = kernel(g, sg), h(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      h.at(i, j) = (i == j ? 1.0 : 0.0) - 1.0 / static_cast<double>(n);
  auto matmul = [n](const Matrix& a, const Matrix& b) {
    Matrix c(n, n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        double acc = 0.0;
        for (std::size_t t = 0; t < n; ++t) acc += a.at(i, t) * b.at(t, j);
        c.at(i, j) = acc;
      }
    return c;
  };
  Matrix prod = matmul(matmul(matmul(k, h), l), h);
  double tr = 0.0;
  for (std::size_t i = 0; i < n; ++i) tr += prod.at(i, i);
  double n1 = static_cast<double>(n - 1);
  return tr / (n1 * n1);
}
}  // namespace

TEST_CASE("gaussian kernel uses sigma^2 in the exponent") {
  Matrix x(2, 1);
  x.at(0, 0) = 0.0;
  x.at(1, 0) = 1.0;
  Matrix k = gaussian_kernel_matrix(x, 1.0);
  CHECK(k.at(0, 0) == 1.0);
  CHECK(k.at(1, 1) == 1.0);
  CHECK(k.at(0, 1) == doctest::Approx(std::exp(-1.0)).epsilon(1e-12));
  CHECK(k.at(1, 0) == k.at(0, 1));

  Matrix k2 = gaussian_kernel_matrix(x, 2.0);
  CHECK(k2.at(0, 1) == doctest::Approx(std::exp(-0.25)).epsilon(1e-12));

  CHECK_THROWS_AS(gaussian_kernel_matrix(x, 0.0), Error);
  CHECK_THROWS_AS(gaussian_kernel_matrix(x, -1.0), Error);
}

TEST_CASE("median heuristic picks the middle pairwise distance") {
  Matrix x(3, 1);
  x.at(0, 0) = 0.0;
  x.at(1, 0) = 1.0;
  x.at(2, 0) = 3.0;
  CHECK(median_heuristic(x) == doctest::Approx(2.0).epsilon(1e-12));

  Matrix even(4, 1);
  even.at(0, 0) = 0.0;
  even.at(1, 0) = 1.0;
  even.at(2, 0) = 2.0;
  even.at(3, 0) = 10.0;
  // distances {1, 2, 10, 1, 9, 8} -> sorted {1,1,2,8,9,10} -> (2+8)/2
  CHECK(median_heuristic(even) == doctest::Approx(5.0).epsilon(1e-12));

  Matrix same(3, 2);
  for (auto& v : same.data) v = 0.7;
  CHECK(median_heuristic(same) == doctest::Approx(1e-6).epsilon(1e-12));

  Matrix tiny(1, 1);
  CHECK_THROWS_AS(median_heuristic(tiny), Error);
}

TEST_CASE("bandwidth update is a floored moving average") {
  KernelConfig cfg;
  CHECK(update_bandwidth(2.0, 4.0, cfg) == doctest::Approx(2.2).epsilon(1e-12));
  cfg.momentum = 0.5;
  CHECK(update_bandwidth(1.0, 3.0, cfg) == doctest::Approx(2.0).epsilon(1e-12));
  cfg.min_bandwidth = 0.5;
  CHECK(update_bandwidth(1e-9, 1e-9, cfg) == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("two-point statistic matches the closed form") {
  Matrix f(2, 1), g(2, 1);
  f.at(0, 0) = 0.0;
  f.at(1, 0) = 3.0;
  g.at(0, 0) = 1.0;
  g.at(1, 0) = 1.5;
  // sigma equal to the gap puts both kernels at e^{-1}
  double v = hsic_statistic(f, g, 3.0, 0.5);
  double expect = (1.0 - std::exp(-1.0)) * (1.0 - std::exp(-1.0));
  CHECK(v == doctest::Approx(expect).epsilon(1e-9));
}

TEST_CASE("constant representation yields zero dependence") {
  Rng rng(3);
  Matrix f = random_matrix(8, 3, rng);
  Matrix g(8, 4);
  for (std::size_t i = 0; i < g.rows; ++i)
    for (std::size_t j = 0; j < g.cols; ++j) g.at(i, j) = 0.25;
  CHECK(hsic_statistic(f, g, 1.0, 1.0) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("statistic matches the explicit trace oracle on seeded inputs") {
  Rng rng(17);
  for (int trial = 0; trial < 20; ++trial) {
    std::size_t n = 2 + rng.integer(15);
    std::size_t df = 1 + rng.integer(4);
    std::size_t dg = 1 + rng.integer(4);
    Matrix f = random_matrix(n, df, rng, 2.0);
    Matrix g = random_matrix(n, dg, rng, 2.0);
    double sf = 0.5 + rng.uniform() * 2.0;
    double sg = 0.5 + rng.uniform() * 2.0;
    double ours = hsic_statistic(f, g, sf, sg);
    double oracle = std::max(hsic_trace_oracle(f, g, sf, sg), 0.0);
    CHECK(std::abs(ours - oracle) <= 1e-10);
  }
}

TEST_CASE("statistic is invariant under a joint permutation of rows") {
  Rng rng(23);
  Matrix f = random_matrix(10, 3, rng);
  Matrix g = random_matrix(10, 2, rng);
  double base = hsic_statistic(f, g, 1.3, 0.8);

  std::vector<std::size_t> perm{4, 2, 9, 0, 7, 1, 5, 8, 3, 6};
  Matrix fp(10, 3), gp(10, 2);
  for (std::size_t i = 0; i < 10; ++i) {
    for (std::size_t c = 0; c < 3; ++c) fp.at(i, c) = f.at(perm[i], c);
    for (std::size_t c = 0; c < 2; ++c) gp.at(i, c) = g.at(perm[i], c);
  }
  CHECK(hsic_statistic(fp, gp, 1.3, 0.8) == doctest::Approx(base).epsilon(1e-12));
}

TEST_CASE("dependent representations score far above independent ones") {
  Rng rng(31);
  std::size_t n = 256;
  Matrix f(n, 1), g_dep(n, 1), g_ind(n, 1);
  for (std::size_t i = 0; i < n; ++i) {
    f.at(i, 0) = rng.normal();
    g_dep.at(i, 0) = f.at(i, 0);
    g_ind.at(i, 0) = rng.normal();
  }
  double sf = median_heuristic(f);
  double dep = hsic_statistic(f, g_dep, sf, median_heuristic(g_dep));
  double ind = hsic_statistic(f, g_ind, sf, median_heuristic(g_ind));
  CHECK(dep > 5.0 * ind);
  CHECK(dep > 0.01);
}

TEST_CASE("statistic validates its inputs") {
  Rng rng(37);
  Matrix f = random_matrix(4, 2, rng);
  Matrix g = random_matrix(5, 2, rng);
  CHECK_THROWS_AS(hsic_statistic(f, g, 1.0, 1.0), Error);
  Matrix one = random_matrix(1, 2, rng);
  CHECK_THROWS_AS(hsic_statistic(one, one, 1.0, 1.0), Error);
  Matrix g4 = random_matrix(4, 2, rng);
  CHECK_THROWS_AS(hsic_statistic(f, g4, 1.0, 0.0), Error);
}

TEST_CASE("penalty value agrees with the statistic") {
  Rng rng(41);
  std::size_t n = 12, d = 5;
  Matrix f = random_matrix(n, 3, rng);
  std::vector<double> gv(n * d);
  for (auto& v : gv) v = rng.normal();
  Matrix g(n, d);
  g.data = gv;
  auto gt = nn::Tensor::from({n, d}, gv);
  double want = hsic_statistic(f, g, 1.1, 0.9);
  CHECK(hsic_penalty(gt, f, 1.1, 0.9).item() ==
        doctest::Approx(want).epsilon(1e-12));
}

TEST_CASE("penalty gradient matches finite differences") {
  Rng rng(43);
  std::size_t n = 6, d = 3;
  Matrix f = random_matrix(n, 2, rng);
  std::vector<double> g0(n * d);
  for (auto& v : g0) v = rng.normal();
  auto err = gradcheck::max_rel_error(
      [&](const std::vector<double>& v) {
        auto g = nn::Tensor::from({n, d}, v, true);
        return std::pair{g, hsic_penalty(g, f, 0.8, 1.2)};
      },
      g0);
  CHECK(err <= 1e-3);
}

TEST_CASE("penalty gradient vanishes for a constant representation") {
  Rng rng(47);
  std::size_t n = 7, d = 4;
  Matrix f = random_matrix(n, 3, rng);
  std::vector<double> gv(n * d, 0.3);
  auto g = nn::Tensor::from({n, d}, gv, true);
  auto p = hsic_penalty(g, f, 1.0, 1.0);
  nn::backward(p);
  for (double gr : g.grad()) CHECK(std::abs(gr) <= 1e-12);
}

TEST_CASE("penalty validates its inputs") {
  Rng rng(53);
  Matrix f = random_matrix(4, 2, rng);
  auto g = nn::Tensor::from({3, 2}, std::vector<double>(6, 0.0));
  CHECK_THROWS_AS(hsic_penalty(g, f, 1.0, 1.0), Error);
  auto g4 = nn::Tensor::from({4, 2}, std::vector<double>(8, 0.0));
  CHECK_THROWS_AS(hsic_penalty(g4, f, 1.0, 0.0), Error);
  auto g1 = nn::Tensor::from({1, 2}, std::vector<double>(2, 0.0));
  Matrix f1 = random_matrix(1, 2, rng);
  CHECK_THROWS_AS(hsic_penalty(g1, f1, 1.0, 1.0), Error);
}
