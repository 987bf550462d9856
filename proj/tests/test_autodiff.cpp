#include <doctest.h>

#include <cmath>
#include <vector>

#include "gradcheck.hpp"
#include "hsicnet/error.hpp"
#include "hsicnet/nn.hpp"
#include "hsicnet/optim.hpp"
#include "hsicnet/rng.hpp"
#include "hsicnet/tensor.hpp"

using namespace hsicnet;
using namespace hsicnet::nn;

namespace {
std::vector<double> seeded_values(std::size_t n, std::uint64_t seed,
                                  double lo = -1.0, double hi = 1.0) {
  Rng rng(seed);
  std::vector<double> v(n);
  for (auto& x : v) x = lo + (hi - lo) * rng.uniform();
  return v;
}
}  // namespace

TEST_CASE("elementwise ops compute expected values") {
  auto a = Tensor::from({3}, {1.0, -2.0, 0.5});
  auto b = Tensor::from({3}, {4.0, 3.0, -1.0});
  auto s = add(a, b);
  CHECK(s.values() == std::vector<double>{5.0, 1.0, -0.5});
  auto p = mul(a, b);
  CHECK(p.values() == std::vector<double>{4.0, -6.0, -0.5});
  auto sc = scale(a, -2.0);
  CHECK(sc.values() == std::vector<double>{-2.0, 4.0, -1.0});
  auto r = relu(a);
  CHECK(r.values() == std::vector<double>{1.0, 0.0, 0.5});
  auto t = tanh(Tensor::from({1}, {0.5}));
  CHECK(t.item() == doctest::Approx(std::tanh(0.5)).epsilon(1e-12));
  auto g = sigmoid(Tensor::from({1}, {0.3}));
  CHECK(g.item() == doctest::Approx(1.0 / (1.0 + std::exp(-0.3))).epsilon(1e-12));
  CHECK(mean_all(b).item() == doctest::Approx(2.0).epsilon(1e-12));
  CHECK_THROWS_AS(add(a, Tensor::from({2}, {1.0, 2.0})), Error);
}

TEST_CASE("backward accumulates through reused nodes") {
  auto x = Tensor::from({2}, {1.5, -0.5}, true);
  // z = mean(x*x + 3x): dz/dx = (2x + 3) / 2
  auto z = mean_all(add(mul(x, x), scale(x, 3.0)));
  backward(z);
  CHECK(x.grad()[0] == doctest::Approx((2.0 * 1.5 + 3.0) / 2.0).epsilon(1e-12));
  CHECK(x.grad()[1] == doctest::Approx((2.0 * -0.5 + 3.0) / 2.0).epsilon(1e-12));
}

TEST_CASE("backward rejects non-scalar roots") {
  auto x = Tensor::from({2}, {1.0, 2.0}, true);
  CHECK_THROWS_AS(backward(add(x, x)), Error);
}

TEST_CASE("concat_cols joins along features and splits gradients") {
  auto a = Tensor::from({2, 2}, {1, 2, 3, 4}, true);
  auto b = Tensor::from({2, 1}, {10, 20}, true);
  auto c = concat_cols(a, b);
  REQUIRE(c.shape() == std::vector<std::size_t>{2, 3});
  CHECK(c.values() == std::vector<double>{1, 2, 10, 3, 4, 20});
  backward(mean_all(mul(c, c)));
  CHECK(a.grad()[3] == doctest::Approx(2.0 * 4.0 / 6.0).epsilon(1e-12));
  CHECK(b.grad()[1] == doctest::Approx(2.0 * 20.0 / 6.0).epsilon(1e-12));

  Tensor undefined;
  auto only_b = concat_cols(undefined, b);
  CHECK(only_b.node() == b.node());
}

TEST_CASE("elementwise gradients match finite differences") {
  auto x0 = seeded_values(6, 11);
  for (auto kind : {0, 1, 2, 3}) {
    auto err = gradcheck::max_rel_error(
        [kind](const std::vector<double>& v) {
          auto x = Tensor::from({6}, v, true);
          Tensor y;
          switch (kind) {
            case 0: y = tanh(x); break;
            case 1: y = sigmoid(x); break;
            case 2: y = mul(x, tanh(x)); break;
            default: y = scale(add(x, sigmoid(x)), 1.7); break;
          }
          return std::pair{x, mean_all(mul(y, y))};
        },
        x0);
    CHECK(err <= 1e-3);
  }
}

TEST_CASE("conv1d matches the dilated no-padding example") {
  auto x = Tensor::from({1, 1, 4}, {1, 2, 3, 4});
  auto w = Tensor::from({1, 1, 2}, {1, 1});
  auto y = conv1d(x, w, Tensor{}, 1, 2, Padding::none);
  REQUIRE(y.shape() == std::vector<std::size_t>{1, 1, 2});
  CHECK(y.values() == std::vector<double>{4.0, 6.0});
}

TEST_CASE("conv1d same padding is left-biased and strides to ceil(T/2)") {
  std::vector<double> ramp(10);
  for (int i = 0; i < 10; ++i) ramp[i] = i;
  auto x = Tensor::from({1, 1, 10}, ramp);
  auto w = Tensor::from({1, 1, 3}, {1, 1, 1});
  auto y = conv1d(x, w, Tensor{}, 2, 1, Padding::same);
  REQUIRE(y.shape() == std::vector<std::size_t>{1, 1, 5});
  CHECK(y.values() == std::vector<double>{1, 6, 12, 18, 24});
}

TEST_CASE("conv1d mixes channels and applies bias") {
  auto x = Tensor::from({1, 2, 3}, {1, 2, 3, 10, 20, 30});
  auto w = Tensor::from({1, 2, 1}, {2, 3});
  auto b = Tensor::from({1}, {0.5});
  auto y = conv1d(x, w, b, 1, 1, Padding::same);
  CHECK(y.values() == std::vector<double>{32.5, 64.5, 96.5});
}

TEST_CASE("conv1d rejects invalid arguments") {
  auto x = Tensor::from({1, 1, 4}, {1, 2, 3, 4});
  auto w = Tensor::from({1, 2, 2}, {1, 1, 1, 1});
  CHECK_THROWS_AS(conv1d(x, w, Tensor{}, 1, 1, Padding::same), Error);
  auto w1 = Tensor::from({1, 1, 2}, {1, 1});
  CHECK_THROWS_AS(conv1d(x, w1, Tensor{}, 0, 1, Padding::same), Error);
  CHECK_THROWS_AS(conv1d(x, w1, Tensor{}, 1, 5, Padding::none), Error);
}

TEST_CASE("conv1d gradients match finite differences") {
  const std::size_t B = 2, Ci = 2, Co = 3, T = 7, K = 3;
  auto x0 = seeded_values(B * Ci * T, 21);
  auto w0 = seeded_values(Co * Ci * K, 22);
  auto b0 = seeded_values(Co, 23);

  for (auto [stride, dil, pad] :
       {std::tuple{1, 1, Padding::same}, std::tuple{2, 2, Padding::same},
        std::tuple{1, 2, Padding::none}}) {
    auto loss_of = [&](const Tensor& x, const Tensor& w, const Tensor& b) {
      auto y = conv1d(x, w, b, stride, dil, pad);
      return mean_all(mul(y, y));
    };
    auto ex = gradcheck::max_rel_error(
        [&](const std::vector<double>& v) {
          auto x = Tensor::from({B, Ci, T}, v, true);
          return std::pair{x, loss_of(x, Tensor::from({Co, Ci, K}, w0),
                                      Tensor::from({Co}, b0))};
        },
        x0);
    auto ew = gradcheck::max_rel_error(
        [&](const std::vector<double>& v) {
          auto w = Tensor::from({Co, Ci, K}, v, true);
          return std::pair{w, loss_of(Tensor::from({B, Ci, T}, x0), w,
                                      Tensor::from({Co}, b0))};
        },
        w0);
    auto eb = gradcheck::max_rel_error(
        [&](const std::vector<double>& v) {
          auto b = Tensor::from({Co}, v, true);
          return std::pair{b, loss_of(Tensor::from({B, Ci, T}, x0),
                                      Tensor::from({Co, Ci, K}, w0), b)};
        },
        b0);
    CHECK(ex <= 1e-3);
    CHECK(ew <= 1e-3);
    CHECK(eb <= 1e-3);
  }
}

TEST_CASE("maxpool keeps length and routes ties to the earlier sample") {
  auto x = Tensor::from({1, 1, 3}, {2, 5, 3}, true);
  auto y = maxpool1d_k2_same(x);
  CHECK(y.values() == std::vector<double>{5, 5, 3});
  backward(scale(mean_all(y), 3.0));  // upstream gradient 1 per element
  CHECK(x.grad() == std::vector<double>{0, 2, 1});

  auto tie = Tensor::from({1, 1, 2}, {4, 4}, true);
  backward(scale(mean_all(maxpool1d_k2_same(tie)), 2.0));
  CHECK(tie.grad() == std::vector<double>{1, 1});  // y0 -> earlier, y1 passthrough
}

TEST_CASE("maxpool gradient matches finite differences") {
  // Values spaced apart so the +-h probe never flips an argmax.
  auto x0 = std::vector<double>{0.3, -0.9, 1.4, 0.1, -0.4, 2.2, -1.7, 0.8};
  auto err = gradcheck::max_rel_error(
      [](const std::vector<double>& v) {
        auto x = Tensor::from({2, 1, 4}, v, true);
        auto y = maxpool1d_k2_same(x);
        return std::pair{x, mean_all(mul(y, y))};
      },
      x0);
  CHECK(err <= 1e-3);
}

TEST_CASE("dropout masks deterministically and rescales") {
  auto x = Tensor::from({2, 4}, {1, 1, 1, 1, 1, 1, 1, 1}, true);
  Rng r1(5), r2(5);
  auto y1 = dropout(x, 0.5, r1, true);
  auto y2 = dropout(x, 0.5, r2, true);
  CHECK(y1.values() == y2.values());
  bool saw_zero = false;
  for (double v : y1.values()) {
    CHECK((v == 0.0 || v == 2.0));
    saw_zero = saw_zero || v == 0.0;
  }
  CHECK(saw_zero);

  Rng r3(5);
  CHECK(dropout(x, 0.0, r3, true).node() == x.node());
  CHECK(dropout(x, 0.7, r3, false).node() == x.node());
  CHECK_THROWS_AS(dropout(x, 1.0, r3, true), Error);
  CHECK_THROWS_AS(dropout(x, -0.1, r3, true), Error);
}

TEST_CASE("dropout gradient matches finite differences under a fixed seed") {
  auto x0 = seeded_values(8, 31);
  auto err = gradcheck::max_rel_error(
      [](const std::vector<double>& v) {
        auto x = Tensor::from({8}, v, true);
        Rng rng(99);
        auto y = dropout(x, 0.3, rng, true);
        return std::pair{x, mean_all(mul(y, y))};
      },
      x0);
  CHECK(err <= 1e-3);
}

TEST_CASE("global average pool honors valid lengths") {
  auto x = Tensor::from({2, 1, 4}, {1, 2, 3, 999, 4, 4, 4, 4}, true);
  auto y = global_avg_pool(x, {3, 4});
  REQUIRE(y.shape() == std::vector<std::size_t>{2, 1});
  CHECK(y.values()[0] == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(y.values()[1] == doctest::Approx(4.0).epsilon(1e-12));
  backward(mean_all(y));
  CHECK(x.grad()[3] == 0.0);  // padding receives no gradient
  CHECK(x.grad()[0] == doctest::Approx(1.0 / 6.0).epsilon(1e-12));

  CHECK_THROWS_AS(global_avg_pool(x, {3}), Error);
  CHECK_THROWS_AS(global_avg_pool(x, {0, 4}), Error);
  CHECK_THROWS_AS(global_avg_pool(x, {3, 5}), Error);
}

TEST_CASE("global average pool gradient matches finite differences") {
  auto x0 = seeded_values(2 * 3 * 5, 41);
  auto err = gradcheck::max_rel_error(
      [](const std::vector<double>& v) {
        auto x = Tensor::from({2, 3, 5}, v, true);
        auto y = global_avg_pool(x, {4, 5});
        return std::pair{x, mean_all(mul(y, y))};
      },
      x0);
  CHECK(err <= 1e-3);
}

TEST_CASE("cross entropy of uniform logits equals ln K and shifts cancel") {
  auto logits = Tensor::from({1, 2}, {0.7, 0.7});
  CHECK(softmax_cross_entropy(logits, {0}).item() ==
        doctest::Approx(std::log(2.0)).epsilon(1e-12));

  auto a = Tensor::from({2, 3}, {1, 2, 3, -1, 0, 1});
  auto b = Tensor::from({2, 3}, {11, 12, 13, 9, 10, 11});
  CHECK(softmax_cross_entropy(a, {2, 0}).item() ==
        doctest::Approx(softmax_cross_entropy(b, {2, 0}).item()).epsilon(1e-12));

  CHECK_THROWS_AS(softmax_cross_entropy(a, {0}), Error);
  CHECK_THROWS_AS(softmax_cross_entropy(a, {0, 3}), Error);
}

TEST_CASE("cross entropy gradient matches finite differences") {
  auto x0 = seeded_values(4 * 3, 51, -2.0, 2.0);
  auto err = gradcheck::max_rel_error(
      [](const std::vector<double>& v) {
        auto logits = Tensor::from({4, 3}, v, true);
        return std::pair{logits, softmax_cross_entropy(logits, {0, 2, 1, 1})};
      },
      x0);
  CHECK(err <= 1e-3);
}

TEST_CASE("argmax_rows picks the first maximum") {
  auto logits = Tensor::from({3, 3}, {1, 5, 2, 7, 7, 3, -1, -2, -0.5});
  CHECK(argmax_rows(logits) == std::vector<int>{1, 0, 2});
}

TEST_CASE("linear layer computes x W^T + b") {
  Rng rng(1);
  Linear lin(2, 2, rng);
  lin.w.values() = {1, 2, 3, 4};
  lin.b.values() = {10, 20};
  auto y = lin.forward(Tensor::from({1, 2}, {1, 1}));
  CHECK(y.values() == std::vector<double>{13, 27});
  CHECK(lin.named_params("fc").size() == 2);
  CHECK(lin.named_params("fc")[0].first == "fc.w");
}

TEST_CASE("linear gradients match finite differences") {
  const std::size_t B = 3, In = 4, Out = 2;
  auto x0 = seeded_values(B * In, 61);
  auto w0 = seeded_values(Out * In, 62);
  auto b0 = seeded_values(Out, 63);
  auto make_loss = [&](Tensor x, Tensor w, Tensor b) {
    Linear lin;
    lin.w = w;
    lin.b = b;
    return mean_all(mul(lin.forward(x), lin.forward(x)));
  };
  auto ex = gradcheck::max_rel_error(
      [&](const std::vector<double>& v) {
        auto x = Tensor::from({B, In}, v, true);
        return std::pair{x, make_loss(x, Tensor::from({Out, In}, w0),
                                      Tensor::from({Out}, b0))};
      },
      x0);
  auto ew = gradcheck::max_rel_error(
      [&](const std::vector<double>& v) {
        auto w = Tensor::from({Out, In}, v, true);
        return std::pair{w, make_loss(Tensor::from({B, In}, x0), w,
                                      Tensor::from({Out}, b0))};
      },
      w0);
  auto eb = gradcheck::max_rel_error(
      [&](const std::vector<double>& v) {
        auto b = Tensor::from({Out}, v, true);
        return std::pair{b, make_loss(Tensor::from({B, In}, x0),
                                      Tensor::from({Out, In}, w0), b)};
      },
      b0);
  CHECK(ex <= 1e-3);
  CHECK(ew <= 1e-3);
  CHECK(eb <= 1e-3);
}

TEST_CASE("batch norm normalizes, affines, and tracks running stats") {
  BatchNorm1d bn(2);
  bn.gamma.values() = {2.0, 1.0};
  bn.beta.values() = {0.5, 0.0};
  auto x = Tensor::from({4, 2}, {1, 10, 3, 10, 5, 10, 7, 10});
  auto y = bn.forward(x, true);

  // column 0: mean 4, biased var 5
  double inv = 1.0 / std::sqrt(5.0 + 1e-5);
  CHECK(y.values()[0] == doctest::Approx(2.0 * (1 - 4) * inv + 0.5).epsilon(1e-10));
  CHECK(y.values()[6] == doctest::Approx(2.0 * (7 - 4) * inv + 0.5).epsilon(1e-10));
  // column 1 is constant: normalized to 0 -> beta
  CHECK(y.values()[1] == doctest::Approx(0.0).epsilon(1e-6));

  CHECK(bn.running_mean[0] == doctest::Approx(0.9 * 0.0 + 0.1 * 4.0).epsilon(1e-12));
  CHECK(bn.running_var[0] == doctest::Approx(0.9 * 1.0 + 0.1 * 5.0).epsilon(1e-12));

  // eval mode uses the running stats
  auto ye = bn.forward(Tensor::from({1, 2}, {0.4, 1.0}), false);
  double expect = 2.0 * (0.4 - bn.running_mean[0]) /
                      std::sqrt(bn.running_var[0] + 1e-5) + 0.5;
  CHECK(ye.values()[0] == doctest::Approx(expect).epsilon(1e-12));

  CHECK_THROWS_AS(bn.forward(Tensor::from({1, 2}, {1, 2}), true), Error);
  CHECK_THROWS_AS(bn.forward(Tensor::from({2, 3}, {1, 2, 3, 4, 5, 6}), true), Error);
}

TEST_CASE("batch norm gradients match finite differences") {
  const std::size_t B = 5, D = 3;
  auto x0 = seeded_values(B * D, 71);
  auto g0 = seeded_values(D, 72, 0.5, 1.5);
  auto be0 = seeded_values(D, 73);
  auto build = [&](const std::vector<double>& xv, const std::vector<double>& gv,
                   const std::vector<double>& bv, int which) {
    auto x = Tensor::from({B, D}, xv, which == 0);
    BatchNorm1d bn(D);
    bn.gamma = Tensor::from({D}, gv, true);
    bn.beta = Tensor::from({D}, bv, true);
    auto y = bn.forward(x, true);
    auto loss = mean_all(mul(y, y));
    Tensor leaf = which == 0 ? x : (which == 1 ? bn.gamma : bn.beta);
    return std::pair{leaf, loss};
  };
  auto ex = gradcheck::max_rel_error(
      [&](const std::vector<double>& v) { return build(v, g0, be0, 0); }, x0);
  auto eg = gradcheck::max_rel_error(
      [&](const std::vector<double>& v) { return build(x0, v, be0, 1); }, g0);
  auto eb = gradcheck::max_rel_error(
      [&](const std::vector<double>& v) { return build(x0, g0, v, 2); }, be0);
  CHECK(ex <= 1e-3);
  CHECK(eg <= 1e-3);
  CHECK(eb <= 1e-3);
}

TEST_CASE("gated residual block preserves shape and reduces to identity") {
  Rng rng(7);
  GatedResidualBlock block(4, 2, rng);
  auto x = Tensor::from({2, 4, 9}, seeded_values(2 * 4 * 9, 81));
  auto [res, skip] = block.forward(x);
  CHECK(res.shape() == x.shape());
  CHECK(skip.shape() == x.shape());
  CHECK(block.named_params("b0").size() == 8);

  // zeroing the residual projection makes the residual path the identity
  std::fill(block.project_res.w.values().begin(),
            block.project_res.w.values().end(), 0.0);
  std::fill(block.project_res.b.values().begin(),
            block.project_res.b.values().end(), 0.0);
  auto [res2, skip2] = block.forward(x);
  for (std::size_t i = 0; i < x.size(); ++i)
    CHECK(res2.data()[i] == doctest::Approx(x.data()[i]).epsilon(1e-15));
}

TEST_CASE("gated residual block gradient matches finite differences") {
  auto x0 = seeded_values(1 * 2 * 6, 91);
  auto err = gradcheck::max_rel_error(
      [](const std::vector<double>& v) {
        auto x = Tensor::from({1, 2, 6}, v, true);
        Rng rng(13);
        GatedResidualBlock block(2, 2, rng);
        auto [res, skip] = block.forward(x);
        return std::pair{x, add(mean_all(mul(res, res)), mean_all(mul(skip, skip)))};
      },
      x0);
  CHECK(err <= 1e-3);
}

TEST_CASE("cosine schedule hits its endpoints and midpoint") {
  CHECK(cosine_lr(0, 100, 1e-3, 1e-5) == doctest::Approx(1e-3).epsilon(1e-12));
  CHECK(cosine_lr(100, 100, 1e-3, 1e-5) == doctest::Approx(1e-5).epsilon(1e-12));
  CHECK(cosine_lr(150, 100, 1e-3, 1e-5) == doctest::Approx(1e-5).epsilon(1e-12));
  CHECK(cosine_lr(50, 100, 1e-3, 1e-5) == doctest::Approx(5.05e-4).epsilon(1e-12));
  CHECK_THROWS_AS(cosine_lr(0, 0, 1e-3, 1e-5), Error);
}

TEST_CASE("adam takes signed unit-ish first steps and converges on a quadratic") {
  auto p = Tensor::from({1}, {0.0}, true);
  Adam opt({p});
  for (int i = 0; i < 400; ++i) {
    opt.zero_grad();
    auto diff = add(p, Tensor::from({1}, {-3.0}));
    backward(mean_all(mul(diff, diff)));
    if (i == 0) {
      // first step moves by ~lr against the gradient sign
      opt.step(0.1);
      CHECK(p.values()[0] == doctest::Approx(0.1).epsilon(1e-6));
      continue;
    }
    opt.step(0.1);
  }
  CHECK(p.values()[0] == doctest::Approx(3.0).epsilon(0.02));
  CHECK(opt.steps_taken() == 400);
}

TEST_CASE("adam rejects non-finite gradients with a numeric error") {
  auto p = Tensor::from({2}, {1.0, 2.0}, true);
  Adam opt({p});
  p.grad_data()[1] = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(opt.step(1e-3), Error);
  try {
    opt.step(1e-3);
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::numeric);
  }
}

TEST_CASE("he limit follows sqrt(6/fan_in)") {
  CHECK(he_uniform_limit(6) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(he_uniform_limit(24) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK_THROWS_AS(he_uniform_limit(0), Error);
}
