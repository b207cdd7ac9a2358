#include <cmath>
#include <vector>

#include "doctest.h"
#include "noisecond/autodiff.hpp"
#include "noisecond/error.hpp"
#include "noisecond/rng.hpp"

using namespace nc;

namespace {

// Reference conv2d: cross-correlation with same-ceil zero padding, written as
// the obvious quadruple loop.
std::vector<double> conv2d_oracle(const std::vector<double>& x, std::size_t B,
                                  std::size_t Cin, std::size_t H, std::size_t W,
                                  const std::vector<double>& w, std::size_t Cout,
                                  std::size_t kH, std::size_t kW, std::size_t sh,
                                  std::size_t sw) {
  const std::size_t Ho = (H + sh - 1) / sh, Wo = (W + sw - 1) / sw;
  const std::size_t pad_h = (Ho - 1) * sh + kH > H ? (Ho - 1) * sh + kH - H : 0;
  const std::size_t pad_w = (Wo - 1) * sw + kW > W ? (Wo - 1) * sw + kW - W : 0;
  const long top = static_cast<long>(pad_h / 2), left = static_cast<long>(pad_w / 2);
  std::vector<double> out(B * Cout * Ho * Wo, 0.0);
  for (std::size_t b = 0; b < B; ++b)
    for (std::size_t co = 0; co < Cout; ++co)
      for (std::size_t oh = 0; oh < Ho; ++oh)
        for (std::size_t ow = 0; ow < Wo; ++ow) {
          double acc = 0;
          for (std::size_t ci = 0; ci < Cin; ++ci)
            for (std::size_t i = 0; i < kH; ++i)
              for (std::size_t j = 0; j < kW; ++j) {
                const long ih = static_cast<long>(oh * sh + i) - top;
                const long iw = static_cast<long>(ow * sw + j) - left;
                if (ih < 0 || iw < 0 || ih >= static_cast<long>(H) ||
                    iw >= static_cast<long>(W))
                  continue;
                acc += x[((b * Cin + ci) * H + ih) * W + iw] *
                       w[((co * Cin + ci) * kH + i) * kW + j];
              }
          out[((b * Cout + co) * Ho + oh) * Wo + ow] = acc;
        }
  return out;
}

std::vector<double> random_vec(std::size_t n, Rng& rng) {
  std::vector<double> v(n);
  for (auto& x : v) x = rng.uniform(-1, 1);
  return v;
}

}  // namespace

TEST_CASE("conv2d paper-shape stride arithmetic: 35x201 -> 12x101") {
  ad::Graph<float> g;
  auto x = ad::make_tensor<float>({1, 1, 35, 201});
  auto w = ad::make_tensor<float>({64, 1, 8, 4});
  auto y = g.conv2d(x, w, nullptr, 3, 2);
  CHECK(y->shape == ad::Shape{1, 64, 12, 101});
}

TEST_CASE("1x1 identity kernel at stride 1 reproduces the input") {
  Rng rng(21);
  ad::Graph<float> g;
  auto vals = random_vec(2 * 3 * 4 * 5, rng);
  auto x = g.input({2, 3, 4, 5}, std::vector<float>(vals.begin(), vals.end()));
  // Weight (3,3,1,1) with identity channel mixing.
  std::vector<float> wv(9, 0.0f);
  for (int c = 0; c < 3; ++c) wv[c * 3 + c] = 1.0f;
  auto w = g.input({3, 3, 1, 1}, std::move(wv));
  auto y = g.conv2d(x, w, nullptr, 1, 1);
  REQUIRE(y->shape == x->shape);
  for (std::size_t i = 0; i < x->size(); ++i) CHECK(y->v[i] == x->v[i]);
}

TEST_CASE("conv2d matches the quadruple-loop oracle") {
  Rng rng(22);
  for (auto [sh, sw] : {std::pair<std::size_t, std::size_t>{1, 1}, {2, 2}, {3, 2}}) {
    const std::size_t B = 2, Cin = 3, H = 5, W = 5, Cout = 4, kH = 3, kW = 2;
    auto xv = random_vec(B * Cin * H * W, rng);
    auto wv = random_vec(Cout * Cin * kH * kW, rng);
    ad::Graph<double> g;
    auto x = g.input({B, Cin, H, W}, std::vector<double>(xv));
    auto w = g.input({Cout, Cin, kH, kW}, std::vector<double>(wv));
    auto y = g.conv2d(x, w, nullptr, sh, sw);
    auto ref = conv2d_oracle(xv, B, Cin, H, W, wv, Cout, kH, kW, sh, sw);
    REQUIRE(y->size() == ref.size());
    for (std::size_t i = 0; i < ref.size(); ++i)
      CHECK(y->v[i] == doctest::Approx(ref[i]).epsilon(1e-5));
  }
}

TEST_CASE("batch_norm train mode normalizes each channel") {
  Rng rng(23);
  ad::Graph<double> g;
  const std::size_t B = 4, C = 3, H = 2, W = 5;
  auto x = g.input({B, C, H, W}, random_vec(B * C * H * W, rng));
  ad::BatchNorm<double> bn;
  bn.resize(C);
  bn.training = true;
  auto y = g.batch_norm(x, bn);
  for (std::size_t c = 0; c < C; ++c) {
    double mean = 0, var = 0;
    const std::size_t count = B * H * W;
    for (std::size_t b = 0; b < B; ++b)
      for (std::size_t i = 0; i < H * W; ++i)
        mean += y->v[(b * C + c) * H * W + i];
    mean /= count;
    for (std::size_t b = 0; b < B; ++b)
      for (std::size_t i = 0; i < H * W; ++i) {
        const double d = y->v[(b * C + c) * H * W + i] - mean;
        var += d * d;
      }
    var /= count;
    CHECK(std::abs(mean) < 1e-5);
    CHECK(var == doctest::Approx(1.0).epsilon(1e-3));
  }
}

TEST_CASE("batch_norm eval mode with unit stats is an identity") {
  Rng rng(24);
  ad::Graph<double> g;
  auto vals = random_vec(2 * 3 * 2 * 2, rng);
  auto x = g.input({2, 3, 2, 2}, std::vector<double>(vals));
  ad::BatchNorm<double> bn;
  bn.resize(3);
  bn.training = false;  // running stats stay at mean 0, var 1
  auto y = g.batch_norm(x, bn);
  for (std::size_t i = 0; i < vals.size(); ++i)
    CHECK(y->v[i] == doctest::Approx(vals[i]).epsilon(1e-4));
}

TEST_CASE("dense hand arithmetic") {
  ad::Graph<float> g;
  auto x = g.input({1, 2}, {1.0f, 2.0f});
  auto w = g.input({2, 2}, {1.0f, 1.0f, 1.0f, -1.0f});
  auto b = g.input({2}, {0.0f, 0.0f});
  auto y = g.dense(x, w, b);
  CHECK(y->v[0] == 3.0f);
  CHECK(y->v[1] == -1.0f);
}

TEST_CASE("relu clamps negatives and zero") {
  ad::Graph<float> g;
  auto x = g.input({3}, {-1.0f, 0.0f, 2.0f});
  auto y = g.relu(x);
  CHECK(y->v == std::vector<float>{0.0f, 0.0f, 2.0f});
}

TEST_CASE("global_avg_pool of a constant map returns the constant") {
  ad::Graph<float> g;
  auto x = g.input({1, 2, 3, 4}, std::vector<float>(24, 2.5f));
  auto y = g.global_avg_pool(x);
  CHECK(y->shape == ad::Shape{1, 2});
  CHECK(y->v[0] == doctest::Approx(2.5f));
  CHECK(y->v[1] == doctest::Approx(2.5f));
}

TEST_CASE("broadcast add shifts pooled means by exactly the added vector") {
  Rng rng(25);
  ad::Graph<double> g;
  auto x = g.input({2, 3, 2, 2}, random_vec(24, rng));
  auto base = g.global_avg_pool(x);
  auto shift = g.input({1, 3, 1, 1}, {0.5, -1.0, 2.0});
  auto pooled = g.global_avg_pool(g.add(x, shift));
  for (std::size_t b = 0; b < 2; ++b)
    for (std::size_t c = 0; c < 3; ++c)
      CHECK(pooled->v[b * 3 + c] - base->v[b * 3 + c] ==
            doctest::Approx(shift->v[c]).epsilon(1e-9));
}

TEST_CASE("mse_loss closed forms") {
  ad::Graph<float> g;
  auto a = g.input({4}, {1, 2, 3, 4});
  auto b = g.input({4}, {1, 2, 3, 4});
  CHECK(g.mse_loss(a, b)->v[0] == 0.0f);
  auto c = g.input({4}, {2, 3, 4, 5});
  CHECK(g.mse_loss(c, a)->v[0] == doctest::Approx(1.0f));
  auto d = g.input({3}, {0, 0, 0});
  CHECK_THROWS_AS(g.mse_loss(a, d), ShapeError);
}

TEST_CASE("sum loss gradient is all ones and accumulates across backwards") {
  ad::Graph<float> g;
  auto x = ad::make_tensor<float>({5}, std::vector<float>{1, 2, 3, 4, 5}, true);
  auto loss = g.sum(x);
  g.backward(loss);
  for (float gr : x->g) CHECK(gr == 1.0f);
  g.backward(loss);  // no zeroing: grads double
  for (float gr : x->g) CHECK(gr == 2.0f);
  ad::zero_grads<float>({x});
  for (float gr : x->g) CHECK(gr == 0.0f);
}

TEST_CASE("sgd_step arithmetic") {
  auto p = ad::make_tensor<float>({1}, std::vector<float>{1.0f}, true);
  p->g.assign(1, 0.5f);
  ad::sgd_step(std::vector<ad::TensorPtr<float>>{p}, 0.1f);
  CHECK(p->v[0] == doctest::Approx(0.95f));

  // One step on (p - 3)^2 from p = 0 at lr 0.1 lands on 0.6.
  auto q = ad::make_tensor<float>({1}, std::vector<float>{0.0f}, true);
  ad::Graph<float> g;
  auto target = g.input({1}, {3.0f});
  auto loss = g.mse_loss(q, target);
  g.backward(loss);
  ad::sgd_step(std::vector<ad::TensorPtr<float>>{q}, 0.1f);
  CHECK(q->v[0] == doctest::Approx(0.6f));

  // lr = 0 leaves parameters untouched.
  ad::sgd_step(std::vector<ad::TensorPtr<float>>{q}, 0.0f);
  CHECK(q->v[0] == doctest::Approx(0.6f));
}

TEST_CASE("composite graph gradients match central finite differences") {
  Rng rng(26);
  // conv -> bn -> relu -> pool -> dense -> mse at tiny dims, 64-bit.
  const std::size_t B = 3, Cin = 2, H = 4, W = 4, Cout = 3;
  auto xv = random_vec(B * Cin * H * W, rng);
  auto wv = random_vec(Cout * Cin * 3 * 3, rng);
  auto dv = random_vec(2 * Cout, rng);
  auto tv = random_vec(B * 2, rng);

  auto w = ad::make_tensor<double>({Cout, Cin, 3, 3}, std::vector<double>(wv), true);
  auto dw = ad::make_tensor<double>({2, Cout}, std::vector<double>(dv), true);
  ad::BatchNorm<double> bn;
  bn.resize(Cout);
  bn.training = true;

  for (auto& p : {w, dw}) p->zero_grad();
  {
    ad::Graph<double> g;
    auto x = g.input({B, Cin, H, W}, std::vector<double>(xv));
    auto t = g.input({B, 2}, std::vector<double>(tv));
    auto h = g.relu(g.batch_norm(g.conv2d(x, w, nullptr, 1, 1), bn));
    auto y = g.dense(g.global_avg_pool(h), dw, nullptr);
    g.backward(g.mse_loss(y, t));
  }

  const double hstep = 1e-5;
  auto eval_loss = [&]() {
    ad::Graph<double> g;
    auto x = g.input({B, Cin, H, W}, std::vector<double>(xv));
    auto t = g.input({B, 2}, std::vector<double>(tv));
    auto hh = g.relu(g.batch_norm(g.conv2d(x, w, nullptr, 1, 1), bn));
    auto y = g.dense(g.global_avg_pool(hh), dw, nullptr);
    return g.mse_loss(y, t)->v[0];
  };
  double worst = 0;
  for (auto& p : {w, dw})
    for (std::size_t i = 0; i < p->size(); i += 3) {
      const double keep = p->v[i];
      p->v[i] = keep + hstep;
      const double fp = eval_loss();
      p->v[i] = keep - hstep;
      const double fm = eval_loss();
      p->v[i] = keep;
      const double fd = (fp - fm) / (2 * hstep);
      const double rel = std::abs(fd - p->g[i]) /
                         std::max({std::abs(fd), std::abs(p->g[i]), 1e-8});
      worst = std::max(worst, rel);
    }
  CHECK(worst < 1e-4);
}

TEST_CASE("backward requires a scalar loss") {
  ad::Graph<float> g;
  auto x = ad::make_tensor<float>({2}, std::vector<float>{1, 2}, true);
  auto y = g.relu(x);
  CHECK_THROWS_AS(g.backward(y), ContractViolation);
}
