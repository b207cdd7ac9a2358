#include <cmath>
#include <vector>

#include "doctest.h"
#include "noisecond/error.hpp"
#include "noisecond/model.hpp"
#include "noisecond/rng.hpp"

using namespace nc;

namespace {

std::vector<float> random_vec(std::size_t n, Rng& rng) {
  std::vector<float> v(n);
  for (auto& x : v) x = static_cast<float>(rng.uniform(-1, 1));
  return v;
}

}  // namespace

TEST_CASE("paper-config spatial traces and flatten width") {
  const auto cfg = model::ModelConfig{};  // paper defaults
  auto emb = model::spatial_trace(cfg.r, cfg.freq_bins, cfg.emb_blocks);
  REQUIRE(emb.size() == 4);
  CHECK(emb[0] == std::pair<std::size_t, std::size_t>{12, 101});
  CHECK(emb[1] == std::pair<std::size_t, std::size_t>{4, 51});
  CHECK(emb[2] == std::pair<std::size_t, std::size_t>{4, 51});
  CHECK(emb[3] == std::pair<std::size_t, std::size_t>{4, 26});
  CHECK(cfg.emb_blocks.back().channels == 512);

  auto enh = model::spatial_trace(cfg.n, cfg.freq_bins, cfg.enh_blocks);
  CHECK(enh.back() == std::pair<std::size_t, std::size_t>{25, 26});
  CHECK(enh.back().first * enh.back().second * cfg.enh_blocks.back().channels ==
        332800);
}

TEST_CASE("residual block shape algebra: 1x1x35x201 through (8x4, s3x2, 64)") {
  Rng rng(31);
  model::ResidualBlock<float> block;
  block.init(1, {8, 4, 3, 2, 64}, rng);
  ad::Graph<float> g;
  auto x = g.input({1, 1, 35, 201}, std::vector<float>(35 * 201, 0.1f));
  // Batch of one is fine in eval mode.
  block.set_training(false);
  auto y = block.forward(g, x);
  CHECK(y->shape == ad::Shape{1, 64, 12, 101});
}

TEST_CASE("zeroed final dense layer makes the model an identity") {
  auto cfg = model::ModelConfig::miniature();
  model::EnhancementModel<float> m(cfg, 77);
  auto* enh = m.enhancer();
  REQUIRE(enh);
  std::fill(enh->fc_w->v.begin(), enh->fc_w->v.end(), 0.0f);
  std::fill(enh->fc_b->v.begin(), enh->fc_b->v.end(), 0.0f);
  m.set_training(false);

  Rng rng(32);
  const std::size_t B = 2;
  ad::Graph<float> g;
  auto noisy_vals = random_vec(B * cfg.n * cfg.freq_bins, rng);
  auto noisy = g.input({B, 1, cfg.n, cfg.freq_bins},
                       std::vector<float>(noisy_vals));
  auto noise = g.input({B, 1, cfg.r, cfg.freq_bins},
                       random_vec(B * cfg.r * cfg.freq_bins, rng));
  auto out = m.forward(g, noisy, noise);
  REQUIRE(out->shape == ad::Shape{B, cfg.freq_bins});
  const std::size_t c = cfg.n / 2;
  for (std::size_t b = 0; b < B; ++b)
    for (std::size_t f = 0; f < cfg.freq_bins; ++f)
      CHECK(out->v[b * cfg.freq_bins + f] ==
            noisy_vals[(b * cfg.n + c) * cfg.freq_bins + f]);
}

TEST_CASE("different tone environments embed to different vectors") {
  auto cfg = model::ModelConfig::miniature();
  model::EnhancementModel<float> m(cfg, 78);
  m.set_training(false);

  // Two synthetic "spectrogram" excerpts with energy in different bins.
  std::vector<float> a(cfg.r * cfg.freq_bins, -16.0f);
  std::vector<float> b(cfg.r * cfg.freq_bins, -16.0f);
  for (std::size_t t = 0; t < cfg.r; ++t) {
    a[t * cfg.freq_bins + 3] = 0.5f;
    b[t * cfg.freq_bins + 11] = 0.5f;
  }
  ad::Graph<float> g;
  auto ea = m.embed_noise(g, g.input({1, 1, cfg.r, cfg.freq_bins}, std::move(a)));
  auto eb = m.embed_noise(g, g.input({1, 1, cfg.r, cfg.freq_bins}, std::move(b)));
  REQUIRE(ea->shape == ad::Shape{1, cfg.embed_dim});
  double dist = 0;
  for (std::size_t i = 0; i < ea->size(); ++i) {
    const double d = ea->v[i] - eb->v[i];
    dist += d * d;
  }
  CHECK(dist > 0.0);
}

TEST_CASE("changing only the noise segment changes the output") {
  auto cfg = model::ModelConfig::miniature();
  model::EnhancementModel<float> m(cfg, 79);
  m.set_training(false);
  // Nonzero conditioning projections; they initialize to zero so that with
  // and without conditioning start identical.
  for (auto& [name, p] : m.named_params())
    if (name.find("noise_proj") != std::string::npos)
      for (std::size_t i = 0; i < p->size(); ++i)
        p->v[i] = 0.01f * static_cast<float>(i % 7);

  Rng rng(33);
  auto noisy_vals = random_vec(cfg.n * cfg.freq_bins, rng);
  std::vector<float> na(cfg.r * cfg.freq_bins, -16.0f);
  std::vector<float> nb(cfg.r * cfg.freq_bins, -16.0f);
  for (std::size_t t = 0; t < cfg.r; ++t) {
    na[t * cfg.freq_bins + 2] = 1.0f;
    nb[t * cfg.freq_bins + 9] = 1.0f;
  }
  ad::Graph<float> g;
  auto noisy1 = g.input({1, 1, cfg.n, cfg.freq_bins}, std::vector<float>(noisy_vals));
  auto noisy2 = g.input({1, 1, cfg.n, cfg.freq_bins}, std::vector<float>(noisy_vals));
  auto out_a = m.forward(g, noisy1, g.input({1, 1, cfg.r, cfg.freq_bins}, std::move(na)));
  auto out_b = m.forward(g, noisy2, g.input({1, 1, cfg.r, cfg.freq_bins}, std::move(nb)));
  double dist = 0;
  for (std::size_t i = 0; i < out_a->size(); ++i) {
    const double d = out_a->v[i] - out_b->v[i];
    dist += d * d;
  }
  CHECK(dist > 0.0);
}

TEST_CASE("location embedder is deterministic across calls in eval mode") {
  Rng rng(34);
  model::LocationEmbedder<float> loc;
  loc.init(6, rng);
  loc.set_training(false);
  ad::Graph<float> g;
  auto a = loc.forward(g, 9);
  auto b = loc.forward(g, 9);
  CHECK(a->v == b->v);
  CHECK(a->shape == ad::Shape{9, 6});
}

TEST_CASE("location embedder vectors are 50-wide at paper defaults") {
  const model::ModelConfig cfg;
  CHECK(cfg.loc_hidden == 50);
  CHECK(cfg.embed_dim == 512);
}

TEST_CASE("gradient flows into the embedder from the enhancement loss") {
  auto cfg = model::ModelConfig::miniature();
  model::EnhancementModel<float> m(cfg, 80);
  Rng rng(35);
  // Jitter the zero-initialized conditioning projections so the embedding
  // actually reaches the output.
  for (auto& [name, p] : m.named_params())
    if (name.find("noise_proj") != std::string::npos)
      for (auto& v : p->v) v = static_cast<float>(rng.normal(0.0, 0.05));

  ad::Graph<float> g;
  auto noisy = g.input({2, 1, cfg.n, cfg.freq_bins},
                       random_vec(2 * cfg.n * cfg.freq_bins, rng));
  auto noise = g.input({2, 1, cfg.r, cfg.freq_bins},
                       random_vec(2 * cfg.r * cfg.freq_bins, rng));
  auto target = g.input({2, cfg.freq_bins}, random_vec(2 * cfg.freq_bins, rng));
  auto loss = g.mse_loss(m.forward(g, noisy, noise), target);
  ad::zero_grads(m.params());
  g.backward(loss);

  double emb_grad_norm = 0;
  for (auto& [name, p] : m.named_params())
    if (name.rfind("emb.", 0) == 0)
      for (float gr : p->g) emb_grad_norm += double(gr) * gr;
  CHECK(emb_grad_norm > 0.0);
}

TEST_CASE("noise-aware baseline with zero final layer is an identity") {
  auto cfg = model::ModelConfig::miniature();
  cfg.arch = "noise_aware";
  model::EnhancementModel<float> m(cfg, 81);
  auto* base = m.baseline();
  REQUIRE(base);
  std::fill(base->fc_w->v.begin(), base->fc_w->v.end(), 0.0f);
  std::fill(base->fc_b->v.begin(), base->fc_b->v.end(), 0.0f);
  m.set_training(false);

  Rng rng(36);
  auto noisy_vals = random_vec(cfg.n * cfg.freq_bins, rng);
  ad::Graph<float> g;
  auto noisy = g.input({1, 1, cfg.n, cfg.freq_bins}, std::vector<float>(noisy_vals));
  auto noise = g.input({1, 1, cfg.r, cfg.freq_bins},
                       random_vec(cfg.r * cfg.freq_bins, rng));
  auto out = m.forward(g, noisy, noise);
  const std::size_t c = cfg.n / 2;
  for (std::size_t f = 0; f < cfg.freq_bins; ++f)
    CHECK(out->v[f] == noisy_vals[(c)*cfg.freq_bins + f]);
}

TEST_CASE("model config kv round trip and validation") {
  auto cfg = model::ModelConfig::miniature();
  auto kv = cfg.to_kv();
  auto back = model::ModelConfig::from_kv(kv);
  CHECK(back.to_kv() == kv);
  CHECK(back.hash() == cfg.hash());

  auto other = model::ModelConfig::miniature();
  other.use_noise_embedding = false;
  CHECK(other.hash() != cfg.hash());

  auto bad = model::ModelConfig::miniature();
  bad.n = 0;
  CHECK_THROWS_AS(bad.validate(), UsageError);
}
