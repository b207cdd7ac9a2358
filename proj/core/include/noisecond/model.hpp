#ifndef NOISECOND_MODEL_HPP
#define NOISECOND_MODEL_HPP

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "noisecond/autodiff.hpp"
#include "noisecond/kvconfig.hpp"

namespace nc::model {

struct ConvSpec {
  std::size_t kh = 3, kw = 3;
  std::size_t sh = 1, sw = 1;
  std::size_t channels = 64;
};

std::string format_blocks(const std::vector<ConvSpec>& blocks);
std::vector<ConvSpec> parse_blocks(const std::string& text);

inline std::size_t ceil_div(std::size_t a, std::size_t b) { return (a + b - 1) / b; }

struct ModelConfig {
  std::string arch = "main";  // "main" or "noise_aware"
  std::size_t n = 200;        // noisy-segment frames
  std::size_t r = 35;         // noise-segment frames
  std::size_t freq_bins = 201;
  std::size_t frame_len = 400;
  std::size_t hop = 160;
  std::size_t embed_dim = 512;
  std::size_t loc_hidden = 50;
  bool use_noise_embedding = true;
  std::vector<ConvSpec> emb_blocks = {
      {8, 4, 3, 2, 64}, {8, 4, 3, 2, 128}, {4, 4, 1, 1, 256}, {4, 4, 1, 2, 512}};
  std::vector<ConvSpec> enh_blocks = {
      {4, 4, 1, 1, 64},  {4, 4, 1, 1, 64},  {4, 4, 2, 2, 128}, {4, 4, 1, 1, 128},
      {3, 3, 2, 2, 256}, {3, 3, 1, 1, 256}, {3, 3, 2, 2, 512}, {3, 3, 1, 1, 512}};
  std::size_t baseline_crop = 9;
  std::size_t baseline_layers = 3;
  std::size_t baseline_width = 512;

  void validate() const;
  cfg::KvMap to_kv() const;
  static ModelConfig from_kv(const cfg::KvMap& kv);
  std::uint64_t hash() const { return cfg::hash64(to_kv()); }

  // Paper-scale numbers are the member defaults.
  static ModelConfig paper_defaults() { return ModelConfig{}; }

  // Small enough to train on a desk corpus, same feature space.
  static ModelConfig desk();

  // Tiny dimensions used by gradient checks and convergence probes.
  static ModelConfig miniature();
};

// Spatial (time, freq) extents after each block of a subnetwork.
std::vector<std::pair<std::size_t, std::size_t>> spatial_trace(
    std::size_t h, std::size_t w, const std::vector<ConvSpec>& blocks);

// ---- Building blocks -------------------------------------------------------

template <class T>
struct Conv {
  ad::TensorPtr<T> w;  // Cout×Cin×kH×kW
  ad::TensorPtr<T> b;  // Cout
  std::size_t sh = 1, sw = 1;

  // A convolution whose output feeds a batch norm carries no bias; the BN
  // shift makes it redundant (and its true gradient exactly zero).
  void init(std::size_t cin, const ConvSpec& spec, Rng& rng, bool with_bias = true) {
    w = ad::make_tensor<T>({spec.channels, cin, spec.kh, spec.kw}, true);
    b = with_bias ? ad::make_tensor<T>({spec.channels}, true) : nullptr;
    ad::he_init(w, cin * spec.kh * spec.kw, rng);
    sh = spec.sh;
    sw = spec.sw;
  }

  ad::TensorPtr<T> forward(ad::Graph<T>& g, const ad::TensorPtr<T>& x) const {
    return g.conv2d(x, w, b, sh, sw);
  }
};

// y1 = relu(bn_mid(conv1(x) + cond1)); y2 = conv2(y1) + cond2;
// out = relu(bn_out(y2 + shortcut(x))). Stride lives on conv1 only;
// shortcut is a strided 1x1 projection, present iff shape changes.
template <class T>
struct ResidualBlock {
  Conv<T> conv1, conv2;
  ad::BatchNorm<T> bn_mid, bn_out;
  bool has_shortcut = false;
  Conv<T> shortcut;

  void init(std::size_t cin, const ConvSpec& spec, Rng& rng) {
    conv1.init(cin, spec, rng, false);
    ConvSpec second = spec;
    second.sh = second.sw = 1;
    conv2.init(spec.channels, second, rng, false);
    bn_mid.resize(spec.channels);
    bn_out.resize(spec.channels);
    has_shortcut = spec.sh != 1 || spec.sw != 1 || cin != spec.channels;
    if (has_shortcut) {
      ConvSpec proj{1, 1, spec.sh, spec.sw, spec.channels};
      shortcut.init(cin, proj, rng, false);
    }
  }

  ad::TensorPtr<T> forward(ad::Graph<T>& g, const ad::TensorPtr<T>& x,
                           const ad::TensorPtr<T>& cond1 = nullptr,
                           const ad::TensorPtr<T>& cond2 = nullptr) {
    auto h1 = conv1.forward(g, x);
    if (cond1) h1 = g.add(h1, cond1);
    auto y1 = g.relu(g.batch_norm(h1, bn_mid));
    auto h2 = conv2.forward(g, y1);
    if (cond2) h2 = g.add(h2, cond2);
    auto sc = has_shortcut ? shortcut.forward(g, x) : x;
    return g.relu(g.batch_norm(g.add(h2, sc), bn_out));
  }

  void set_training(bool training) {
    bn_mid.training = training;
    bn_out.training = training;
  }
};

// Adds per-channel, per-time-index and per-frequency-index biases to a
// convolution output map: out[b,c,h,w] += chan[b,c] + time[h,c] + freq[w,c].
// Any of the bias terms may be null.
template <class T>
ad::TensorPtr<T> inject_condition(ad::Graph<T>& g, const ad::TensorPtr<T>& conv_out,
                                  const ad::TensorPtr<T>& chan,
                                  const ad::TensorPtr<T>& time,
                                  const ad::TensorPtr<T>& freq) {
  if (conv_out->shape.size() != 4)
    throw ShapeError("inject_condition expects a 4-d map");
  const std::size_t C = conv_out->shape[1], H = conv_out->shape[2],
                    W = conv_out->shape[3];
  auto out = conv_out;
  if (chan) {
    if (chan->shape.size() != 2 || chan->shape[1] != C)
      throw ShapeError("inject_condition channel bias must be BxC");
    out = g.add(out, g.reshape(chan, {chan->shape[0], C, 1, 1}));
  }
  if (time) {
    if (time->shape != ad::Shape{H, C})
      throw ShapeError("inject_condition time bias must be HxC");
    out = g.add(out, g.reshape(g.transpose2d(time), {1, C, H, 1}));
  }
  if (freq) {
    if (freq->shape != ad::Shape{W, C})
      throw ShapeError("inject_condition freq bias must be WxC");
    out = g.add(out, g.reshape(g.transpose2d(freq), {1, C, 1, W}));
  }
  return out;
}

// Embeds a location index, normalized to [0,1] by the axis extent, through a
// shared two-layer trunk. One forward call embeds every index of one axis.
template <class T>
struct LocationEmbedder {
  ad::TensorPtr<T> w1, w2;  // biases omitted: both denses feed a batch norm
  ad::BatchNorm<T> bn1, bn2;

  void init(std::size_t hidden, Rng& rng) {
    w1 = ad::make_tensor<T>({hidden, 1}, true);
    w2 = ad::make_tensor<T>({hidden, hidden}, true);
    ad::he_init(w1, 1, rng);
    ad::he_init(w2, hidden, rng);
    bn1.resize(hidden);
    bn2.resize(hidden);
  }

  // Returns extent×hidden embeddings for indices 0..extent-1.
  ad::TensorPtr<T> forward(ad::Graph<T>& g, std::size_t extent) {
    std::vector<T> idx(extent);
    for (std::size_t i = 0; i < extent; ++i)
      idx[i] = extent > 1 ? static_cast<T>(i) / static_cast<T>(extent - 1) : T(0);
    auto x = g.input({extent, 1}, std::move(idx));
    auto h1 = g.relu(g.batch_norm(g.dense(x, w1, nullptr), bn1));
    return g.relu(g.batch_norm(g.dense(h1, w2, nullptr), bn2));
  }

  void set_training(bool training) {
    bn1.training = training;
    bn2.training = training;
  }
};

// Per-convolution-layer projections of the conditioning signals.
template <class T>
struct CondProj {
  ad::TensorPtr<T> noise_proj;  // C×embed_dim, absent without noise embedding
  ad::TensorPtr<T> time_proj;   // C×loc_hidden
  ad::TensorPtr<T> freq_proj;   // C×loc_hidden
};

// Four residual blocks followed by global average pooling; the pooled
// feature maps are the noise embedding.
template <class T>
struct NoiseEmbedder {
  std::vector<ResidualBlock<T>> blocks;

  void init(const ModelConfig& cfg, Rng& rng) {
    blocks.resize(cfg.emb_blocks.size());
    std::size_t cin = 1;
    for (std::size_t i = 0; i < blocks.size(); ++i) {
      blocks[i].init(cin, cfg.emb_blocks[i], rng);
      cin = cfg.emb_blocks[i].channels;
    }
  }

  ad::TensorPtr<T> forward(ad::Graph<T>& g, const ad::TensorPtr<T>& noise_segment) {
    auto h = noise_segment;
    for (auto& b : blocks) h = b.forward(g, h);
    return g.global_avg_pool(h);
  }

  void set_training(bool training) {
    for (auto& b : blocks) b.set_training(training);
  }
};

// Eight conditioned residual blocks, flatten, and a dense layer whose output
// is an additive mask on the central noisy frame.
template <class T>
struct Enhancer {
  std::vector<ResidualBlock<T>> blocks;
  std::vector<std::array<CondProj<T>, 2>> projs;  // per block, per conv layer
  LocationEmbedder<T> loc;
  ad::TensorPtr<T> fc_w, fc_b;
  ModelConfig cfg;

  void init(const ModelConfig& config, Rng& rng) {
    cfg = config;
    loc.init(cfg.loc_hidden, rng);
    blocks.resize(cfg.enh_blocks.size());
    projs.resize(cfg.enh_blocks.size());
    std::size_t cin = 1;
    for (std::size_t i = 0; i < blocks.size(); ++i) {
      const auto& spec = cfg.enh_blocks[i];
      blocks[i].init(cin, spec, rng);
      for (auto& p : projs[i]) {
        if (cfg.use_noise_embedding) {
          // Zero start: conditioning is learned, so at initialization the
          // conditioned network computes the same function as one without it.
          p.noise_proj = ad::make_tensor<T>({spec.channels, cfg.embed_dim}, true);
        }
        p.time_proj = ad::make_tensor<T>({spec.channels, cfg.loc_hidden}, true);
        p.freq_proj = ad::make_tensor<T>({spec.channels, cfg.loc_hidden}, true);
        ad::he_init(p.time_proj, cfg.loc_hidden, rng);
        ad::he_init(p.freq_proj, cfg.loc_hidden, rng);
      }
      cin = spec.channels;
    }
    const auto trace = spatial_trace(cfg.n, cfg.freq_bins, cfg.enh_blocks);
    const std::size_t flat =
        trace.back().first * trace.back().second * cfg.enh_blocks.back().channels;
    fc_w = ad::make_tensor<T>({cfg.freq_bins, flat}, true);
    fc_b = ad::make_tensor<T>({cfg.freq_bins}, true);
    ad::he_init(fc_w, flat, rng);
  }

  // noisy: B×1×n×bins; noise_emb: B×embed_dim (required iff the config uses
  // the noise embedding). Returns the enhanced central frame, B×bins.
  ad::TensorPtr<T> forward(ad::Graph<T>& g, const ad::TensorPtr<T>& noisy,
                           const ad::TensorPtr<T>& noise_emb) {
    if (noisy->shape.size() != 4 || noisy->shape[1] != 1 ||
        noisy->shape[2] != cfg.n || noisy->shape[3] != cfg.freq_bins)
      throw ShapeError("enhancer input must be Bx1x" + std::to_string(cfg.n) +
                       "x" + std::to_string(cfg.freq_bins));
    if (cfg.use_noise_embedding && !noise_emb)
      throw ContractViolation("config uses the noise embedding but none was given");

    const std::size_t B = noisy->shape[0];
    auto h = noisy;
    std::size_t ht = cfg.n, wf = cfg.freq_bins;
    for (std::size_t i = 0; i < blocks.size(); ++i) {
      const auto& spec = cfg.enh_blocks[i];
      ht = ceil_div(ht, spec.sh);
      wf = ceil_div(wf, spec.sw);
      auto t_emb = loc.forward(g, ht);
      auto f_emb = loc.forward(g, wf);
      std::array<ad::TensorPtr<T>, 2> conds;
      for (std::size_t c = 0; c < 2; ++c) {
        const auto& p = projs[i][c];
        ad::TensorPtr<T> cond;
        if (noise_emb && p.noise_proj) {
          cond = g.reshape(g.dense(noise_emb, p.noise_proj, nullptr),
                           {B, spec.channels, 1, 1});
        }
        auto tm = g.reshape(g.transpose2d(g.dense(t_emb, p.time_proj, nullptr)),
                            {1, spec.channels, ht, 1});
        auto fm = g.reshape(g.transpose2d(g.dense(f_emb, p.freq_proj, nullptr)),
                            {1, spec.channels, 1, wf});
        auto lm = g.add(tm, fm);
        conds[c] = cond ? g.add(cond, lm) : lm;
      }
      h = blocks[i].forward(g, h, conds[0], conds[1]);
    }

    auto mask = g.dense(g.flatten(h), fc_w, fc_b);
    return g.add(mask, central_frame(g, noisy));
  }

  // The central frame of each noisy segment, as a gradient-free leaf.
  ad::TensorPtr<T> central_frame(ad::Graph<T>& g, const ad::TensorPtr<T>& noisy) const {
    const std::size_t B = noisy->shape[0], F = cfg.freq_bins;
    const std::size_t c = cfg.n / 2;
    std::vector<T> vals(B * F);
    for (std::size_t b = 0; b < B; ++b)
      for (std::size_t f = 0; f < F; ++f)
        vals[b * F + f] = noisy->v[(b * cfg.n + c) * F + f];
    return g.input({B, F}, std::move(vals));
  }

  void set_training(bool training) {
    for (auto& b : blocks) b.set_training(training);
    loc.set_training(training);
  }
};

// Noise-aware fully-connected baseline: a centered crop of the noisy segment
// concatenated with the time-averaged noise segment, through dense+BN+relu
// layers, emitting the same additive mask.
template <class T>
struct NoiseAware {
  struct Layer {
    ad::TensorPtr<T> w;  // bias omitted: the dense feeds a batch norm
    ad::BatchNorm<T> bn;
  };
  std::vector<Layer> hidden;
  ad::TensorPtr<T> fc_w, fc_b;
  ModelConfig cfg;

  void init(const ModelConfig& config, Rng& rng) {
    cfg = config;
    const std::size_t in_dim = cfg.baseline_crop * cfg.freq_bins + cfg.freq_bins;
    std::size_t din = in_dim;
    hidden.resize(cfg.baseline_layers);
    for (auto& l : hidden) {
      l.w = ad::make_tensor<T>({cfg.baseline_width, din}, true);
      ad::he_init(l.w, din, rng);
      l.bn.resize(cfg.baseline_width);
      din = cfg.baseline_width;
    }
    fc_w = ad::make_tensor<T>({cfg.freq_bins, din}, true);
    fc_b = ad::make_tensor<T>({cfg.freq_bins}, true);
    ad::he_init(fc_w, din, rng);
  }

  ad::TensorPtr<T> forward(ad::Graph<T>& g, const ad::TensorPtr<T>& noisy,
                           const ad::TensorPtr<T>& noise_segment) {
    if (noisy->shape.size() != 4 || noisy->shape[2] != cfg.n ||
        noisy->shape[3] != cfg.freq_bins)
      throw ShapeError("baseline noisy input must be Bx1xnxbins");
    if (noise_segment->shape.size() != 4 || noise_segment->shape[2] != cfg.r ||
        noise_segment->shape[3] != cfg.freq_bins)
      throw ShapeError("baseline noise input must be Bx1xrxbins");
    const std::size_t B = noisy->shape[0], F = cfg.freq_bins, k = cfg.baseline_crop;
    const std::size_t c = cfg.n / 2, first = c - k / 2;

    std::vector<T> vals(B * (k * F + F));
    for (std::size_t b = 0; b < B; ++b) {
      T* row = vals.data() + b * (k * F + F);
      for (std::size_t t = 0; t < k; ++t)
        for (std::size_t f = 0; f < F; ++f)
          row[t * F + f] = noisy->v[(b * cfg.n + first + t) * F + f];
      for (std::size_t f = 0; f < F; ++f) {
        T acc = 0;
        for (std::size_t t = 0; t < cfg.r; ++t)
          acc += noise_segment->v[(b * cfg.r + t) * F + f];
        row[k * F + f] = acc / static_cast<T>(cfg.r);
      }
    }
    auto h = g.input({B, k * F + F}, std::move(vals));
    for (auto& l : hidden) h = g.relu(g.batch_norm(g.dense(h, l.w, nullptr), l.bn));
    auto mask = g.dense(h, fc_w, fc_b);

    std::vector<T> central(B * F);
    for (std::size_t b = 0; b < B; ++b)
      for (std::size_t f = 0; f < F; ++f)
        central[b * F + f] = noisy->v[(b * cfg.n + c) * F + f];
    return g.add(mask, g.input({B, F}, std::move(central)));
  }

  void set_training(bool training) {
    for (auto& l : hidden) l.bn.training = training;
  }
};

// One trainable enhancement model: either the two-subnetwork architecture or
// the noise-aware baseline, selected by cfg.arch.
template <class T>
class EnhancementModel {
 public:
  EnhancementModel(const ModelConfig& cfg, std::uint64_t seed) : cfg_(cfg) {
    cfg.validate();
    Rng rng(seed);
    if (cfg.arch == "noise_aware") {
      baseline_.emplace();
      baseline_->init(cfg, rng);
    } else {
      enhancer_.emplace();
      enhancer_->init(cfg, rng);
      if (cfg.use_noise_embedding) {
        embedder_.emplace();
        embedder_->init(cfg, rng);
      }
    }
  }

  const ModelConfig& config() const { return cfg_; }

  ad::TensorPtr<T> embed_noise(ad::Graph<T>& g, const ad::TensorPtr<T>& noise_segment) {
    if (!embedder_) throw ContractViolation("model has no embedding subnetwork");
    return embedder_->forward(g, noise_segment);
  }

  // noisy: B×1×n×bins, noise_segment: B×1×r×bins. The noise segment is
  // ignored by the unconditioned main model.
  ad::TensorPtr<T> forward(ad::Graph<T>& g, const ad::TensorPtr<T>& noisy,
                           const ad::TensorPtr<T>& noise_segment) {
    if (baseline_) return baseline_->forward(g, noisy, noise_segment);
    ad::TensorPtr<T> emb;
    if (embedder_) emb = embedder_->forward(g, noise_segment);
    return enhancer_->forward(g, noisy, emb);
  }

  // Forward with a precomputed embedding; used at inference where the hint
  // is embedded once per utterance.
  ad::TensorPtr<T> forward_with_embedding(ad::Graph<T>& g,
                                          const ad::TensorPtr<T>& noisy,
                                          const ad::TensorPtr<T>& emb) {
    if (baseline_) throw ContractViolation("baseline has no embedding input");
    return enhancer_->forward(g, noisy, emb);
  }

  Enhancer<T>* enhancer() { return enhancer_ ? &*enhancer_ : nullptr; }
  NoiseEmbedder<T>* embedder() { return embedder_ ? &*embedder_ : nullptr; }
  NoiseAware<T>* baseline() { return baseline_ ? &*baseline_ : nullptr; }

  void set_training(bool training) {
    if (enhancer_) enhancer_->set_training(training);
    if (embedder_) embedder_->set_training(training);
    if (baseline_) baseline_->set_training(training);
    training_ = training;
  }

  bool is_training() const { return training_; }

  std::vector<std::pair<std::string, ad::TensorPtr<T>>> named_params();
  std::vector<std::pair<std::string, std::vector<T>*>> named_buffers();

  std::vector<ad::TensorPtr<T>> params() {
    std::vector<ad::TensorPtr<T>> out;
    for (auto& [name, p] : named_params()) out.push_back(p);
    return out;
  }

 private:
  ModelConfig cfg_;
  std::optional<NoiseEmbedder<T>> embedder_;
  std::optional<Enhancer<T>> enhancer_;
  std::optional<NoiseAware<T>> baseline_;
  bool training_ = true;
};

// ---- parameter registry ----------------------------------------------------

template <class T>
void collect_block(const std::string& prefix, ResidualBlock<T>& b,
                   std::vector<std::pair<std::string, ad::TensorPtr<T>>>& out) {
  out.emplace_back(prefix + ".conv1.weight", b.conv1.w);
  out.emplace_back(prefix + ".conv2.weight", b.conv2.w);
  out.emplace_back(prefix + ".bn_mid.gamma", b.bn_mid.gamma);
  out.emplace_back(prefix + ".bn_mid.beta", b.bn_mid.beta);
  out.emplace_back(prefix + ".bn_out.gamma", b.bn_out.gamma);
  out.emplace_back(prefix + ".bn_out.beta", b.bn_out.beta);
  if (b.has_shortcut)
    out.emplace_back(prefix + ".shortcut.weight", b.shortcut.w);
}

template <class T>
void collect_block_buffers(const std::string& prefix, ResidualBlock<T>& b,
                           std::vector<std::pair<std::string, std::vector<T>*>>& out) {
  out.emplace_back(prefix + ".bn_mid.running_mean", &b.bn_mid.running_mean);
  out.emplace_back(prefix + ".bn_mid.running_var", &b.bn_mid.running_var);
  out.emplace_back(prefix + ".bn_out.running_mean", &b.bn_out.running_mean);
  out.emplace_back(prefix + ".bn_out.running_var", &b.bn_out.running_var);
}

template <class T>
std::vector<std::pair<std::string, ad::TensorPtr<T>>>
EnhancementModel<T>::named_params() {
  std::vector<std::pair<std::string, ad::TensorPtr<T>>> out;
  if (embedder_)
    for (std::size_t i = 0; i < embedder_->blocks.size(); ++i)
      collect_block("emb.block" + std::to_string(i), embedder_->blocks[i], out);
  if (enhancer_) {
    auto& e = *enhancer_;
    out.emplace_back("loc.dense1.weight", e.loc.w1);
    out.emplace_back("loc.dense2.weight", e.loc.w2);
    out.emplace_back("loc.bn1.gamma", e.loc.bn1.gamma);
    out.emplace_back("loc.bn1.beta", e.loc.bn1.beta);
    out.emplace_back("loc.bn2.gamma", e.loc.bn2.gamma);
    out.emplace_back("loc.bn2.beta", e.loc.bn2.beta);
    for (std::size_t i = 0; i < e.blocks.size(); ++i) {
      const std::string prefix = "enh.block" + std::to_string(i);
      collect_block(prefix, e.blocks[i], out);
      for (std::size_t c = 0; c < 2; ++c) {
        const std::string cp = prefix + ".conv" + std::to_string(c + 1);
        if (e.projs[i][c].noise_proj)
          out.emplace_back(cp + ".noise_proj", e.projs[i][c].noise_proj);
        out.emplace_back(cp + ".time_proj", e.projs[i][c].time_proj);
        out.emplace_back(cp + ".freq_proj", e.projs[i][c].freq_proj);
      }
    }
    out.emplace_back("enh.fc.weight", e.fc_w);
    out.emplace_back("enh.fc.bias", e.fc_b);
  }
  if (baseline_) {
    auto& m = *baseline_;
    for (std::size_t i = 0; i < m.hidden.size(); ++i) {
      const std::string prefix = "base.layer" + std::to_string(i);
      out.emplace_back(prefix + ".weight", m.hidden[i].w);
      out.emplace_back(prefix + ".bn.gamma", m.hidden[i].bn.gamma);
      out.emplace_back(prefix + ".bn.beta", m.hidden[i].bn.beta);
    }
    out.emplace_back("base.fc.weight", m.fc_w);
    out.emplace_back("base.fc.bias", m.fc_b);
  }
  return out;
}

template <class T>
std::vector<std::pair<std::string, std::vector<T>*>>
EnhancementModel<T>::named_buffers() {
  std::vector<std::pair<std::string, std::vector<T>*>> out;
  if (embedder_)
    for (std::size_t i = 0; i < embedder_->blocks.size(); ++i)
      collect_block_buffers("emb.block" + std::to_string(i), embedder_->blocks[i], out);
  if (enhancer_) {
    auto& e = *enhancer_;
    out.emplace_back("loc.bn1.running_mean", &e.loc.bn1.running_mean);
    out.emplace_back("loc.bn1.running_var", &e.loc.bn1.running_var);
    out.emplace_back("loc.bn2.running_mean", &e.loc.bn2.running_mean);
    out.emplace_back("loc.bn2.running_var", &e.loc.bn2.running_var);
    for (std::size_t i = 0; i < e.blocks.size(); ++i)
      collect_block_buffers("enh.block" + std::to_string(i), e.blocks[i], out);
  }
  if (baseline_)
    for (std::size_t i = 0; i < baseline_->hidden.size(); ++i) {
      const std::string prefix = "base.layer" + std::to_string(i);
      out.emplace_back(prefix + ".bn.running_mean", &baseline_->hidden[i].bn.running_mean);
      out.emplace_back(prefix + ".bn.running_var", &baseline_->hidden[i].bn.running_var);
    }
  return out;
}

}  // namespace nc::model

#endif
