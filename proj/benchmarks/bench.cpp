#include <benchmark/benchmark.h>

#include "noisecond/autodiff.hpp"
#include "noisecond/dsp.hpp"
#include "noisecond/model.hpp"
#include "noisecond/rng.hpp"

namespace {

void BM_Stft(benchmark::State& state) {
  nc::Rng rng(1);
  nc::dsp::Waveform w;
  w.samples.resize(16000);
  for (auto& s : w.samples) s = static_cast<float>(rng.normal() * 0.1);
  for (auto _ : state) {
    auto spec = nc::dsp::stft(w, 400, 160);
    benchmark::DoNotOptimize(spec.v.data());
  }
}
BENCHMARK(BM_Stft);

void BM_Conv2dForward(benchmark::State& state) {
  nc::Rng rng(2);
  auto x = nc::ad::make_tensor<float>({2, 16, 24, 33}, false);
  auto w = nc::ad::make_tensor<float>({32, 16, 3, 3}, true);
  auto b = nc::ad::make_tensor<float>({32}, true);
  for (auto& v : x->v) v = static_cast<float>(rng.normal());
  nc::ad::he_init(w, 16 * 9, rng);
  for (auto _ : state) {
    nc::ad::Graph<float> g;
    auto y = g.conv2d(x, w, b, 1, 1);
    benchmark::DoNotOptimize(y->v.data());
  }
}
BENCHMARK(BM_Conv2dForward);

void BM_MiniatureTrainStep(benchmark::State& state) {
  auto mc = nc::model::ModelConfig::miniature();
  nc::model::EnhancementModel<float> m(mc, 7);
  nc::Rng rng(3);
  auto noisy = nc::ad::make_tensor<float>({4, 1, mc.n, mc.freq_bins}, false);
  auto noise = nc::ad::make_tensor<float>({4, 1, mc.r, mc.freq_bins}, false);
  auto target = nc::ad::make_tensor<float>({4, mc.freq_bins}, false);
  for (auto& v : noisy->v) v = static_cast<float>(rng.normal());
  for (auto& v : noise->v) v = static_cast<float>(rng.normal());
  for (auto& v : target->v) v = static_cast<float>(rng.normal());
  auto params = m.params();
  for (auto _ : state) {
    nc::ad::Graph<float> g;
    auto out = m.forward(g, noisy, noise);
    auto loss = g.mse_loss(out, target);
    g.backward(loss);
    nc::ad::sgd_step(params, 0.0f);
    nc::ad::zero_grads(params);
  }
}
BENCHMARK(BM_MiniatureTrainStep);

}  // namespace

BENCHMARK_MAIN();
