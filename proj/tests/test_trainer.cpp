#include <cmath>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "noisecond/corpus.hpp"
#include "noisecond/error.hpp"
#include "noisecond/trainer.hpp"

using namespace nc;
namespace fs = std::filesystem;

namespace {

corpus::Corpus tiny_corpus() {
  corpus::SynthConfig sc;
  sc.environments = 6;
  sc.utterances = 10;
  sc.speech_seconds = 0.2;
  sc.noise_seconds = 0.4;
  auto synth = corpus::synth_corpus(sc, 91);
  corpus::Corpus c;
  c.speech = std::move(synth.speech);
  c.noise = std::move(synth.noise);
  return c;
}

train::TrainConfig tiny_config() {
  train::TrainConfig tc;
  tc.model = model::ModelConfig::miniature();
  tc.lr = 0.05;
  tc.batch_size = 4;
  tc.steps = 6;
  tc.eval_every = 3;
  tc.val_examples = 4;
  tc.seed = 5;
  return tc;
}

dsp::Waveform random_wave(std::size_t len, Rng& rng) {
  dsp::Waveform w;
  w.samples.resize(len);
  for (auto& s : w.samples) s = static_cast<float>(rng.uniform(-0.5, 0.5));
  return w;
}

}  // namespace

TEST_CASE("fixed_examples is deterministic") {
  auto c = tiny_corpus();
  auto mc = model::ModelConfig::miniature();
  auto a = train::fixed_examples(c.speech_in(corpus::Split::Train),
                                 c.noise_in(corpus::Split::Train),
                                 corpus::default_snrs(), mc, 8, 123);
  auto b = train::fixed_examples(c.speech_in(corpus::Split::Train),
                                 c.noise_in(corpus::Split::Train),
                                 corpus::default_snrs(), mc, 8, 123);
  REQUIRE(a.size() == 8);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].noisy_segment.v == b[i].noisy_segment.v);
    CHECK(a[i].clean_frame == b[i].clean_frame);
    CHECK(a[i].snr_db == b[i].snr_db);
  }
}

TEST_CASE("same seed yields identical loss trajectories") {
  auto c = tiny_corpus();
  auto tc = tiny_config();
  auto r1 = train::train(tc, c);
  auto r2 = train::train(tc, c);
  CHECK(r1.log_lines == r2.log_lines);
  CHECK(r1.best_val_loss == r2.best_val_loss);
  CHECK(r1.first_train_loss == r2.first_train_loss);
}

TEST_CASE("lr = 0 leaves parameters bit-identical regardless of step count") {
  auto c = tiny_corpus();
  auto tc = tiny_config();
  tc.lr = 0.0;
  tc.auto_halve_lr = false;
  tc.steps = 2;
  auto short_run = train::train(tc, c);
  tc.steps = 9;
  auto long_run = train::train(tc, c);
  auto pa = short_run.model->named_params();
  auto pb = long_run.model->named_params();
  REQUIRE(pa.size() == pb.size());
  for (std::size_t i = 0; i < pa.size(); ++i) {
    CHECK(pa[i].first == pb[i].first);
    CHECK(pa[i].second->v == pb[i].second->v);
  }
}

TEST_CASE("trainer config validation") {
  auto tc = tiny_config();
  tc.batch_size = 1;
  CHECK_THROWS_AS(tc.validate(), UsageError);
  tc = tiny_config();
  tc.lr = -0.1;
  CHECK_THROWS_AS(tc.validate(), UsageError);
  tc = tiny_config();
  tc.steps = 0;
  CHECK_THROWS_AS(tc.validate(), UsageError);
}

TEST_CASE("enhance_utterance identity checkpoint reproduces the input") {
  auto mc = model::ModelConfig::miniature();
  model::EnhancementModel<float> m(mc, 42);
  auto* enh = m.enhancer();
  std::fill(enh->fc_w->v.begin(), enh->fc_w->v.end(), 0.0f);
  std::fill(enh->fc_b->v.begin(), enh->fc_b->v.end(), 0.0f);
  m.set_training(false);

  Rng rng(43);
  auto noisy = random_wave(3200, rng);
  auto hint = random_wave(1600, rng);
  auto out = train::enhance_utterance(m, noisy, hint);

  // Output covers exactly the analysis span of the input.
  auto s = dsp::stft(noisy, mc.frame_len, mc.hop);
  CHECK(out.samples.size() == (s.frames - 1) * mc.hop + mc.frame_len);

  // Interior matches the input (sample 0 is unrecoverable: the periodic Hann
  // window is zero there).
  double num = 0, den = 0;
  for (std::size_t i = mc.frame_len; i + mc.frame_len < out.samples.size(); ++i) {
    const double d = out.samples[i] - noisy.samples[i];
    num += d * d;
    den += double(noisy.samples[i]) * noisy.samples[i];
  }
  CHECK(std::sqrt(num / den) < 1e-3);
}

TEST_CASE("enhance_utterance is batch-size invariant in eval mode") {
  auto mc = model::ModelConfig::miniature();
  model::EnhancementModel<float> m(mc, 44);
  m.set_training(false);
  Rng rng(45);
  auto noisy = random_wave(2400, rng);
  auto hint = random_wave(1600, rng);
  auto a = train::enhance_utterance(m, noisy, hint, 32);
  auto b = train::enhance_utterance(m, noisy, hint, 1);
  CHECK(a.samples == b.samples);
}

TEST_CASE("checkpoint round trip is bit-exact; corruption and mismatch refuse") {
  auto mc = model::ModelConfig::miniature();
  model::EnhancementModel<float> m(mc, 46);
  m.set_training(false);
  const auto path = fs::temp_directory_path() / "nc_test_ckpt.bin";
  train::save_checkpoint(path.string(), m, 17, 0.25);

  Rng rng(47);
  auto noisy = random_wave(2400, rng);
  auto hint = random_wave(1600, rng);
  auto before = train::enhance_utterance(m, noisy, hint);

  model::EnhancementModel<float> loaded(mc, 999);  // different init
  train::load_checkpoint(path.string(), loaded);
  loaded.set_training(false);
  auto after = train::enhance_utterance(loaded, noisy, hint);
  CHECK(before.samples == after.samples);

  auto meta = train::peek_checkpoint(path.string());
  CHECK(meta.step == 17);
  CHECK(meta.val_loss == 0.25);
  CHECK(meta.config_hash == mc.hash());

  // Different model config refuses to load.
  auto other = mc;
  other.use_noise_embedding = false;
  model::EnhancementModel<float> wrong(other, 1);
  CHECK_THROWS_AS(train::load_checkpoint(path.string(), wrong), ConfigMismatch);

  // Tampered header refuses to parse.
  {
    std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(2);
    f.put('X');
  }
  CHECK_THROWS_AS(train::load_checkpoint(path.string(), m), CorruptCheckpoint);
  fs::remove(path);
}

TEST_CASE("overfit probe shrinks the training loss quickly") {
  auto c = tiny_corpus();
  auto mc = model::ModelConfig::miniature();
  auto examples = train::fixed_examples(c.speech_in(corpus::Split::Train),
                                        c.noise_in(corpus::Split::Train),
                                        corpus::default_snrs(), mc, 8, 3);
  train::TrainConfig tc;
  tc.model = mc;
  tc.lr = 0.1;
  tc.batch_size = 8;
  tc.steps = 150;
  tc.eval_every = 150;
  tc.seed = 2;
  auto cursor = std::make_shared<std::size_t>(0);
  train::Sampler sampler = [examples, cursor](Rng&) {
    return examples[(*cursor)++ % examples.size()];
  };
  auto result = train::train(tc, sampler, examples);
  CHECK(result.last_train_loss < result.first_train_loss);
}
