#include "noisecond/trainer.hpp"

#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <filesystem>
#include <limits>
#include <map>

#include "noisecond/error.hpp"

namespace nc::train {
namespace {

using model::EnhancementModel;
using Model = EnhancementModel<float>;

std::string fmt(const char* format, ...) {
  char buf[256];
  va_list args;
  va_start(args, format);
  std::vsnprintf(buf, sizeof(buf), format, args);
  va_end(args);
  return buf;
}

// Stacks examples into the model's input tensors.
struct BatchTensors {
  ad::TensorPtr<float> noisy;   // B×1×n×F
  ad::TensorPtr<float> noise;   // B×1×r×F
  ad::TensorPtr<float> target;  // B×F
};

BatchTensors make_batch(const std::vector<const corpus::TrainingExample*>& exs,
                        const model::ModelConfig& mc) {
  const std::size_t B = exs.size(), n = mc.n, r = mc.r, F = mc.freq_bins;
  std::vector<float> noisy(B * n * F), noise(B * r * F), target(B * F);
  for (std::size_t b = 0; b < B; ++b) {
    const auto& ex = *exs[b];
    if (ex.noisy_segment.frames != n || ex.noisy_segment.bins != F ||
        ex.noise_segment.frames != r || ex.noise_segment.bins != F)
      throw ShapeError("training example does not match the model config");
    std::copy(ex.noisy_segment.v.begin(), ex.noisy_segment.v.end(),
              noisy.begin() + b * n * F);
    std::copy(ex.noise_segment.v.begin(), ex.noise_segment.v.end(),
              noise.begin() + b * r * F);
    std::copy(ex.clean_frame.begin(), ex.clean_frame.end(),
              target.begin() + b * F);
  }
  BatchTensors out;
  out.noisy = ad::make_tensor<float>({B, 1, n, F}, std::move(noisy));
  out.noise = ad::make_tensor<float>({B, 1, r, F}, std::move(noise));
  out.target = ad::make_tensor<float>({B, F}, std::move(target));
  return out;
}

std::vector<Blob> to_blobs(Model& m) {
  std::vector<Blob> blobs;
  for (auto& [name, p] : m.named_params()) {
    Blob b;
    b.name = name;
    b.shape.assign(p->shape.begin(), p->shape.end());
    b.data = p->v;
    blobs.push_back(std::move(b));
  }
  for (auto& [name, buf] : m.named_buffers()) {
    Blob b;
    b.name = name;
    b.shape = {buf->size()};
    b.data = *buf;
    blobs.push_back(std::move(b));
  }
  return blobs;
}

void from_blobs(Model& m, const std::vector<Blob>& blobs) {
  std::map<std::string, const Blob*> by_name;
  for (const auto& b : blobs) by_name[b.name] = &b;
  auto fetch = [&](const std::string& name, std::size_t want) -> const Blob& {
    auto it = by_name.find(name);
    if (it == by_name.end())
      throw CorruptCheckpoint("missing tensor '" + name + "'");
    if (it->second->data.size() != want)
      throw CorruptCheckpoint("tensor '" + name + "' has wrong size");
    return *it->second;
  };
  for (auto& [name, p] : m.named_params()) p->v = fetch(name, p->size()).data;
  for (auto& [name, buf] : m.named_buffers()) *buf = fetch(name, buf->size()).data;
}

double validation_loss(Model& m, const std::vector<corpus::TrainingExample>& val,
                       std::size_t batch_size) {
  m.set_training(false);
  double acc = 0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < val.size(); i += batch_size) {
    std::vector<const corpus::TrainingExample*> exs;
    for (std::size_t j = i; j < std::min(i + batch_size, val.size()); ++j)
      exs.push_back(&val[j]);
    auto batch = make_batch(exs, m.config());
    ad::Graph<float> g;
    auto pred = m.forward(g, batch.noisy, batch.noise);
    auto loss = g.mse_loss(pred, batch.target);
    acc += static_cast<double>(loss->v[0]) * exs.size();
    count += exs.size();
  }
  m.set_training(true);
  return acc / static_cast<double>(count);
}

enum class RunStatus { Done, NanAbort };

struct RunOutcome {
  RunStatus status = RunStatus::Done;
  std::uint64_t nan_step = 0;
};

RunOutcome run_training(const TrainConfig& cfg, double lr, const Sampler& sampler,
                        const std::vector<corpus::TrainingExample>& val,
                        TrainResult& result, std::ostream* progress) {
  auto m = std::make_unique<Model>(cfg.model, cfg.seed);
  auto params = m->params();
  Rng rng = Rng(cfg.seed).fork(0x7261696e);  // sampling stream

  std::vector<Blob> best_state;
  double best_val = std::numeric_limits<double>::infinity();
  std::uint64_t best_step = 0;
  bool have_val = !val.empty();

  for (std::size_t step = 1; step <= cfg.steps; ++step) {
    std::vector<corpus::TrainingExample> exs;
    std::vector<const corpus::TrainingExample*> ptrs;
    exs.reserve(cfg.batch_size);
    for (std::size_t b = 0; b < cfg.batch_size; ++b)
      exs.push_back(sampler(rng));
    for (const auto& ex : exs) ptrs.push_back(&ex);

    auto batch = make_batch(ptrs, cfg.model);
    ad::Graph<float> g;
    auto pred = m->forward(g, batch.noisy, batch.noise);
    auto loss = g.mse_loss(pred, batch.target);
    const double train_loss = loss->v[0];

    if (!std::isfinite(train_loss)) {
      result.log_lines.push_back(fmt("event=nan_abort step=%zu lr=%.9g",
                                     step, lr));
      return {RunStatus::NanAbort, step};
    }
    if (step == 1) result.first_train_loss = train_loss;
    result.last_train_loss = train_loss;

    g.backward(loss);
    ad::sgd_step(params, static_cast<float>(lr));
    ad::zero_grads(params);

    std::string line = fmt("step=%zu train_loss=%.9g", step, train_loss);
    if (have_val && (step % cfg.eval_every == 0 || step == cfg.steps)) {
      const double vl = validation_loss(*m, val, cfg.batch_size);
      line += fmt(" val_loss=%.9g", vl);
      if (vl < best_val) {
        best_val = vl;
        best_step = step;
        best_state = to_blobs(*m);
        if (!result.best_path.empty())
          write_checkpoint(result.best_path,
                           {1, cfg.model.hash(), step, vl}, best_state);
      }
    }
    result.log_lines.push_back(line);
    if (progress && (step % cfg.eval_every == 0 || step == cfg.steps))
      *progress << line << std::endl;
  }

  if (!have_val) {
    best_state = to_blobs(*m);
    best_val = result.last_train_loss;
    best_step = cfg.steps;
    if (!result.best_path.empty())
      write_checkpoint(result.best_path, {1, cfg.model.hash(), best_step, best_val},
                       best_state);
  }
  if (!result.last_path.empty())
    write_checkpoint(result.last_path,
                     {1, cfg.model.hash(), cfg.steps, result.last_train_loss},
                     to_blobs(*m));

  from_blobs(*m, best_state);
  result.model = std::move(m);
  result.best_val_loss = best_val;
  result.best_step = best_step;
  result.final_lr = lr;
  return {RunStatus::Done, 0};
}

}  // namespace

void TrainConfig::validate() const {
  if (lr < 0) throw UsageError("lr must be nonnegative");
  if (batch_size < 2) throw UsageError("batch_size must be >= 2 (batch norm)");
  if (steps == 0) throw UsageError("steps must be positive");
  if (eval_every == 0) throw UsageError("eval_every must be positive");
  model.validate();
}

TrainResult train(const TrainConfig& cfg, const Sampler& sampler,
                  const std::vector<corpus::TrainingExample>& val_examples,
                  std::ostream* progress) {
  cfg.validate();
  TrainResult result;
  if (!cfg.checkpoint_dir.empty()) {
    std::filesystem::create_directories(cfg.checkpoint_dir);
    result.best_path = (std::filesystem::path(cfg.checkpoint_dir) / "best.ckpt").string();
    result.last_path = (std::filesystem::path(cfg.checkpoint_dir) / "last.ckpt").string();
  }

  double lr = cfg.lr;
  std::size_t halvings = 0;
  while (true) {
    const auto outcome = run_training(cfg, lr, sampler, val_examples, result, progress);
    if (outcome.status == RunStatus::Done) break;
    if (!cfg.auto_halve_lr || halvings >= cfg.max_halvings)
      throw NumericFailure(fmt("loss became non-finite at step %zu (lr=%.9g)",
                               outcome.nan_step, lr));
    lr /= 2;
    ++halvings;
    result.log_lines.push_back(fmt("event=lr_halved lr=%.9g", lr));
    if (progress) *progress << result.log_lines.back() << std::endl;
  }
  result.halvings = halvings;
  return result;
}

Sampler make_corpus_sampler(const corpus::Corpus& corpus,
                            const model::ModelConfig& mc,
                            const std::vector<double>& snr_set) {
  auto speech = corpus.speech_in(corpus::Split::Train);
  auto noise = corpus.noise_in(corpus::Split::Train);
  if (speech.empty() || noise.empty())
    throw EmptyCorpus("training split has no speech or no noise");
  const corpus::FrameSpec fs{mc.frame_len, mc.hop};
  const std::size_t n = mc.n, r = mc.r;
  return [speech, noise, snr_set, fs, n, r](Rng& rng) {
    for (int attempt = 0; attempt < 64; ++attempt) {
      try {
        return corpus::sample_training_example(speech, noise, snr_set, n, r, fs, rng);
      } catch (const InputTooShort&) {
        // resample another recording
      }
    }
    throw InputTooShort("no recording in the corpus is long enough to sample");
  };
}

std::vector<corpus::TrainingExample> fixed_examples(
    const std::vector<const corpus::Recording*>& speech_set,
    const std::vector<const corpus::Recording*>& noise_set,
    const std::vector<double>& snr_set, const model::ModelConfig& mc,
    std::size_t count, std::uint64_t seed) {
  if (speech_set.empty() || noise_set.empty())
    throw EmptyCorpus("fixed_examples needs nonempty sets");
  const corpus::FrameSpec fs{mc.frame_len, mc.hop};
  Rng rng(seed);
  std::vector<corpus::TrainingExample> out;
  std::size_t failures = 0;
  while (out.size() < count) {
    try {
      out.push_back(corpus::sample_training_example(speech_set, noise_set,
                                                    snr_set, mc.n, mc.r, fs, rng));
    } catch (const InputTooShort&) {
      if (++failures > 64 * count)
        throw InputTooShort("could not assemble fixed example set");
    }
  }
  return out;
}

TrainResult train(const TrainConfig& cfg, const corpus::Corpus& corpus,
                  std::ostream* progress) {
  cfg.validate();
  auto sampler = make_corpus_sampler(corpus, cfg.model, cfg.snr_set);
  std::vector<corpus::TrainingExample> val;
  auto val_speech = corpus.speech_in(corpus::Split::Valid);
  auto val_noise = corpus.noise_in(corpus::Split::Valid);
  if (!val_speech.empty() && !val_noise.empty())
    val = fixed_examples(val_speech, val_noise, cfg.snr_set, cfg.model,
                         cfg.val_examples, Rng(cfg.seed).fork(0x76616c).next_u64());
  return train(cfg, sampler, val, progress);
}

double eval_mse(Model& m, const std::vector<corpus::TrainingExample>& examples,
                std::size_t batch_size) {
  if (examples.empty()) throw EmptyCorpus("eval_mse on an empty example set");
  const bool was_training = m.is_training();
  m.set_training(false);
  double acc = 0;
  for (std::size_t i = 0; i < examples.size(); i += batch_size) {
    std::vector<const corpus::TrainingExample*> exs;
    for (std::size_t j = i; j < std::min(i + batch_size, examples.size()); ++j)
      exs.push_back(&examples[j]);
    auto batch = make_batch(exs, m.config());
    ad::Graph<float> g;
    auto loss = g.mse_loss(m.forward(g, batch.noisy, batch.noise), batch.target);
    acc += static_cast<double>(loss->v[0]) * exs.size();
  }
  m.set_training(was_training);
  return acc / static_cast<double>(examples.size());
}

dsp::Waveform enhance_utterance(Model& m, const dsp::Waveform& noisy,
                                const dsp::Waveform& noise_hint,
                                std::size_t batch_size) {
  const auto& mc = m.config();
  const std::size_t n = mc.n, r = mc.r, F = mc.freq_bins;
  m.set_training(false);  // inference always runs on running statistics

  const auto noisy_spec = dsp::stft(noisy, mc.frame_len, mc.hop);
  const auto lm = dsp::log_magnitude(noisy_spec);
  const auto ph = dsp::phase(noisy_spec);
  const std::size_t T = lm.frames;

  if (noise_hint.size() < dsp::span_samples(r, mc.frame_len, mc.hop))
    throw InputTooShort("noise hint shorter than " + std::to_string(r) + " frames");
  const auto hint_lm = dsp::log_magnitude(dsp::stft(noise_hint, mc.frame_len, mc.hop));

  // Noise embedding from the first r frames of the hint, computed once.
  std::vector<float> emb_values;
  if (m.embedder()) {
    std::vector<float> hint_vals(hint_lm.v.begin(), hint_lm.v.begin() + r * F);
    ad::Graph<float> g;
    auto hint_t = ad::make_tensor<float>({1, 1, r, F}, std::move(hint_vals));
    emb_values = m.embed_noise(g, hint_t)->v;
  }

  // Reflect-padded frame index (period 2T-2).
  const std::size_t pad = n / 2;
  auto reflect = [T](std::ptrdiff_t j) -> std::size_t {
    if (T == 1) return 0;
    const std::ptrdiff_t period = 2 * static_cast<std::ptrdiff_t>(T) - 2;
    j = ((j % period) + period) % period;
    return static_cast<std::size_t>(j < static_cast<std::ptrdiff_t>(T) ? j : period - j);
  };

  dsp::LogMagSpectrogram out_lm;
  out_lm.frames = T;
  out_lm.bins = F;
  out_lm.frame_len = mc.frame_len;
  out_lm.hop = mc.hop;
  out_lm.v.resize(T * F);

  for (std::size_t t0 = 0; t0 < T; t0 += batch_size) {
    const std::size_t B = std::min(batch_size, T - t0);
    std::vector<float> win(B * n * F);
    for (std::size_t b = 0; b < B; ++b)
      for (std::size_t i = 0; i < n; ++i) {
        const std::size_t src = reflect(
            static_cast<std::ptrdiff_t>(t0 + b + i) - static_cast<std::ptrdiff_t>(pad));
        std::copy(lm.v.begin() + src * F, lm.v.begin() + (src + 1) * F,
                  win.begin() + (b * n + i) * F);
      }
    ad::Graph<float> g;
    auto noisy_t = ad::make_tensor<float>({B, 1, n, F}, std::move(win));
    ad::TensorPtr<float> pred;
    if (m.baseline() || !m.config().use_noise_embedding) {
      std::vector<float> hint_vals(B * r * F);
      for (std::size_t b = 0; b < B; ++b)
        std::copy(hint_lm.v.begin(), hint_lm.v.begin() + r * F,
                  hint_vals.begin() + b * r * F);
      auto hint_t = ad::make_tensor<float>({B, 1, r, F}, std::move(hint_vals));
      pred = m.forward(g, noisy_t, hint_t);
    } else {
      std::vector<float> emb(B * emb_values.size());
      for (std::size_t b = 0; b < B; ++b)
        std::copy(emb_values.begin(), emb_values.end(),
                  emb.begin() + b * emb_values.size());
      auto emb_t = ad::make_tensor<float>({B, emb_values.size()}, std::move(emb));
      pred = m.forward_with_embedding(g, noisy_t, emb_t);
    }
    std::copy(pred->v.begin(), pred->v.end(), out_lm.v.begin() + t0 * F);
  }

  return dsp::reconstruct(out_lm, ph, noisy.sample_rate);
}

void save_checkpoint(const std::string& path, Model& m, std::uint64_t step,
                     double val_loss) {
  write_checkpoint(path, {1, m.config().hash(), step, val_loss}, to_blobs(m));
}

void load_checkpoint(const std::string& path, Model& m) {
  auto [meta, blobs] = read_checkpoint(path);
  if (meta.config_hash != m.config().hash())
    throw ConfigMismatch("checkpoint " + path + " was written with a different model config");
  from_blobs(m, blobs);
}

}  // namespace nc::train
