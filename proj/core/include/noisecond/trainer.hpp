#ifndef NOISECOND_TRAINER_HPP
#define NOISECOND_TRAINER_HPP

#include <functional>
#include <memory>
#include <ostream>
#include <string>
#include <vector>

#include "noisecond/checkpoint.hpp"
#include "noisecond/corpus.hpp"
#include "noisecond/model.hpp"

namespace nc::train {

struct TrainConfig {
  double lr = 0.1;
  std::size_t batch_size = 32;
  std::size_t steps = 1000;
  std::uint64_t seed = 0;
  std::size_t eval_every = 100;
  std::string checkpoint_dir;  // empty: keep checkpoints in memory only
  model::ModelConfig model;
  std::vector<double> snr_set = corpus::default_snrs();
  std::size_t val_examples = 32;
  // On a NaN/Inf loss the run restarts from scratch with lr/2, up to
  // max_halvings times; after that the abort propagates.
  bool auto_halve_lr = true;
  std::size_t max_halvings = 3;

  void validate() const;
};

struct TrainResult {
  std::unique_ptr<model::EnhancementModel<float>> model;  // best-validation state
  double best_val_loss = 0.0;
  std::uint64_t best_step = 0;
  double first_train_loss = 0.0;
  double last_train_loss = 0.0;
  double final_lr = 0.0;
  std::size_t halvings = 0;
  std::vector<std::string> log_lines;  // deterministic structured log
  std::string best_path;  // empty when checkpoint_dir is empty
  std::string last_path;
};

using Sampler = std::function<corpus::TrainingExample(Rng&)>;

// Per step: sample a batch, forward, MSE against the clean frame, backward,
// SGD. Every eval_every steps the validation loss is computed in eval mode
// and the best state is retained.
TrainResult train(const TrainConfig& cfg, const Sampler& sampler,
                  const std::vector<corpus::TrainingExample>& val_examples,
                  std::ostream* progress = nullptr);

// Corpus-backed variant: random (utterance, noise, SNR) sampling from the
// train split, fixed validation examples from the valid split.
TrainResult train(const TrainConfig& cfg, const corpus::Corpus& corpus,
                  std::ostream* progress = nullptr);

// Corpus sampler with retry on too-short recordings.
Sampler make_corpus_sampler(const corpus::Corpus& corpus,
                            const model::ModelConfig& mc,
                            const std::vector<double>& snr_set);

// Deterministic fixed example set (used for validation and for held-out
// evaluation); retries recordings that are too short.
std::vector<corpus::TrainingExample> fixed_examples(
    const std::vector<const corpus::Recording*>& speech_set,
    const std::vector<const corpus::Recording*>& noise_set,
    const std::vector<double>& snr_set, const model::ModelConfig& mc,
    std::size_t count, std::uint64_t seed);

// Eval-mode mean squared error of the enhanced frame over a fixed set.
double eval_mse(model::EnhancementModel<float>& m,
                const std::vector<corpus::TrainingExample>& examples,
                std::size_t batch_size);

// Slides an n-frame window (hop 1 frame, reflect-padded edges) over the noisy
// spectrogram; each window emits its central enhanced frame. The noise
// embedding is computed once from the first r frames of the hint. Output is
// reconstructed with the noisy phase. The model must be in eval mode.
dsp::Waveform enhance_utterance(model::EnhancementModel<float>& m,
                                const dsp::Waveform& noisy,
                                const dsp::Waveform& noise_hint,
                                std::size_t batch_size = 32);

void save_checkpoint(const std::string& path, model::EnhancementModel<float>& m,
                     std::uint64_t step, double val_loss);

// Verifies the stored config hash against the model's; refuses mismatches.
void load_checkpoint(const std::string& path, model::EnhancementModel<float>& m);

}  // namespace nc::train

#endif
