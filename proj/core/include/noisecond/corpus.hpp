#ifndef NOISECOND_CORPUS_HPP
#define NOISECOND_CORPUS_HPP

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "noisecond/dsp.hpp"
#include "noisecond/rng.hpp"

namespace nc::corpus {

enum class Split { Train, Valid, Test };

std::string split_name(Split s);
Split split_from_name(const std::string& name);

struct Recording {
  std::string id;
  dsp::Waveform wav;
  Split split = Split::Train;
};

struct FrameSpec {
  std::size_t frame_len = dsp::kDefaultFrameLen;
  std::size_t hop = dsp::kDefaultHop;

  std::size_t bins() const { return frame_len / 2 + 1; }
};

struct TrainingExample {
  dsp::LogMagSpectrogram noisy_segment;   // n × bins
  dsp::LogMagSpectrogram noise_segment;   // r × bins, disjoint sample range
  std::vector<float> clean_frame;         // bins, central frame of the clean span
  std::vector<float> noisy_central_frame; // bins
  dsp::PhaseSpectrogram noisy_phase;      // n × bins
  double snr_db = 0.0;
  std::string noise_id;
  std::string speech_id;
};

struct EvalPair {
  dsp::Waveform clean;
  dsp::Waveform noisy;
  dsp::Waveform noise_segment;  // environment-only hint, disjoint from the mixed part
  double snr_db = 0.0;
  std::string speech_id;
  std::string noise_id;
};

inline const std::vector<double>& default_snrs() {
  static const std::vector<double> snrs = {0, 5, 10, 15, 20, 25};
  return snrs;
}

// Deterministic partition of ids by seeded shuffle; splits are disjoint and
// exhaustive. ratios are (train, valid, test) and must sum to 1.
std::map<std::string, Split> assign_splits(const std::vector<std::string>& ids,
                                           std::array<double, 3> ratios,
                                           std::uint64_t seed);

double rms(const dsp::Waveform& w);

// output = speech + g*noise with g = rms(speech) / (rms(noise) * 10^(snr/20)),
// RMS over the full segment. Lengths must match.
dsp::Waveform mix_at_snr(const dsp::Waveform& speech, const dsp::Waveform& noise,
                         double snr_db);

// Uniform random (utterance, noise recording, SNR) choice; the noise hint and
// the noise mixed into the noisy segment come from the same recording but
// from disjoint sample ranges.
TrainingExample sample_training_example(
    const std::vector<const Recording*>& speech_set,
    const std::vector<const Recording*>& noise_set,
    const std::vector<double>& snr_set, std::size_t n, std::size_t r,
    const FrameSpec& fs, Rng& rng);

// Fixed pairing for validation/test: deterministic given seed, SNRs assigned
// round-robin. Rejects noise recordings from the training split.
std::vector<EvalPair> build_eval_set(
    const std::vector<const Recording*>& speech_set,
    const std::vector<const Recording*>& noise_set,
    const std::vector<double>& snr_set, std::size_t r, const FrameSpec& fs,
    std::uint64_t seed);

// ---- Synthetic corpus -----------------------------------------------------

struct SynthConfig {
  std::size_t environments = 50;
  std::size_t utterances = 200;
  double speech_seconds = 1.5;
  double noise_seconds = 3.0;
  int sample_rate = dsp::kDefaultSampleRate;
  std::array<double, 3> speech_ratios = {0.8, 0.1, 0.1};
  std::array<double, 3> noise_ratios = {0.8, 0.1, 0.1};
  double tone_fraction = 0.5;  // remaining environments are band-limited noise
};

struct SynthCorpus {
  std::vector<Recording> speech;
  std::vector<Recording> noise;
};

// Harmonic comb "speech" with fundamental in [100, 300] Hz and a slow random
// amplitude envelope.
dsp::Waveform synth_speech(double f0_hz, double seconds, int sample_rate, Rng& rng);

// Environment signatures recoverable from a noise-only excerpt: a pure tone
// at an environment-specific frequency, or band-limited noise with an
// environment-specific passband.
dsp::Waveform synth_tone_noise(double freq_hz, double seconds, int sample_rate,
                               Rng& rng);
dsp::Waveform synth_band_noise(double center_hz, double width_hz, double seconds,
                               int sample_rate, Rng& rng);

SynthCorpus synth_corpus(const SynthConfig& cfg, std::uint64_t seed);

// ---- Disk layout ----------------------------------------------------------

struct Corpus {
  std::vector<Recording> speech;
  std::vector<Recording> noise;

  std::vector<const Recording*> speech_in(Split s) const;
  std::vector<const Recording*> noise_in(Split s) const;
};

// Writes WAVs plus a line-oriented manifest (id, path, split, kind).
void write_corpus(const std::string& dir, const SynthCorpus& corpus, bool force);

// Loads a manifest directory; verifies unique ids and split disjointness.
Corpus load_corpus(const std::string& dir);

}  // namespace nc::corpus

#endif
