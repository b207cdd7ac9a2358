#ifndef NOISECOND_DSP_HPP
#define NOISECOND_DSP_HPP

#include <complex>
#include <cstddef>
#include <string>
#include <vector>

namespace nc::dsp {

constexpr int kDefaultSampleRate = 16000;
constexpr std::size_t kDefaultFrameLen = 400;  // 25 ms at 16 kHz
constexpr std::size_t kDefaultHop = 160;       // 10 ms at 16 kHz
constexpr float kLogEps = 1e-7f;

struct Waveform {
  std::vector<float> samples;
  int sample_rate = kDefaultSampleRate;

  std::size_t size() const { return samples.size(); }
};

struct ComplexSpectrogram {
  std::size_t frames = 0;
  std::size_t bins = 0;
  std::vector<std::complex<float>> v;  // row-major frames × bins
  std::size_t frame_len = kDefaultFrameLen;
  std::size_t hop = kDefaultHop;
  std::string window_id = "hann";

  std::complex<float>& at(std::size_t t, std::size_t f) { return v[t * bins + f]; }
  const std::complex<float>& at(std::size_t t, std::size_t f) const { return v[t * bins + f]; }
};

struct LogMagSpectrogram {
  std::size_t frames = 0;
  std::size_t bins = 0;
  std::vector<float> v;
  std::size_t frame_len = kDefaultFrameLen;
  std::size_t hop = kDefaultHop;

  float& at(std::size_t t, std::size_t f) { return v[t * bins + f]; }
  float at(std::size_t t, std::size_t f) const { return v[t * bins + f]; }
};

struct PhaseSpectrogram {
  std::size_t frames = 0;
  std::size_t bins = 0;
  std::vector<float> v;  // radians in (-pi, pi]
  std::size_t frame_len = kDefaultFrameLen;
  std::size_t hop = kDefaultHop;

  float& at(std::size_t t, std::size_t f) { return v[t * bins + f]; }
  float at(std::size_t t, std::size_t f) const { return v[t * bins + f]; }
};

// Number of analysis frames for a signal of len samples; requires len >= frame_len.
inline std::size_t frame_count(std::size_t len, std::size_t frame_len, std::size_t hop) {
  return 1 + (len - frame_len) / hop;
}

// Samples covered by n consecutive frames.
inline std::size_t span_samples(std::size_t n_frames, std::size_t frame_len, std::size_t hop) {
  return (n_frames - 1) * hop + frame_len;
}

// Periodic Hann analysis window, frames starting at sample 0 (no centering).
// DFT runs in double internally; features are stored in 32-bit.
ComplexSpectrogram stft(const Waveform& w,
                        std::size_t frame_len = kDefaultFrameLen,
                        std::size_t hop = kDefaultHop);

// out[t,f] = ln(|s[t,f]| + 1e-7)
LogMagSpectrogram log_magnitude(const ComplexSpectrogram& s);

// out[t,f] = arg(s[t,f]); zero bins map to phase 0.
PhaseSpectrogram phase(const ComplexSpectrogram& s);

// Weighted overlap-add with Hann synthesis window and COLA normalization
// (summed squared window, floored at 1e-8). mag holds linear magnitudes.
Waveform istft(const std::vector<float>& mag, const PhaseSpectrogram& ph,
               std::size_t frame_len, std::size_t hop,
               int sample_rate = kDefaultSampleRate);

// Inverts the feature path: magnitude = max(exp(enh) - 1e-7, 0), then istft
// with the supplied phase.
Waveform reconstruct(const LogMagSpectrogram& enh, const PhaseSpectrogram& ph,
                     int sample_rate = kDefaultSampleRate);

}  // namespace nc::dsp

#endif
