#include "noisecond/dsp.hpp"

#include <cmath>
#include <map>
#include <memory>
#include <mutex>

#include "noisecond/error.hpp"

namespace nc::dsp {
namespace {

constexpr double kPi = 3.14159265358979323846;

struct DftPlan {
  std::size_t n;     // frame length
  std::size_t bins;  // n/2 + 1
  std::vector<double> window;  // periodic Hann
  std::vector<double> cos_t;   // bins × n
  std::vector<double> sin_t;

  explicit DftPlan(std::size_t frame_len)
      : n(frame_len), bins(frame_len / 2 + 1) {
    window.resize(n);
    for (std::size_t i = 0; i < n; ++i)
      window[i] = 0.5 - 0.5 * std::cos(2.0 * kPi * static_cast<double>(i) /
                                       static_cast<double>(n));
    cos_t.resize(bins * n);
    sin_t.resize(bins * n);
    for (std::size_t f = 0; f < bins; ++f)
      for (std::size_t i = 0; i < n; ++i) {
        const double a = 2.0 * kPi * static_cast<double>(f) *
                         static_cast<double>(i) / static_cast<double>(n);
        cos_t[f * n + i] = std::cos(a);
        sin_t[f * n + i] = std::sin(a);
      }
  }
};

// Plans are immutable once built; the cache mutex keeps concurrent callers safe.
const DftPlan& plan_for(std::size_t frame_len) {
  static std::mutex mu;
  static std::map<std::size_t, std::unique_ptr<DftPlan>> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto& slot = cache[frame_len];
  if (!slot) slot = std::make_unique<DftPlan>(frame_len);
  return *slot;
}

}  // namespace

ComplexSpectrogram stft(const Waveform& w, std::size_t frame_len, std::size_t hop) {
  if (frame_len % 2 != 0) throw ShapeError("stft frame_len must be even");
  if (w.size() < frame_len)
    throw InputTooShort("signal has " + std::to_string(w.size()) +
                        " samples, need at least " + std::to_string(frame_len));
  const DftPlan& plan = plan_for(frame_len);
  const std::size_t T = frame_count(w.size(), frame_len, hop);
  const std::size_t F = plan.bins;

  ComplexSpectrogram out;
  out.frames = T;
  out.bins = F;
  out.frame_len = frame_len;
  out.hop = hop;
  out.v.resize(T * F);

  std::vector<double> buf(frame_len);
  for (std::size_t t = 0; t < T; ++t) {
    const float* x = w.samples.data() + t * hop;
    for (std::size_t i = 0; i < frame_len; ++i)
      buf[i] = static_cast<double>(x[i]) * plan.window[i];
    for (std::size_t f = 0; f < F; ++f) {
      double re = 0, im = 0;
      const double* ct = plan.cos_t.data() + f * frame_len;
      const double* st = plan.sin_t.data() + f * frame_len;
      for (std::size_t i = 0; i < frame_len; ++i) {
        re += buf[i] * ct[i];
        im -= buf[i] * st[i];
      }
      out.v[t * F + f] = std::complex<float>(static_cast<float>(re),
                                             static_cast<float>(im));
    }
  }
  return out;
}

LogMagSpectrogram log_magnitude(const ComplexSpectrogram& s) {
  LogMagSpectrogram out;
  out.frames = s.frames;
  out.bins = s.bins;
  out.frame_len = s.frame_len;
  out.hop = s.hop;
  out.v.resize(s.v.size());
  for (std::size_t i = 0; i < s.v.size(); ++i)
    out.v[i] = std::log(std::abs(s.v[i]) + kLogEps);
  return out;
}

PhaseSpectrogram phase(const ComplexSpectrogram& s) {
  PhaseSpectrogram out;
  out.frames = s.frames;
  out.bins = s.bins;
  out.frame_len = s.frame_len;
  out.hop = s.hop;
  out.v.resize(s.v.size());
  for (std::size_t i = 0; i < s.v.size(); ++i) {
    const auto& z = s.v[i];
    out.v[i] = (z.real() == 0.0f && z.imag() == 0.0f)
                   ? 0.0f
                   : std::atan2(z.imag(), z.real());
  }
  return out;
}

Waveform istft(const std::vector<float>& mag, const PhaseSpectrogram& ph,
               std::size_t frame_len, std::size_t hop, int sample_rate) {
  const std::size_t F = frame_len / 2 + 1;
  if (ph.bins != F || mag.size() != ph.frames * ph.bins)
    throw ShapeError("istft magnitude/phase shape mismatch");
  const DftPlan& plan = plan_for(frame_len);
  const std::size_t T = ph.frames;
  const std::size_t out_len = span_samples(T, frame_len, hop);

  std::vector<double> acc(out_len, 0.0), den(out_len, 0.0);
  std::vector<double> re(F), im(F), frame(frame_len);
  for (std::size_t t = 0; t < T; ++t) {
    for (std::size_t f = 0; f < F; ++f) {
      const double m = mag[t * F + f];
      const double p = ph.v[t * F + f];
      re[f] = m * std::cos(p);
      im[f] = m * std::sin(p);
    }
    // Real inverse DFT from the half spectrum; DC and Nyquist appear once.
    for (std::size_t i = 0; i < frame_len; ++i) {
      double s = re[0];
      for (std::size_t f = 1; f + 1 < F; ++f)
        s += 2.0 * (re[f] * plan.cos_t[f * frame_len + i] -
                    im[f] * plan.sin_t[f * frame_len + i]);
      s += re[F - 1] * plan.cos_t[(F - 1) * frame_len + i] -
           im[F - 1] * plan.sin_t[(F - 1) * frame_len + i];
      frame[i] = s / static_cast<double>(frame_len);
    }
    for (std::size_t i = 0; i < frame_len; ++i) {
      acc[t * hop + i] += frame[i] * plan.window[i];
      den[t * hop + i] += plan.window[i] * plan.window[i];
    }
  }

  Waveform out;
  out.sample_rate = sample_rate;
  out.samples.resize(out_len);
  for (std::size_t i = 0; i < out_len; ++i)
    out.samples[i] = static_cast<float>(acc[i] / std::max(den[i], 1e-8));
  return out;
}

Waveform reconstruct(const LogMagSpectrogram& enh, const PhaseSpectrogram& ph,
                     int sample_rate) {
  if (enh.frames != ph.frames || enh.bins != ph.bins)
    throw ShapeError("reconstruct shape mismatch: magnitude " +
                     std::to_string(enh.frames) + "x" + std::to_string(enh.bins) +
                     " phase " + std::to_string(ph.frames) + "x" +
                     std::to_string(ph.bins));
  std::vector<float> mag(enh.v.size());
  for (std::size_t i = 0; i < enh.v.size(); ++i)
    mag[i] = std::max(std::exp(enh.v[i]) - kLogEps, 0.0f);
  return istft(mag, ph, enh.frame_len, enh.hop, sample_rate);
}

}  // namespace nc::dsp
