#include <cmath>
#include <complex>
#include <vector>

#include "doctest.h"
#include "noisecond/dsp.hpp"
#include "noisecond/error.hpp"
#include "noisecond/rng.hpp"

using namespace nc;

namespace {

dsp::Waveform random_wave(std::size_t len, Rng& rng) {
  dsp::Waveform w;
  w.samples.resize(len);
  for (auto& s : w.samples) s = static_cast<float>(rng.uniform(-0.5, 0.5));
  return w;
}

double rel_rms(const std::vector<float>& a, const std::vector<float>& b,
               std::size_t lo, std::size_t hi) {
  double num = 0, den = 0;
  for (std::size_t i = lo; i < hi; ++i) {
    const double d = a[i] - b[i];
    num += d * d;
    den += double(a[i]) * a[i];
  }
  return std::sqrt(num / den);
}

}  // namespace

TEST_CASE("stft frame count and bins at defaults") {
  Rng rng(1);
  auto w = random_wave(16000, rng);
  auto s = dsp::stft(w);
  CHECK(s.frames == 98);  // 1 + (16000 - 400) / 160
  CHECK(s.bins == 201);
}

TEST_CASE("stft of silence has zero magnitude everywhere") {
  dsp::Waveform w;
  w.samples.assign(4000, 0.0f);
  auto s = dsp::stft(w);
  for (const auto& z : s.v) CHECK(std::abs(z) == 0.0f);
}

TEST_CASE("1 kHz sine peaks at bin 25 in every frame") {
  dsp::Waveform w;
  w.samples.resize(16000);
  for (std::size_t i = 0; i < w.samples.size(); ++i)
    w.samples[i] = 0.5f * std::sin(2.0 * M_PI * 1000.0 * i / 16000.0);
  auto s = dsp::stft(w);
  for (std::size_t t = 0; t < s.frames; ++t) {
    std::size_t best = 0;
    float best_mag = -1;
    for (std::size_t f = 0; f < s.bins; ++f) {
      const float m = std::abs(s.at(t, f));
      if (m > best_mag) {
        best_mag = m;
        best = f;
      }
    }
    CHECK(best == 25);  // 1000 * 400 / 16000
  }
}

TEST_CASE("log_magnitude closed forms and scalar oracle") {
  dsp::ComplexSpectrogram s;
  s.frames = 1;
  s.bins = 3;
  s.v = {{0.0f, 0.0f}, {1.0f - 1e-7f, 0.0f}, {0.3f, -0.4f}};
  auto lm = dsp::log_magnitude(s);
  CHECK(lm.at(0, 0) == doctest::Approx(-16.1181).epsilon(1e-4));
  CHECK(lm.at(0, 1) == doctest::Approx(0.0).epsilon(1e-6));

  Rng rng(2);
  dsp::ComplexSpectrogram r;
  r.frames = 4;
  r.bins = 9;
  r.v.resize(36);
  for (auto& z : r.v)
    z = {static_cast<float>(rng.uniform(-1, 1)),
         static_cast<float>(rng.uniform(-1, 1))};
  auto lr = dsp::log_magnitude(r);
  for (std::size_t i = 0; i < r.v.size(); ++i) {
    const float expect = std::log(std::abs(r.v[i]) + 1e-7f);
    CHECK(lr.v[i] == doctest::Approx(expect).epsilon(1e-6));
  }
}

TEST_CASE("phase closed forms and atan2 oracle") {
  dsp::ComplexSpectrogram s;
  s.frames = 1;
  s.bins = 3;
  s.v = {{2.0f, 0.0f}, {0.0f, 3.0f}, {0.0f, 0.0f}};
  auto ph = dsp::phase(s);
  CHECK(ph.at(0, 0) == doctest::Approx(0.0));
  CHECK(ph.at(0, 1) == doctest::Approx(M_PI / 2));
  CHECK(ph.at(0, 2) == doctest::Approx(0.0));  // zero bin maps to phase 0

  Rng rng(3);
  dsp::ComplexSpectrogram r;
  r.frames = 3;
  r.bins = 5;
  r.v.resize(15);
  for (auto& z : r.v)
    z = {static_cast<float>(rng.uniform(-1, 1)),
         static_cast<float>(rng.uniform(-1, 1))};
  auto pr = dsp::phase(r);
  for (std::size_t i = 0; i < r.v.size(); ++i)
    CHECK(pr.v[i] ==
          doctest::Approx(std::atan2(r.v[i].imag(), r.v[i].real())).epsilon(1e-5));
}

TEST_CASE("istft round trip reconstructs the interior") {
  Rng rng(4);
  for (int trial = 0; trial < 5; ++trial) {
    auto w = random_wave(6400, rng);
    auto s = dsp::stft(w);
    auto lm = dsp::log_magnitude(s);
    auto ph = dsp::phase(s);
    auto back = dsp::reconstruct(lm, ph);
    CHECK(back.samples.size() == (s.frames - 1) * s.hop + s.frame_len);
    CHECK(rel_rms(w.samples, back.samples, 400, back.samples.size() - 400) < 1e-3);
  }
}

TEST_CASE("istft of zero magnitudes is silence") {
  dsp::PhaseSpectrogram ph;
  ph.frames = 5;
  ph.bins = 201;
  ph.v.assign(5 * 201, 0.3f);
  std::vector<float> mag(5 * 201, 0.0f);
  auto w = dsp::istft(mag, ph, 400, 160);
  for (float s : w.samples) CHECK(s == 0.0f);
}

TEST_CASE("single-frame istft returns frame_len samples") {
  Rng rng(5);
  auto w = random_wave(400, rng);
  auto s = dsp::stft(w);
  CHECK(s.frames == 1);
  auto lm = dsp::log_magnitude(s);
  auto ph = dsp::phase(s);
  auto back = dsp::reconstruct(lm, ph);
  CHECK(back.samples.size() == 400);
  // Interior of the lone window survives the round trip.
  CHECK(rel_rms(w.samples, back.samples, 100, 300) < 1e-3);
}

TEST_CASE("reconstruct of the log-epsilon floor is silence") {
  dsp::LogMagSpectrogram lm;
  lm.frames = 4;
  lm.bins = 201;
  lm.v.assign(4 * 201, std::log(1e-7f));
  dsp::PhaseSpectrogram ph;
  ph.frames = 4;
  ph.bins = 201;
  ph.v.assign(4 * 201, 0.0f);
  auto w = dsp::reconstruct(lm, ph);
  for (float s : w.samples) CHECK(std::abs(s) < 1e-6f);
}

TEST_CASE("reconstruct rejects mismatched frame counts") {
  dsp::LogMagSpectrogram lm;
  lm.frames = 4;
  lm.bins = 201;
  lm.v.assign(4 * 201, 0.0f);
  dsp::PhaseSpectrogram ph;
  ph.frames = 3;
  ph.bins = 201;
  ph.v.assign(3 * 201, 0.0f);
  CHECK_THROWS_AS(dsp::reconstruct(lm, ph), ShapeError);
}

TEST_CASE("log_magnitude inverse path is exact on magnitudes") {
  Rng rng(6);
  for (int i = 0; i < 100; ++i) {
    const float m = static_cast<float>(rng.uniform(0.0, 2.0));
    const float x = std::log(m + 1e-7f);
    const float back = std::max(std::exp(x) - 1e-7f, 0.0f);
    CHECK(back == doctest::Approx(m).epsilon(1e-6));
  }
}
